#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace conles {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A net definition breaks one or more structural invariants.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid net:";
    for (const auto& s : v) out += " " + s + ";";
    return out;
  }
  std::vector<std::string> violations_;
};

class NotEnabled : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// Raised when a search or reachability exploration would store more than
/// the configured number of states.
class StateCapExceeded : public Error {
 public:
  explicit StateCapExceeded(std::size_t cap)
      : Error("state cap exceeded (" + std::to_string(cap) + " states)"), cap_(cap) {}
  std::size_t cap() const { return cap_; }

 private:
  std::size_t cap_;
};

class Timeout : public Error {
 public:
  using Error::Error;
  Timeout() : Error("timeout") {}
};

/// The model final marking cannot be reached from the queried marking.
class DeadMarking : public Error {
 public:
  using Error::Error;
};

/// The model final marking is unreachable from the model initial marking.
class Infeasible : public Error {
 public:
  using Error::Error;
};

class NoAlignment : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class GenerationStuck : public Error {
 public:
  using Error::Error;
};

}  // namespace conles
