#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

#include "conles/errors.hpp"

namespace conles::detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::uint32_t parse_count(std::string_view text, const std::string& where) {
  const std::string t = trim(text);
  std::uint32_t n = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), n);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ParseError(where + ": expected a non-negative token count, got '" + t + "'");
  return n;
}

}  // namespace conles::detail
