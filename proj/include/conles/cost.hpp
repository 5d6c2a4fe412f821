#pragma once

#include <compare>
#include <cstdint>
#include <ostream>

namespace conles {

/// Alignment cost with an infinitesimal component.
///
/// `unit` counts log moves and visible model moves (cost 1 each); `silent`
/// counts silent model moves, each worth an epsilon that is smaller than any
/// positive unit cost. Comparison is lexicographic, so no floating-point
/// epsilon is needed.
struct Cost {
  std::uint64_t unit = 0;
  std::uint64_t silent = 0;

  constexpr auto operator<=>(const Cost&) const = default;

  constexpr Cost& operator+=(const Cost& other) {
    unit += other.unit;
    silent += other.silent;
    return *this;
  }

  friend constexpr Cost operator+(Cost a, const Cost& b) { return a += b; }

  static constexpr Cost units(std::uint64_t n) { return Cost{n, 0}; }
  static constexpr Cost epsilon() { return Cost{0, 1}; }

  friend std::ostream& operator<<(std::ostream& os, const Cost& c) {
    return os << "(" << c.unit << "," << c.silent << ")";
  }
};

}  // namespace conles
