#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace interop::auction {

/// Positive exchange rate num/den into the common unit.
struct Rate {
  std::int64_t num = 1;
  std::int64_t den = 1;

  /// Parses "3/2" or "2".
  static Rate parse(const std::string& text);
  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
  bool operator==(const Rate&) const = default;
};

/// amount * rate, kept as an exact fraction.
struct Normalized {
  __int128 num = 0;
  __int128 den = 1;

  static Normalized of(std::int64_t amount, const Rate& r) { return {__int128(amount) * r.num, r.den}; }

  std::strong_ordering operator<=>(const Normalized& o) const {
    const __int128 l = num * o.den;
    const __int128 r = o.num * den;
    return l <=> r;
  }
  bool operator==(const Normalized& o) const { return (*this <=> o) == std::strong_ordering::equal; }
};

}  // namespace interop::auction
