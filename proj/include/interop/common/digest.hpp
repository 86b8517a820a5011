#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "interop/common/bytes.hpp"

namespace interop {

/// 32-byte SHA-256 digest.
struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  static Digest zero() { return {}; }
  static Digest from_span(std::span<const std::uint8_t> b);

  std::string hex() const { return to_hex(bytes); }
  std::span<const std::uint8_t> span() const { return bytes; }

  auto operator<=>(const Digest&) const = default;
};

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);

/// Incremental SHA-256.
class Hasher {
 public:
  Hasher();
  Hasher& update(std::span<const std::uint8_t> data);
  Hasher& update(std::string_view data);
  Hasher& update(const Digest& d) { return update(d.span()); }
  Digest finish();

 private:
  alignas(64) std::array<std::uint8_t, 128> state_{};
};

}  // namespace interop
