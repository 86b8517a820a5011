#include "interop/common/digest.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>

namespace interop {

static_assert(sizeof(crypto_hash_sha256_state) <= 128, "hasher state buffer too small");

namespace {

crypto_hash_sha256_state* as_state(std::array<std::uint8_t, 128>& buf) {
  return reinterpret_cast<crypto_hash_sha256_state*>(buf.data());
}

}  // namespace

Digest Digest::from_span(std::span<const std::uint8_t> b) {
  if (b.size() != 32) throw DecodeError("digest must be 32 bytes");
  Digest d;
  std::memcpy(d.bytes.data(), b.data(), 32);
  return d;
}

Digest sha256(std::span<const std::uint8_t> data) {
  Digest d;
  crypto_hash_sha256(d.bytes.data(), data.data(), data.size());
  return d;
}

Digest sha256(std::string_view data) {
  Digest d;
  crypto_hash_sha256(d.bytes.data(), reinterpret_cast<const unsigned char*>(data.data()),
                     data.size());
  return d;
}

Hasher::Hasher() { crypto_hash_sha256_init(as_state(state_)); }

Hasher& Hasher::update(std::span<const std::uint8_t> data) {
  crypto_hash_sha256_update(as_state(state_), data.data(), data.size());
  return *this;
}

Hasher& Hasher::update(std::string_view data) {
  crypto_hash_sha256_update(as_state(state_), reinterpret_cast<const unsigned char*>(data.data()),
                            data.size());
  return *this;
}

Digest Hasher::finish() {
  Digest d;
  crypto_hash_sha256_final(as_state(state_), d.bytes.data());
  return d;
}

}  // namespace interop
