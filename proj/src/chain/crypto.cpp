#include "interop/chain/crypto.hpp"

#include <sodium.h>

#include <stdexcept>
#include <string>

#include "interop/common/digest.hpp"

namespace interop::chain {

Ed25519Scheme::Ed25519Scheme() {
  if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
}

KeyPair Ed25519Scheme::derive_keypair(std::span<const std::uint8_t> seed) const {
  const Digest s = sha256(seed);
  KeyPair kp;
  kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
  kp.secret_key.resize(crypto_sign_SECRETKEYBYTES);
  crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), s.bytes.data());
  return kp;
}

Bytes Ed25519Scheme::sign(const KeyPair& key, std::span<const std::uint8_t> msg) const {
  Bytes sig(crypto_sign_BYTES);
  crypto_sign_detached(sig.data(), nullptr, msg.data(), msg.size(), key.secret_key.data());
  return sig;
}

bool Ed25519Scheme::verify(std::span<const std::uint8_t> public_key,
                           std::span<const std::uint8_t> msg,
                           std::span<const std::uint8_t> sig) const {
  if (public_key.size() != crypto_sign_PUBLICKEYBYTES || sig.size() != crypto_sign_BYTES) {
    return false;
  }
  return crypto_sign_verify_detached(sig.data(), msg.data(), msg.size(), public_key.data()) == 0;
}

KeyPair TestScheme::derive_keypair(std::span<const std::uint8_t> seed) const {
  const Digest k = Hasher().update("test-scheme-key").update(seed).finish();
  Bytes key(k.bytes.begin(), k.bytes.end());
  return KeyPair{key, key};
}

Bytes TestScheme::sign(const KeyPair& key, std::span<const std::uint8_t> msg) const {
  const Digest d = Hasher().update(key.secret_key).update(msg).finish();
  return Bytes(d.bytes.begin(), d.bytes.end());
}

bool TestScheme::verify(std::span<const std::uint8_t> public_key,
                        std::span<const std::uint8_t> msg,
                        std::span<const std::uint8_t> sig) const {
  const Digest d = Hasher().update(public_key).update(msg).finish();
  return sig.size() == d.bytes.size() && std::equal(sig.begin(), sig.end(), d.bytes.begin());
}

std::shared_ptr<const SignatureScheme> make_scheme(std::string_view name) {
  static const auto ed = std::make_shared<const Ed25519Scheme>();
  static const auto test = std::make_shared<const TestScheme>();
  if (name == "ed25519") return ed;
  if (name == "test") return test;
  throw std::invalid_argument("unknown signature scheme: " + std::string(name));
}

}  // namespace interop::chain
