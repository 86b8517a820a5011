#pragma once

#include <memory>
#include <span>
#include <string_view>

#include "interop/common/bytes.hpp"

namespace interop::chain {

struct KeyPair {
  Bytes public_key;
  Bytes secret_key;
};

/// Abstract digital-signature scheme used for node keys.
class SignatureScheme {
 public:
  virtual ~SignatureScheme() = default;

  virtual std::string_view name() const = 0;
  /// Deterministic key derivation from arbitrary seed material.
  virtual KeyPair derive_keypair(std::span<const std::uint8_t> seed) const = 0;
  virtual Bytes sign(const KeyPair& key, std::span<const std::uint8_t> msg) const = 0;
  virtual bool verify(std::span<const std::uint8_t> public_key, std::span<const std::uint8_t> msg,
                      std::span<const std::uint8_t> sig) const = 0;
};

/// Ed25519 via libsodium.
class Ed25519Scheme final : public SignatureScheme {
 public:
  Ed25519Scheme();
  std::string_view name() const override { return "ed25519"; }
  KeyPair derive_keypair(std::span<const std::uint8_t> seed) const override;
  Bytes sign(const KeyPair& key, std::span<const std::uint8_t> msg) const override;
  bool verify(std::span<const std::uint8_t> public_key, std::span<const std::uint8_t> msg,
              std::span<const std::uint8_t> sig) const override;
};

/// Keyed-hash "signatures" for fast tests: the public key equals the secret,
/// so it offers no security against anyone holding the key directory.
class TestScheme final : public SignatureScheme {
 public:
  std::string_view name() const override { return "test"; }
  KeyPair derive_keypair(std::span<const std::uint8_t> seed) const override;
  Bytes sign(const KeyPair& key, std::span<const std::uint8_t> msg) const override;
  bool verify(std::span<const std::uint8_t> public_key, std::span<const std::uint8_t> msg,
              std::span<const std::uint8_t> sig) const override;
};

/// Returns a shared instance for "ed25519" or "test"; throws on other names.
std::shared_ptr<const SignatureScheme> make_scheme(std::string_view name);

}  // namespace interop::chain
