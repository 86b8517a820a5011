#pragma once

#include <map>
#include <memory>
#include <string>

#include "interop/chain/crypto.hpp"
#include "interop/xbus/event.hpp"

namespace interop::xbus {

/// Out-of-band published node keys of every chain, used by consumers to
/// check batch signatures.
class KeyDirectory {
 public:
  struct Entry {
    std::uint32_t f = 0;
    std::map<std::string, Bytes> keys;
  };

  explicit KeyDirectory(std::shared_ptr<const chain::SignatureScheme> scheme) : scheme_(std::move(scheme)) {}

  void add_chain(const std::string& chain_id, std::uint32_t f, std::map<std::string, Bytes> keys);
  const Entry* find(const std::string& chain_id) const;
  const chain::SignatureScheme& scheme() const { return *scheme_; }

  /// Distinct signers of `chain_id` with a valid signature over `digest`.
  std::size_t valid_signers(const std::string& chain_id, const Digest& digest,
                            const std::vector<NodeSignature>& sigs) const;
  bool verify_signature(const std::string& chain_id, const std::string& node_id, const Digest& digest,
                        const Bytes& sig) const;
  /// At least f+1 valid signatures from the event's source chain.
  bool verify_batch(const SignedEventBatch& b) const;

 private:
  std::shared_ptr<const chain::SignatureScheme> scheme_;
  std::map<std::string, Entry> chains_;
};

}  // namespace interop::xbus
