#include "interop/xbus/key_directory.hpp"

#include <set>

namespace interop::xbus {

void KeyDirectory::add_chain(const std::string& chain_id, std::uint32_t f, std::map<std::string, Bytes> keys) {
  chains_[chain_id] = {f, std::move(keys)};
}

const KeyDirectory::Entry* KeyDirectory::find(const std::string& chain_id) const {
  const auto it = chains_.find(chain_id);
  return it == chains_.end() ? nullptr : &it->second;
}

bool KeyDirectory::verify_signature(const std::string& chain_id, const std::string& node_id,
                                    const Digest& digest, const Bytes& sig) const {
  const Entry* e = find(chain_id);
  if (!e) return false;
  const auto it = e->keys.find(node_id);
  return it != e->keys.end() && scheme_->verify(it->second, digest.span(), sig);
}

std::size_t KeyDirectory::valid_signers(const std::string& chain_id, const Digest& digest,
                                        const std::vector<NodeSignature>& sigs) const {
  std::set<std::string> ok;
  for (const auto& s : sigs) {
    if (ok.contains(s.node_id)) continue;
    if (verify_signature(chain_id, s.node_id, digest, s.signature)) ok.insert(s.node_id);
  }
  return ok.size();
}

bool KeyDirectory::verify_batch(const SignedEventBatch& b) const {
  const Entry* e = find(b.event.source_chain);
  if (!e) return false;
  // Stop verifying once the threshold is reached.
  const Digest d = b.event.digest();
  std::set<std::string> ok;
  for (const auto& s : b.signatures) {
    if (ok.size() > e->f) break;
    if (ok.contains(s.node_id)) continue;
    if (verify_signature(b.event.source_chain, s.node_id, d, s.signature)) ok.insert(s.node_id);
  }
  return ok.size() >= e->f + 1;
}

}  // namespace interop::xbus
