#include "interop/xbus/gateway.hpp"

#include <algorithm>

namespace interop::xbus {

Gateway::Outcome Gateway::collect(const Event& e, const std::string& node_id, const Bytes& sig,
                                  std::uint64_t tick) {
  if (!up(tick)) {
    ++stats_.refused_while_down;
    return {};
  }
  ++stats_.received;
  const Digest d = e.digest();
  if (emitted_.contains(d) || done_.contains(d)) return {true, std::nullopt};
  if (const auto it = pending_.find(d); it != pending_.end()) {
    const auto& sigs = it->second.sigs;
    const bool known = std::any_of(sigs.begin(), sigs.end(),
                                   [&](const NodeSignature& s) { return s.node_id == node_id; });
    if (known) return {};
  }
  if (e.source_chain != chain_id_ || !keys_->verify_signature(chain_id_, node_id, d, sig)) {
    ++stats_.invalid_signatures;
    return {true, std::nullopt};
  }
  auto [it, fresh] = pending_.try_emplace(d);
  Pending& p = it->second;
  if (fresh) {
    p.event = e;
    p.first_seen = tick;
  }
  p.sigs.push_back({node_id, sig});
  if (p.sigs.size() < f_ + 1) return {};

  SignedEventBatch batch{std::move(p.event), std::move(p.sigs)};
  pending_.erase(it);
  ++stats_.emitted;
  emitted_[d] = {batch, tick + cfg_.republish_base, 0};
  return {true, std::move(batch)};
}

std::vector<SignedEventBatch> Gateway::step(std::uint64_t tick) {
  std::vector<SignedEventBatch> out;
  if (!up(tick)) return out;
  for (auto it = emitted_.begin(); it != emitted_.end();) {
    Emitted& em = it->second;
    if (em.next > tick) {
      ++it;
      continue;
    }
    out.push_back(em.batch);
    ++stats_.republished;
    ++em.sent;
    if (em.sent >= cfg_.republish_limit) {
      done_.insert(it->first);
      it = emitted_.erase(it);
    } else {
      em.next = tick + (cfg_.republish_base << em.sent);
      ++it;
    }
  }
  for (auto it = pending_.begin(); it != pending_.end();) {
    if (tick - it->second.first_seen >= cfg_.timeout) {
      ++stats_.expired;
      it = pending_.erase(it);
    } else {
      ++it;
    }
  }
  return out;
}

void Gateway::crash(std::uint64_t until) {
  down_until_ = until;
  pending_.clear();
  emitted_.clear();
  done_.clear();
}

}  // namespace interop::xbus
