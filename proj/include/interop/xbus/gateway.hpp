#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "interop/xbus/event.hpp"
#include "interop/xbus/key_directory.hpp"

namespace interop::xbus {

struct GatewayConfig {
  /// Ticks a below-threshold entry is kept.
  std::uint64_t timeout = 30;
  /// An emitted batch is republished after base, 2*base, 4*base, ... ticks.
  std::uint64_t republish_base = 6;
  std::uint32_t republish_limit = 4;
};

struct GatewayStats {
  std::uint64_t received = 0;
  std::uint64_t invalid_signatures = 0;
  std::uint64_t emitted = 0;
  std::uint64_t republished = 0;
  std::uint64_t expired = 0;
  std::uint64_t refused_while_down = 0;
};

/// Per-chain relay that batches node signatures. It holds no keys, so it can
/// censor but never forge.
class Gateway {
 public:
  Gateway(std::string chain_id, std::uint32_t f, const KeyDirectory& keys, GatewayConfig cfg = {})
      : chain_id_(std::move(chain_id)), f_(f), keys_(&keys), cfg_(cfg) {}

  struct Outcome {
    /// The digest was emitted or the signature rejected; stop retransmitting.
    bool acked = false;
    std::optional<SignedEventBatch> batch;
  };

  /// Emits a batch exactly once, when f+1 distinct valid signatures over the
  /// event's digest have arrived.
  Outcome collect(const Event& e, const std::string& node_id, const Bytes& sig, std::uint64_t tick);

  /// Batches due for republication; also expires stale pending entries.
  std::vector<SignedEventBatch> step(std::uint64_t tick);

  /// Loses all state; signatures arriving before `until` are refused.
  void crash(std::uint64_t until);
  bool up(std::uint64_t tick) const { return tick >= down_until_; }

  const GatewayStats& stats() const { return stats_; }
  std::size_t pending() const { return pending_.size(); }

 private:
  struct Pending {
    Event event;
    std::vector<NodeSignature> sigs;
    std::uint64_t first_seen = 0;
  };
  struct Emitted {
    SignedEventBatch batch;
    std::uint64_t next = 0;
    std::uint32_t sent = 0;
  };

  std::string chain_id_;
  std::uint32_t f_;
  const KeyDirectory* keys_;
  GatewayConfig cfg_;
  std::uint64_t down_until_ = 0;
  std::map<Digest, Pending> pending_;
  std::map<Digest, Emitted> emitted_;
  std::set<Digest> done_;
  GatewayStats stats_;
};

}  // namespace interop::xbus
