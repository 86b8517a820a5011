#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "interop/chain/chain.hpp"
#include "interop/common/rng.hpp"
#include "interop/xbus/broker.hpp"
#include "interop/xbus/gateway.hpp"
#include "interop/xbus/key_directory.hpp"

namespace interop::xbus {

struct ConsumerStats {
  std::uint64_t received = 0;
  std::uint64_t malformed = 0;
  std::uint64_t misrouted = 0;
  std::uint64_t invalid = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t accepted = 0;
};

/// Stateless batch filter: decodes, drops batches for other topics, drops
/// (source_chain, nonce) pairs that `seen` reports or that repeat within
/// `raw`, and keeps only batches with f+1 valid source-chain signatures.
std::vector<SignedEventBatch> consume(const std::string& chain_id, const std::vector<Bytes>& raw,
                                      const KeyDirectory& keys,
                                      const std::function<bool(const std::string&, std::uint64_t)>& seen,
                                      ConsumerStats& stats);

/// Deterministic stand-in for what a set of nodes colluding under
/// ForgeEvents would sign: same route, fabricated payload, nonce in a range
/// honest chains never use.
Event forge_event(const Event& e);

struct BusConfig {
  /// Nodes resend unacknowledged signatures this often...
  std::uint64_t retransmit_interval = 5;
  /// ...at most this many times per event.
  std::uint32_t relay_attempts = 8;
  GatewayConfig gateway;
};

struct BusStats {
  std::uint64_t events_emitted = 0;
  std::uint64_t node_signatures = 0;
  std::uint64_t forged_signatures = 0;
  std::uint64_t relay_retransmits = 0;
  std::uint64_t batches_published = 0;
  ConsumerStats consumer;
};

/// Node relays, per-chain gateways, brokers and consumers for every chain of
/// a simulation.
class Bus {
 public:
  Bus(const KeyDirectory& keys, Rng& rng, BusConfig cfg = {}) : keys_(&keys), rng_(&rng), cfg_(cfg) {}

  void add_chain(chain::Chain& c);
  Broker& add_broker(std::unique_ptr<Broker> b);
  const std::vector<std::unique_ptr<Broker>>& brokers() const { return brokers_; }
  Gateway& gateway(const std::string& chain_id);

  /// Every node signs each event of a freshly certified block according to
  /// its behaviour and queues the signature for the gateway.
  void on_block(const chain::Chain& c, const chain::CertifiedBlock& b, std::uint64_t tick);
  /// Relays forward signatures, gateways batch and publish to every broker.
  void step(std::uint64_t tick);
  /// Pulls the chain's topic from every broker and enqueues accepted events.
  std::vector<SignedEventBatch> deliver(chain::Chain& c, std::uint64_t tick);

  /// Sees every batch whose event entered an inbox.
  std::function<void(const SignedEventBatch&)> on_accept;

  const BusStats& stats() const { return stats_; }
  std::size_t relay_backlog() const;

 private:
  struct RelayEntry {
    Event event;
    std::string node;
    Bytes sig;
    std::uint64_t next = 0;
    std::uint32_t attempts = 0;
  };
  struct Slot {
    chain::Chain* chain = nullptr;
    std::unique_ptr<Gateway> gateway;
    std::vector<RelayEntry> relay;
  };

  void publish(const SignedEventBatch& b, std::uint64_t tick);

  const KeyDirectory* keys_;
  Rng* rng_;
  BusConfig cfg_;
  std::map<std::string, Slot> slots_;
  std::vector<std::unique_ptr<Broker>> brokers_;
  BusStats stats_;
};

}  // namespace interop::xbus
