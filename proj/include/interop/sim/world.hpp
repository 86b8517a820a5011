#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "interop/chain/chain.hpp"
#include "interop/common/rng.hpp"
#include "interop/sim/scheduler.hpp"
#include "interop/sim/task.hpp"
#include "interop/xbus/bus.hpp"
#include "interop/xbus/key_directory.hpp"

namespace interop::sim {

class MaxTicksExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One simulation instance: chains, bus, scheduler and the seeded generator,
/// advanced by a global integer tick.
///
/// A tick runs, in order: broker delivery into every inbox (chains in id
/// order), block production for chains with pending work, the bus step
/// (node relays, gateways, publication), then parked coroutines.
class World {
 public:
  World(std::uint64_t seed, std::shared_ptr<const chain::SignatureScheme> scheme, xbus::BusConfig bus = {});
  World(const World&) = delete;
  World& operator=(const World&) = delete;

  /// Throws ChainError(InvalidConfig) for a duplicate id.
  chain::Chain& add_chain(chain::ChainConfig cfg);
  chain::Chain& add_chain(const std::string& id, std::uint32_t n = 4, std::uint32_t f = 1);
  chain::Chain& chain(const std::string& id);
  const chain::Chain& chain(const std::string& id) const;
  bool has_chain(const std::string& id) const { return chains_.contains(id); }
  const std::map<std::string, std::unique_ptr<chain::Chain>>& chains() const { return chains_; }

  const chain::SignatureScheme& scheme() const { return *scheme_; }
  std::shared_ptr<const chain::SignatureScheme> scheme_ptr() const { return scheme_; }
  const xbus::KeyDirectory& keys() const { return *keys_; }
  std::shared_ptr<const xbus::KeyDirectory> keys_ptr() const { return keys_; }
  xbus::Bus& bus() { return *bus_; }
  const xbus::Bus& bus() const { return *bus_; }
  Rng& rng() { return rng_; }
  Scheduler& sched() { return sched_; }
  std::uint64_t tick() const { return tick_; }

  void step();
  /// Steps until `pred` holds; false if `max_ticks` more ticks pass first.
  bool run_until(const std::function<bool()>& pred, std::uint64_t max_ticks);
  /// No chain has pending work, no relay signature or broker message is in
  /// flight and no coroutine is parked.
  bool quiescent() const;

  /// Drives a task to completion. Throws MaxTicksExceeded if it has not
  /// finished within `max_ticks`.
  template <typename T>
  T run(Task<T> task, std::uint64_t max_ticks = 100000) {
    task.start();
    const std::uint64_t limit = tick_ + max_ticks;
    while (!task.done()) {
      if (tick_ >= limit) throw MaxTicksExceeded("task unfinished after " + std::to_string(max_ticks) + " ticks");
      step();
    }
    return task.result();
  }

  std::vector<std::function<void(const chain::Chain&, const chain::CertifiedBlock&)>> block_observers;
  std::vector<std::function<void(const xbus::SignedEventBatch&)>> accept_observers;

  std::uint64_t quorum_failures() const { return quorum_failures_; }

 private:
  Rng rng_;
  std::shared_ptr<const chain::SignatureScheme> scheme_;
  std::shared_ptr<xbus::KeyDirectory> keys_;
  std::unique_ptr<xbus::Bus> bus_;
  Scheduler sched_;
  std::map<std::string, std::unique_ptr<chain::Chain>> chains_;
  std::uint64_t tick_ = 0;
  std::uint64_t quorum_failures_ = 0;
};

}  // namespace interop::sim
