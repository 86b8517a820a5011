#include "interop/sim/world.hpp"

#include "interop/xchain/xtxn_contract.hpp"

namespace interop::sim {

World::World(std::uint64_t seed, std::shared_ptr<const chain::SignatureScheme> scheme, xbus::BusConfig bus)
    : rng_(seed), scheme_(std::move(scheme)), keys_(std::make_shared<xbus::KeyDirectory>(scheme_)) {
  bus_ = std::make_unique<xbus::Bus>(*keys_, rng_, bus);
  bus_->on_accept = [this](const xbus::SignedEventBatch& b) {
    for (auto& obs : accept_observers) obs(b);
  };
}

chain::Chain& World::add_chain(chain::ChainConfig cfg) {
  if (chains_.contains(cfg.chain_id)) {
    throw chain::ChainError(chain::ChainErrc::InvalidConfig, "duplicate chain id " + cfg.chain_id);
  }
  auto c = std::make_unique<chain::Chain>(std::move(cfg), scheme_);
  chain::Chain& ref = *c;
  xchain::install_xtxn(ref, keys_);
  keys_->add_chain(ref.id(), ref.config().f, ref.public_keys());
  bus_->add_chain(ref);
  chains_.emplace(ref.id(), std::move(c));
  return ref;
}

chain::Chain& World::add_chain(const std::string& id, std::uint32_t n, std::uint32_t f) {
  return add_chain(chain::ChainConfig::generate(id, n, f, *scheme_));
}

chain::Chain& World::chain(const std::string& id) { return *chains_.at(id); }
const chain::Chain& World::chain(const std::string& id) const { return *chains_.at(id); }

void World::step() {
  sched_.set_now(tick_);
  for (auto& [id, c] : chains_) bus_->deliver(*c, tick_);
  for (auto& [id, c] : chains_) {
    if (!c->has_pending()) continue;
    try {
      auto b = c->produce_block(tick_);
      if (!b) continue;
      bus_->on_block(*c, *b, tick_);
      for (auto& obs : block_observers) obs(*c, *b);
    } catch (const chain::ChainError& e) {
      if (e.code() != chain::ChainErrc::QuorumFailure) throw;
      ++quorum_failures_;
    }
  }
  bus_->step(tick_);
  sched_.poll();
  sched_.rethrow();
  ++tick_;
}

bool World::run_until(const std::function<bool()>& pred, std::uint64_t max_ticks) {
  const std::uint64_t limit = tick_ + max_ticks;
  while (!pred()) {
    if (tick_ >= limit) return false;
    step();
  }
  return true;
}

bool World::quiescent() const {
  for (const auto& [id, c] : chains_) {
    if (c->has_pending()) return false;
    for (const auto& b : bus_->brokers()) {
      if (b->queued(id) > 0) return false;
    }
  }
  return bus_->relay_backlog() == 0 && sched_.idle();
}

}  // namespace interop::sim
