#pragma once

#include <memory>
#include <string>

#include "interop/auction/driver.hpp"
#include "interop/xbus/broker.hpp"

namespace testnet {

/// Ticket chain plus two coin chains with the auction contracts installed,
/// the ticket minted to the seller and every listed bidder funded.
struct AuctionNet {
  interop::sim::World world;
  std::unique_ptr<interop::auction::AuctionDriver> driver;

  explicit AuctionNet(std::uint64_t seed, interop::auction::AuctionConfig cfg = {},
                      interop::xbus::FaultProfile faults = {})
      : world(seed, interop::chain::make_scheme("test")) {
    world.add_chain(cfg.ticket_chain);
    for (const auto& c : cfg.bidder_chains) world.add_chain(c);
    world.bus().add_broker(std::make_unique<interop::xbus::Broker>("br0", faults, world.rng()));
    world.step();
    driver = std::make_unique<interop::auction::AuctionDriver>(world, cfg);
    world.step();
    driver->mint(cfg.ticket_id, cfg.seller);
  }

  interop::auction::AuctionDriver& d() { return *driver; }
  const interop::auction::AuctionConfig& cfg() const { return driver->config(); }

  void settle(std::uint64_t ticks = 3) {
    for (std::uint64_t i = 0; i < ticks; ++i) world.step();
  }

  interop::chain::Value bidder(const std::string& chain, const std::string& key) const {
    return world.chain(chain).read_state(std::string(interop::auction::kBidder) + "." + key);
  }
  interop::chain::Value auctioneer(const std::string& key) const {
    return world.chain(cfg().ticket_chain).read_state(std::string(interop::auction::kAuctioneer) + "." + key);
  }

  /// Starts an auction and waits until every Bidder chain has opened it.
  /// Returns the auction id, or "" if the start failed.
  std::string open(std::uint64_t window = 40, const std::string& caller = "") {
    const auto close = world.chain(cfg().ticket_chain).height() + window;
    const auto txn = driver->start(caller.empty() ? cfg().seller : caller, cfg().ticket_id, close);
    std::string aid;
    world.run_until(
        [&] {
          const auto id = driver->started_id(txn);
          if (!id) return world.chain(cfg().ticket_chain).find_receipt(txn).has_value();
          aid = *id;
          for (const auto& c : cfg().bidder_chains) {
            if (bidder(c, "auction.id") != interop::chain::Value::string(aid)) return false;
          }
          return true;
        },
        400);
    return aid;
  }

  std::int64_t num(const interop::chain::Value& v) const { return v.is_int() ? v.as_int() : 0; }

  /// sum(balance) + sum(escrow) over the Bidder namespace of one chain.
  std::int64_t holdings(const std::string& chain) const {
    std::int64_t total = 0;
    for (const auto& [k, v] : world.chain(chain).store().current()) {
      if (k.starts_with("Bidder.balance.") || k.starts_with("Bidder.escrow.")) total += num(v);
    }
    return total;
  }
};

}  // namespace testnet
