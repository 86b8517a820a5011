#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "interop/auction/contracts.hpp"
#include "interop/auction/rational.hpp"
#include "interop/sim/world.hpp"
#include "interop/xchain/coordinator.hpp"

namespace interop::auction {

struct AuctionConfig {
  std::string ticket_chain = "ticket";
  std::vector<std::string> bidder_chains = {"coinB", "coinC"};
  std::map<std::string, Rate> rates = {{"coinB", {1, 2}}, {"coinC", {3, 2}}};
  std::string seller = "alice";
  std::string ticket_id = "t1";
  /// User that owns the Auctioneer contract and runs its coordinator.
  std::string operator_id = "auctioneer";
  std::string funder = "bank";
  xchain::Mode mode = xchain::Mode::Occ;
  xchain::XConfig xcfg;
  /// Attempts of the conclude transaction before giving up.
  std::uint32_t conclude_attempts = 6;
  std::uint64_t conclude_backoff = 10;
};

struct BidView {
  std::string chain;
  std::string user;
  std::int64_t amount = 0;
  std::uint64_t height = 0;
};

/// Highest normalized bid; ties go to the lower bid height, then the smaller
/// (chain, user).
std::optional<BidView> select_winner(const std::vector<BidView>& bids, const std::map<std::string, Rate>& rates);

enum class ConcludeStatus { Concluded, Cancelled, NotOpen, Aborted };

std::string_view conclude_status_name(ConcludeStatus s);

struct ConcludeResult {
  ConcludeStatus status = ConcludeStatus::Aborted;
  std::optional<BidView> winner;
  std::uint32_t attempts = 0;
  /// Abort reasons of failed attempts, in order.
  std::vector<std::string> aborts;
  /// Transaction id of the final attempt.
  std::string txn_id;
  /// Dependent read round trips of the final attempt.
  std::uint32_t read_trips = 0;
};

/// Sets up the three-chain auction on an existing world and drives it.
class AuctionDriver {
 public:
  /// Registers the contracts and attaches policies; chains must exist.
  AuctionDriver(sim::World& world, AuctionConfig cfg);

  const AuctionConfig& config() const { return cfg_; }
  xchain::Coordinator& coordinator() { return *coord_; }

  Digest mint(const std::string& ticket, const std::string& owner);
  Digest fund(const std::string& chain, const std::string& user, std::int64_t amount);
  Digest start(const std::string& caller, const std::string& ticket, std::uint64_t close_height);
  Digest bid(const std::string& chain, const std::string& user, const std::string& aid, std::int64_t amount);

  /// Auction id opened by a start transaction, once committed.
  std::optional<std::string> started_id(const Digest& start_txn) const;

  /// Runs the conclude transaction, retrying aborted attempts.
  sim::Task<ConcludeResult> conclude(std::string aid);

  /// Called right after the conclude transaction has read a Bidder chain's
  /// bidder list, before prepare. Used to inject late bids.
  std::function<void(const std::string& chain)> after_bidders_read;

 private:
  sim::Task<ConcludeResult> attempt(std::string aid);

  sim::World& world_;
  AuctionConfig cfg_;
  std::unique_ptr<xchain::Coordinator> coord_;
};

}  // namespace interop::auction
