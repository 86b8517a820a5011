#pragma once

#include <string>
#include <vector>

#include "interop/chain/contract.hpp"

namespace interop::auction {

inline constexpr const char* kBidder = "Bidder";
inline constexpr const char* kAuctioneer = "Auctioneer";

/// Bidder contract on a coin chain. Keys (relative):
///   balance.<user>, escrow.<user>       native currency
///   auction.id, auction.status, auction.close_height
///   auctions.<aid>                      height the auction opened here
///   bids.<user>, bidh.<user>            amount and bid height
///   bidders                             comma-separated users in bid order
///   closed.<aid>                        outcome recorded by the conclusion
///
/// Methods:
///   fund(user, amount)                  by the funding account
///   start_auction(aid, window)          by the Auctioneer's START event
///   submit_bid(aid, amount)             by a user; gated as Write on bids.<user>
class Bidder final : public chain::Contract {
 public:
  Bidder(std::string auctioneer_chain, std::string funder = "bank")
      : auctioneer_chain_(std::move(auctioneer_chain)), funder_(std::move(funder)) {}

  const std::string& id() const override { return id_; }
  policy::AccessRequest access_request(const std::string& method, const std::vector<chain::Value>& args,
                                       const chain::CallerRef& caller) const override;
  chain::Value call(chain::ExecContext& ctx, const std::string& method,
                    const std::vector<chain::Value>& args) override;

 private:
  std::string id_ = kBidder;
  std::string auctioneer_chain_;
  std::string funder_;
};

/// Auctioneer contract on the ticket chain. Keys (relative):
///   ticket.<tid>.owner, ticket.<tid>.escrowed
///   auction.<aid>.{ticket, seller, status, close_height, winner, amount}
///   winning_bids.<aid>                  winning amount in the winner's currency
///   next_id
///
/// Methods:
///   mint(tid, owner)                    by the registry owner
///   start_auction(tid, close_height)    by the ticket owner; emits START to
///                                       every Bidder chain
class Auctioneer final : public chain::Contract {
 public:
  Auctioneer(std::vector<std::string> bidder_chains, std::string minter = "admin")
      : bidder_chains_(std::move(bidder_chains)), minter_(std::move(minter)) {}

  const std::string& id() const override { return id_; }
  chain::Value call(chain::ExecContext& ctx, const std::string& method,
                    const std::vector<chain::Value>& args) override;

 private:
  std::string id_ = kAuctioneer;
  std::vector<std::string> bidder_chains_;
  std::string minter_;
};

/// Policy attached to every Bidder: the bid rule, the start-rate rule, the
/// funding rule and the Auctioneer's cross-chain access.
std::string bidder_policy(const std::string& auctioneer_chain, const std::string& funder = "bank");
/// Policy attached to the Auctioneer: open methods plus the aggregate rule.
std::string auctioneer_policy(const std::string& ticket_chain);

std::vector<std::string> split_list(const std::string& csv);

}  // namespace interop::auction
