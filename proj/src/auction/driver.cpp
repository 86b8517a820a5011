#include "interop/auction/driver.hpp"

#include <algorithm>
#include <tuple>

namespace interop::auction {

using chain::CallerRef;
using chain::Value;
using xchain::XchainError;

std::optional<BidView> select_winner(const std::vector<BidView>& bids, const std::map<std::string, Rate>& rates) {
  std::optional<BidView> best;
  std::optional<Normalized> best_n;
  for (const auto& b : bids) {
    const auto n = Normalized::of(b.amount, rates.at(b.chain));
    bool take = !best;
    if (!take) {
      const auto c = n <=> *best_n;
      if (c > 0) {
        take = true;
      } else if (c == 0) {
        take = std::tie(b.height, b.chain, b.user) < std::tie(best->height, best->chain, best->user);
      }
    }
    if (take) {
      best = b;
      best_n = n;
    }
  }
  return best;
}

std::string_view conclude_status_name(ConcludeStatus s) {
  switch (s) {
    case ConcludeStatus::Concluded: return "Concluded";
    case ConcludeStatus::Cancelled: return "Cancelled";
    case ConcludeStatus::NotOpen: return "NotOpen";
    case ConcludeStatus::Aborted: return "Aborted";
  }
  return "?";
}

AuctionDriver::AuctionDriver(sim::World& world, AuctionConfig cfg) : world_(world), cfg_(std::move(cfg)) {
  for (const auto& c : cfg_.bidder_chains) {
    if (!cfg_.rates.contains(c)) throw std::invalid_argument("no exchange rate for " + c);
  }
  auto& ticket = world_.chain(cfg_.ticket_chain);
  ticket.register_contract(std::make_shared<Auctioneer>(cfg_.bidder_chains), cfg_.operator_id);
  ticket.attach_policy(kAuctioneer, auctioneer_policy(cfg_.ticket_chain), cfg_.operator_id);
  for (const auto& c : cfg_.bidder_chains) {
    auto& ch = world_.chain(c);
    ch.register_contract(std::make_shared<Bidder>(cfg_.ticket_chain, cfg_.funder), "admin");
    ch.attach_policy(kBidder, bidder_policy(cfg_.ticket_chain, cfg_.funder), "admin");
  }
  coord_ = std::make_unique<xchain::Coordinator>(world_, cfg_.ticket_chain, kAuctioneer, cfg_.operator_id,
                                                 cfg_.xcfg);
}

Digest AuctionDriver::mint(const std::string& ticket, const std::string& owner) {
  return world_.chain(cfg_.ticket_chain)
      .submit_call(CallerRef::user("admin"), kAuctioneer, "mint", {Value::string(ticket), Value::string(owner)});
}

Digest AuctionDriver::fund(const std::string& chain, const std::string& user, std::int64_t amount) {
  return world_.chain(chain).submit_call(CallerRef::user(cfg_.funder), kBidder, "fund",
                                         {Value::string(user), Value::integer(amount)});
}

Digest AuctionDriver::start(const std::string& caller, const std::string& ticket, std::uint64_t close_height) {
  return world_.chain(cfg_.ticket_chain)
      .submit_call(CallerRef::user(caller), kAuctioneer, "start_auction",
                   {Value::string(ticket), Value::integer(static_cast<std::int64_t>(close_height))});
}

Digest AuctionDriver::bid(const std::string& chain, const std::string& user, const std::string& aid,
                          std::int64_t amount) {
  return world_.chain(chain).submit_call(CallerRef::user(user), kBidder, "submit_bid",
                                         {Value::string(aid), Value::integer(amount)});
}

std::optional<std::string> AuctionDriver::started_id(const Digest& start_txn) const {
  const auto& ch = world_.chain(cfg_.ticket_chain);
  const auto ref = ch.find_receipt(start_txn);
  if (!ref) return std::nullopt;
  const auto& rc = ch.block(ref->height).block.receipts.at(ref->index);
  if (!rc.ok() || !rc.result.is_str()) return std::nullopt;
  return rc.result.as_str();
}

sim::Task<ConcludeResult> AuctionDriver::conclude(std::string aid) {
  ConcludeResult out;
  for (std::uint32_t n = 1; n <= cfg_.conclude_attempts; ++n) {
    if (n > 1) {
      auto nap = world_.sched().sleep(cfg_.conclude_backoff * (n - 1));
      co_await nap;
    }
    auto task = attempt(aid);
    auto r = co_await task;
    r.attempts = n;
    r.aborts.insert(r.aborts.begin(), out.aborts.begin(), out.aborts.end());
    out = std::move(r);
    if (out.status != ConcludeStatus::Aborted) co_return out;
  }
  co_return out;
}

namespace {

std::int64_t num(const Value& v) { return v.is_int() ? v.as_int() : 0; }
std::string str(const Value& v) { return v.is_str() ? v.as_str() : std::string(); }

std::string bkey(const std::string& rel) { return std::string(kBidder) + "." + rel; }
std::string akey(const std::string& rel) { return std::string(kAuctioneer) + "." + rel; }

struct ChainView {
  std::vector<std::string> users;
  std::map<std::string, std::int64_t> balance;
  std::map<std::string, std::int64_t> escrow;
};

}  // namespace

sim::Task<ConcludeResult> AuctionDriver::attempt(std::string aid) {
  ConcludeResult out;
  auto& coord = *coord_;
  auto t = coord.begin(cfg_.mode);
  out.txn_id = t.txn_id;
  std::optional<std::string> failure;
  std::map<std::string, Value> ticket_writes;
  std::map<std::string, std::map<std::string, Value>> bidder_writes;
  std::string tid;
  try {
    const std::string a = "auction." + aid + ".";
    std::vector<std::string> head = {akey(a + "status"), akey(a + "ticket"), akey(a + "seller")};
    auto read_head = coord.txn_read_many(t, cfg_.ticket_chain, head);
    const auto hv = co_await read_head;
    ++out.read_trips;
    if (str(hv[0]) != "open") {
      failure = "NotOpen";
    } else {
      tid = str(hv[1]);
      const std::string seller = str(hv[2]);
      std::vector<BidView> bids;
      std::map<std::string, ChainView> views;
      for (const auto& c : cfg_.bidder_chains) {
        std::vector<std::string> lk = {bkey("auction.id"), bkey("auction.status"), bkey("bidders")};
        auto read_list = coord.txn_read_many(t, c, lk);
        const auto lv = co_await read_list;
        ++out.read_trips;
        if (str(lv[0]) != aid || str(lv[1]) != "open") {
          failure = "NotStarted: " + c;
          break;
        }
        if (after_bidders_read) after_bidders_read(c);
        auto& view = views[c];
        view.users = split_list(str(lv[2]));
        if (view.users.empty()) continue;
        std::vector<std::string> keys;
        for (const auto& u : view.users) {
          for (const char* f : {"bids.", "bidh.", "escrow.", "balance."}) keys.push_back(bkey(f + u));
        }
        keys.push_back(bkey("balance." + seller));
        auto read_bids = coord.txn_read_many(t, c, keys);
        const auto bv = co_await read_bids;
        ++out.read_trips;
        for (std::size_t i = 0; i < view.users.size(); ++i) {
          const auto& u = view.users[i];
          bids.push_back({c, u, num(bv[4 * i]), static_cast<std::uint64_t>(num(bv[4 * i + 1]))});
          view.escrow[u] = num(bv[4 * i + 2]);
          view.balance[u] = num(bv[4 * i + 3]);
        }
        view.balance.try_emplace(seller, num(bv.back()));
      }
      if (!failure) {
        out.winner = select_winner(bids, cfg_.rates);
        const bool sold = out.winner.has_value();
        ticket_writes[akey(a + "status")] = Value::string(sold ? "concluded" : "cancelled");
        ticket_writes[akey("ticket." + tid + ".escrowed")] = Value::boolean(false);
        if (sold) {
          const auto& w = *out.winner;
          ticket_writes[akey("ticket." + tid + ".owner")] = Value::string(w.user);
          ticket_writes[akey(a + "winner")] = Value::string(w.chain + ":" + w.user);
          ticket_writes[akey(a + "amount")] = Value::integer(w.amount);
          ticket_writes[akey("winning_bids." + aid)] = Value::integer(w.amount);
        }
        for (const auto& b : bids) {
          auto& view = views[b.chain];
          view.escrow[b.user] -= b.amount;
          const bool won = out.winner && out.winner->chain == b.chain && out.winner->user == b.user;
          view.balance[won ? seller : b.user] += b.amount;
        }
        for (const auto& c : cfg_.bidder_chains) {
          auto& wr = bidder_writes[c];
          const auto& view = views[c];
          wr[bkey("auction.status")] = Value::string("closed");
          wr[bkey("closed." + aid)] = Value::string(sold ? "concluded" : "cancelled");
          wr[bkey("bidders")] = Value::string("");
          for (const auto& u : view.users) {
            wr[bkey("bids." + u)] = Value::null();
            wr[bkey("bidh." + u)] = Value::null();
            wr[bkey("escrow." + u)] = Value::integer(view.escrow.at(u));
          }
          if (!view.users.empty()) {
            for (const auto& [u, v] : view.balance) wr[bkey("balance." + u)] = Value::integer(v);
          }
        }
      }
    }
  } catch (const XchainError& e) {
    failure = e.what();
  }
  if (failure) {
    auto abort = coord.txn_abort(t, *failure);
    co_await abort;
    out.aborts.push_back(*failure);
    out.status = *failure == "NotOpen" ? ConcludeStatus::NotOpen : ConcludeStatus::Aborted;
    co_return out;
  }

  try {
    for (const auto& [k, v] : ticket_writes) {
      auto w = coord.txn_write(t, cfg_.ticket_chain, k, v);
      co_await w;
    }
    for (const auto& [c, wr] : bidder_writes) {
      for (const auto& [k, v] : wr) {
        auto w = coord.txn_write(t, c, k, v);
        co_await w;
      }
    }
  } catch (const XchainError& e) {
    failure = e.what();
  }
  if (failure) {
    out.aborts.push_back(*failure);
    out.status = ConcludeStatus::Aborted;
    co_return out;
  }
  auto commit = coord.txn_commit(t);
  const auto r = co_await commit;
  if (!r.committed) {
    out.aborts.push_back(r.reason);
    out.status = ConcludeStatus::Aborted;
    out.winner.reset();
    co_return out;
  }
  out.status = out.winner ? ConcludeStatus::Concluded : ConcludeStatus::Cancelled;
  co_return out;
}

}  // namespace interop::auction
