#include "interop/simctl/audit.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

#include "interop/simctl/scenario.hpp"
#include "interop/xchain/messages.hpp"

namespace interop::simctl {

using chain::Value;

bool AuditReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Check& AuditReport::get(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw std::out_of_range("no audit check " + name);
}

std::string AuditReport::str() const {
  std::ostringstream o;
  for (const auto& c : checks) {
    o << (c.pass ? "PASS " : "FAIL ") << c.name << "\n";
    for (const auto& v : c.violations) o << "  " << v << "\n";
  }
  return o.str();
}

namespace {

constexpr std::size_t kMaxViolations = 20;

using State = std::map<std::string, Value>;

std::int64_t num(const Value& v) { return v.is_int() ? v.as_int() : 0; }

const Value& lookup(const State& s, const std::string& k) {
  static const Value null = Value::null();
  const auto it = s.find(k);
  return it == s.end() ? null : it->second;
}

struct BidRec {
  std::string chain;
  std::string user;
  std::string aid;
  std::int64_t amount = 0;
  std::uint64_t height = 0;
  std::int64_t balance_before = 0;
  std::int64_t funded_before = 0;
};

struct Snap {
  std::int64_t bal_before = 0, bal_after = 0, esc_before = 0, esc_after = 0, funded = 0;
};

/// Close of one auction on one Bidder chain: balances and escrows of every
/// involved user right before and after the receipt that closed it.
struct Close {
  std::map<std::string, Snap> users;
};

/// Ticket-chain conclusion receipt: what it wrote for owner and escrow flag.
struct Conclusion {
  Value owner;
  Value escrowed;
};

class Auditor {
 public:
  Auditor(const RunLog& log, ScenarioConfig cfg) : log_(log), cfg_(std::move(cfg)) {
    for (const char* n : {"atomicity", "serial_order", "conservation", "at_most_once", "freshness", "locks",
                          "round_trips", "winner", "exclusivity", "loser_safety"}) {
      report_.checks.push_back({n, true, {}});
    }
    if (cfg_.has_auction) bidder_chains_.insert(cfg_.auction.bidder_chains.begin(), cfg_.auction.bidder_chains.end());
  }

  AuditReport run() {
    for (const auto& [chain, cb] : log_.blocks) replay_block(chain, cb);
    check_atomicity();
    check_serial_order();
    check_locks();
    check_round_trips();
    if (cfg_.has_auction) check_auctions();
    return report_;
  }

 private:
  void violate(const std::string& name, const std::string& msg) {
    for (auto& c : report_.checks) {
      if (c.name != name) continue;
      c.pass = false;
      if (c.violations.size() < kMaxViolations) c.violations.push_back(msg);
    }
  }

  bool is_bidder_chain(const std::string& c) const { return bidder_chains_.contains(c); }

  void replay_block(const std::string& chain, const chain::CertifiedBlock& cb) {
    auto& st = state_[chain];
    const auto& b = cb.block;
    const auto h = b.header.height;
    if (b.txns.size() != b.receipts.size()) {
      violate("atomicity", chain + " h=" + std::to_string(h) + ": receipts do not match transactions");
      return;
    }
    for (std::size_t i = 0; i < b.txns.size(); ++i) {
      const auto& t = b.txns[i];
      const auto& r = b.receipts[i];
      if (!t.caller.is_user() && !seen_[chain].insert({t.caller.chain, t.nonce}).second) {
        violate("at_most_once", chain + " h=" + std::to_string(h) + ": event " + t.caller.chain + "#" +
                                    std::to_string(t.nonce) + " executed twice");
      }
      if (t.target_contract == "xtxn" && t.method == "on_message" && t.args.size() == 3 && t.args[0].is_int() &&
          t.args[0].as_int() == static_cast<std::int64_t>(xbus::EventKind::ReadReq) && t.args[1].is_bytes()) {
        try {
          requested_.insert({chain, t.caller.chain, xchain::decode_read_request(t.args[1].as_bytes()).nonce});
        } catch (const std::exception&) {
        }
      }
      const bool bidder = is_bidder_chain(chain) && t.target_contract == "Bidder" && r.ok();
      if (bidder && t.method == "submit_bid" && t.args.size() == 2 && t.args[0].is_str() && t.args[1].is_int()) {
        const auto& u = t.caller.id;
        bids_.push_back({chain, u, t.args[0].as_str(), t.args[1].as_int(), h,
                         num(lookup(st, "Bidder.balance." + u)), funded_by_[{chain, u}]});
      }
      if (bidder && t.method == "fund" && t.args.size() == 2 && t.args[0].is_str() && t.args[1].is_int()) {
        funded_[chain] += t.args[1].as_int();
        funded_by_[{chain, t.args[0].as_str()}] += t.args[1].as_int();
      }

      std::string closes;
      for (const auto& [k, v] : r.writes) {
        if (k.starts_with("Bidder.closed.")) closes = k.substr(14);
      }
      std::set<std::string> involved;
      if (!closes.empty()) {
        for (const auto& bd : bids_) {
          if (bd.chain == chain && bd.aid == closes) involved.insert(bd.user);
        }
        involved.insert(cfg_.auction.seller);
        for (const auto& u : involved) {
          auto& s = closes_[{chain, closes}].users[u];
          s.bal_before = num(lookup(st, "Bidder.balance." + u));
          s.esc_before = num(lookup(st, "Bidder.escrow." + u));
          s.funded = funded_by_[{chain, u}];
        }
      }

      for (const auto& [k, v] : r.writes) {
        if (v.is_null()) st.erase(k);
        else st[k] = v;
      }

      if (!r.xtxn_id.empty()) {
        for (const auto& [k, v] : r.writes) {
          if (k.starts_with("xtxn.")) continue;
          auto& per = applied_[r.xtxn_id][chain];
          if (per.empty()) order_[chain].push_back(r.xtxn_id);
          per[k] = v;
        }
      }
      if (!closes.empty()) {
        for (const auto& u : involved) {
          auto& s = closes_[{chain, closes}].users[u];
          s.bal_after = num(lookup(st, "Bidder.balance." + u));
          s.esc_after = num(lookup(st, "Bidder.escrow." + u));
        }
      }
      if (cfg_.has_auction && chain == cfg_.auction.ticket_chain) {
        for (const auto& [k, v] : r.writes) {
          if (!k.starts_with("Auctioneer.auction.") || !k.ends_with(".status") || v != Value::string("concluded")) {
            continue;
          }
          const auto aid = k.substr(19, k.size() - 19 - 7);
          const auto tid = lookup(st, "Auctioneer.auction." + aid + ".ticket");
          if (!tid.is_str()) continue;
          Conclusion c;
          for (const auto& [k2, v2] : r.writes) {
            if (k2 == "Auctioneer.ticket." + tid.as_str() + ".owner") c.owner = v2;
            if (k2 == "Auctioneer.ticket." + tid.as_str() + ".escrowed") c.escrowed = v2;
          }
          conclusions_[aid] = c;
        }
      }
    }

    for (const auto& e : b.events) {
      if (e.kind != static_cast<std::uint8_t>(xbus::EventKind::ReadResp)) continue;
      std::uint64_t nonce = 0;
      try {
        nonce = xchain::decode_read_response(e.payload).nonce;
      } catch (const std::exception&) {
        violate("freshness", chain + " h=" + std::to_string(h) + ": undecodable read response");
        continue;
      }
      if (!requested_.contains({chain, e.dest_chain, nonce})) {
        violate("freshness", chain + " h=" + std::to_string(h) + ": response to " + e.dest_chain +
                                 " carries unrequested nonce " + std::to_string(nonce));
      }
    }

    if (is_bidder_chain(chain)) {
      std::int64_t held = 0;
      for (const auto& [k, v] : st) {
        if (k.starts_with("Bidder.balance.") || k.starts_with("Bidder.escrow.")) held += num(v);
      }
      if (held != funded_[chain]) {
        violate("conservation", chain + " h=" + std::to_string(h) + ": holdings " + std::to_string(held) +
                                    " != funded " + std::to_string(funded_[chain]));
      }
    }
  }

  void check_atomicity() {
    std::map<std::string, xchain::TwoPCRecord> recs;
    for (const auto& [chain, st] : state_) {
      for (auto it = st.lower_bound("xtxn.rec."); it != st.end() && it->first.starts_with("xtxn.rec."); ++it) {
        try {
          auto rec = xchain::decode_record(it->second.as_bytes());
          recs[rec.txn_id] = std::move(rec);
        } catch (const std::exception&) {
          violate("atomicity", chain + " " + it->first + ": undecodable record");
        }
      }
    }
    for (const auto& [txn, per] : applied_) {
      if (recs.contains(txn)) continue;
      for (const auto& [chain, writes] : per) {
        for (const auto& [k, v] : writes) violate("atomicity", chain + " " + k + " txn=" + txn + ": no decision record");
      }
    }
    for (const auto& [txn, rec] : recs) {
      const auto it = applied_.find(txn);
      if (rec.phase != xchain::Phase::Commit) {
        if (it == applied_.end()) continue;
        for (const auto& [chain, writes] : it->second) {
          for (const auto& [k, v] : writes) violate("atomicity", chain + " " + k + " txn=" + txn + ": applied but not committed");
        }
        continue;
      }
      committed_.insert(txn);
      for (const auto& [chain, payload] : rec.participants) {
        std::map<std::string, Value> want;
        try {
          if (!payload.empty()) {
            for (auto& [k, v] : xchain::decode_prepare(payload).writes) want[k] = v;
          }
        } catch (const std::exception&) {
          violate("atomicity", chain + " txn=" + txn + ": undecodable prepare");
          continue;
        }
        static const std::map<std::string, Value> none;
        const auto* got = &none;
        if (it != applied_.end()) {
          const auto g = it->second.find(chain);
          if (g != it->second.end()) got = &g->second;
        }
        for (const auto& [k, v] : want) {
          const auto g = got->find(k);
          if (g == got->end() || g->second != v) violate("atomicity", chain + " " + k + " txn=" + txn + ": write missing");
        }
        for (const auto& [k, v] : *got) {
          if (!want.contains(k)) violate("atomicity", chain + " " + k + " txn=" + txn + ": write not in prepare");
        }
      }
    }
  }

  void check_serial_order() {
    std::map<std::string, std::set<std::string>> edges;
    for (const auto& [chain, seq] : order_) {
      for (std::size_t i = 0; i < seq.size(); ++i) {
        for (std::size_t j = i + 1; j < seq.size(); ++j) edges[seq[i]].insert(seq[j]);
      }
    }
    std::map<std::string, int> mark;
    std::string cyc;
    auto dfs = [&](auto&& self, const std::string& n) -> bool {
      mark[n] = 1;
      for (const auto& m : edges[n]) {
        if (mark[m] == 1) {
          cyc = n + " -> " + m;
          return true;
        }
        if (mark[m] == 0 && self(self, m)) return true;
      }
      mark[n] = 2;
      return false;
    };
    for (const auto& [n, _] : edges) {
      if (mark[n] == 0 && dfs(dfs, n)) {
        violate("serial_order", "cycle through " + cyc);
        return;
      }
    }
  }

  void check_locks() {
    for (const auto& [chain, st] : state_) {
      for (auto it = st.lower_bound("xtxn.lock."); it != st.end() && it->first.starts_with("xtxn.lock."); ++it) {
        violate("locks", chain + " " + it->first.substr(10) + " held by " +
                             (it->second.is_str() ? it->second.as_str() : std::string("?")));
      }
    }
  }

  void check_round_trips() {
    const auto& m = log_.metrics;
    if (m.contains("txns")) {
      for (const auto& [id, t] : m["txns"].items()) {
        if (t.value("kind", "") == "mini" && t.value("outcome", "") == "committed" && t.value("round_trips", 0) != 2) {
          violate("round_trips", "mini txn=" + id + " took " + std::to_string(t.value("round_trips", 0)));
        }
      }
    }
    if (m.contains("auctions")) {
      for (const auto& a : m["auctions"]) {
        const auto status = a.value("status", "");
        if (status != "Concluded" && status != "Cancelled") continue;
        const auto rt = a.value("round_trips", 0u);
        const auto k = a.value("read_trips", 0u);
        if (rt < k + 2 || rt <= 2) {
          violate("round_trips", "conclude txn=" + a.value("txn_id", "") + " took " + std::to_string(rt) +
                                     " with " + std::to_string(k) + " read trips");
        }
      }
    }
  }

  void check_auctions() {
    const auto& ac = cfg_.auction;
    const auto& tst = state_[ac.ticket_chain];
    const std::string prefix = "Auctioneer.auction.";
    for (auto it = tst.lower_bound(prefix); it != tst.end() && it->first.starts_with(prefix); ++it) {
      if (!it->first.ends_with(".status")) continue;
      const auto aid = it->first.substr(prefix.size(), it->first.size() - prefix.size() - 7);
      const auto status = it->second.is_str() ? it->second.as_str() : "";
      if (status != "concluded" && status != "cancelled") continue;

      std::vector<const BidRec*> bids;
      for (const auto& b : bids_) {
        if (b.aid == aid) bids.push_back(&b);
      }
      // Independent argmax: amount * num / den compared by cross products.
      const BidRec* best = nullptr;
      for (const auto* b : bids) {
        if (!best) {
          best = b;
          continue;
        }
        const auto& rb = ac.rates.at(b->chain);
        const auto& rx = ac.rates.at(best->chain);
        const __int128 lhs = static_cast<__int128>(b->amount) * rb.num * rx.den;
        const __int128 rhs = static_cast<__int128>(best->amount) * rx.num * rb.den;
        if (lhs > rhs || (lhs == rhs && std::tie(b->height, b->chain, b->user) <
                                            std::tie(best->height, best->chain, best->user))) {
          best = b;
        }
      }

      const auto seller = lookup(tst, prefix + aid + ".seller");
      if (status == "cancelled") {
        if (best) violate("winner", aid + ": cancelled although " + best->chain + ":" + best->user + " bid");
      } else {
        const auto winner = lookup(tst, prefix + aid + ".winner");
        const auto amount = lookup(tst, prefix + aid + ".amount");
        if (!best) {
          violate("winner", aid + ": concluded without bids");
          continue;
        }
        const auto expect = best->chain + ":" + best->user;
        if (winner != Value::string(expect) || amount != Value::integer(best->amount)) {
          violate("winner", aid + ": recorded " + (winner.is_str() ? winner.as_str() : "none") + ", ledger argmax " +
                                expect);
        }
        const auto c = conclusions_.find(aid);
        if (c == conclusions_.end() || c->second.owner != Value::string(best->user) ||
            c->second.escrowed != Value::boolean(false)) {
          violate("exclusivity", aid + ": ticket not transferred to " + best->user);
        }
      }

      for (const auto& bc : ac.bidder_chains) {
        const auto cl = closes_.find({bc, aid});
        if (cl == closes_.end()) {
          violate("exclusivity", aid + ": never closed on " + bc);
          continue;
        }
        std::int64_t to_seller = 0;
        for (const auto* b : bids) {
          if (b->chain != bc) continue;
          const auto& s = cl->second.users.at(b->user);
          const bool won = b == best;
          if (s.esc_before - s.esc_after != b->amount) {
            violate(won ? "exclusivity" : "loser_safety",
                    bc + " " + b->user + " " + aid + ": escrow moved by " + std::to_string(s.esc_before - s.esc_after) +
                        ", bid " + std::to_string(b->amount));
          }
          if (won) {
            to_seller += b->amount;
          } else if (b->user != seller.as_str() &&
                     s.bal_after != b->balance_before + (s.funded - b->funded_before)) {
            violate("loser_safety", bc + " " + b->user + " " + aid + ": balance " + std::to_string(s.bal_after) +
                                        ", before bidding " + std::to_string(b->balance_before));
          }
        }
        if (to_seller > 0 && seller.is_str()) {
          const auto& s = cl->second.users.at(seller.as_str());
          std::int64_t refunds = 0;
          for (const auto* b : bids) {
            if (b->chain == bc && b->user == seller.as_str() && b != best) refunds += b->amount;
          }
          if (s.bal_after - s.bal_before != to_seller + refunds) {
            violate("exclusivity", bc + " " + aid + ": seller credited " + std::to_string(s.bal_after - s.bal_before) +
                                       ", winning bid " + std::to_string(to_seller));
          }
        }
      }
    }
  }

  const RunLog& log_;
  ScenarioConfig cfg_;
  AuditReport report_;
  std::set<std::string> bidder_chains_;
  std::map<std::string, State> state_;
  std::map<std::string, std::set<std::pair<std::string, std::uint64_t>>> seen_;
  std::set<std::tuple<std::string, std::string, std::uint64_t>> requested_;
  std::map<std::string, std::int64_t> funded_;
  std::map<std::pair<std::string, std::string>, std::int64_t> funded_by_;
  std::vector<BidRec> bids_;
  std::map<std::pair<std::string, std::string>, Close> closes_;
  std::map<std::string, Conclusion> conclusions_;
  std::map<std::string, std::map<std::string, std::map<std::string, Value>>> applied_;
  std::map<std::string, std::vector<std::string>> order_;
  std::set<std::string> committed_;
};

}  // namespace

AuditReport audit_log(const RunLog& log) {
  ScenarioConfig cfg;
  try {
    cfg = parse_scenario(log.config_text);
  } catch (const ConfigError& e) {
    throw CorruptLog(std::string("embedded config: ") + e.what());
  }
  return Auditor(log, std::move(cfg)).run();
}

AuditReport audit_text(const std::string& text) { return audit_log(parse_log(text)); }

}  // namespace interop::simctl
