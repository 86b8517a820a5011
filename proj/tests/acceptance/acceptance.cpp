// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "bus_net.hpp"
#include "interop/auction/contracts.hpp"
#include "interop/chain/merkle.hpp"
#include "interop/policy/evaluator.hpp"
#include "interop/policy/parser.hpp"
#include "interop/simctl/audit.hpp"
#include "interop/simctl/runner.hpp"
#include "serial_oracle.hpp"
#include "xnet.hpp"

#ifndef INTEROP_SOURCE_DIR
#define INTEROP_SOURCE_DIR "."
#endif

using namespace interop;
using chain::Value;
using nlohmann::ordered_json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Collects counters and the first few counterexamples.
struct Tally {
  std::vector<std::string> examples;
  std::size_t failures = 0;

  void fail(const std::string& what) {
    ++failures;
    if (examples.size() < 5) examples.push_back(what);
  }
  std::string str() const {
    std::string s;
    for (const auto& e : examples) s += "\n    " + e;
    return s;
  }
};

std::string source_path(const std::string& rel) { return std::string(INTEROP_SOURCE_DIR) + "/" + rel; }

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Auction runs from the atomicity sweep, reused by the round-trip criterion.
std::vector<ordered_json> g_sweep_metrics;

// ---------------------------------------------------------------------------

Outcome atomicity_sweep() {
  const auto base = simctl::load_scenario(source_path("scenarios/auction.scn"));
  std::size_t runs = 0, atomicity = 0, conservation = 0, not_ok = 0, concluded = 0;
  std::map<std::string, std::size_t> other;
  Tally t;
  for (double drop : {0.0, 0.1, 0.3}) {
    for (std::uint64_t seed = 1; seed <= 500; ++seed) {
      auto cfg = base;
      cfg.seed = seed;
      cfg.mode = seed % 2 ? xchain::Mode::Occ : xchain::Mode::Locks;
      simctl::set_drop_rate(cfg, drop);
      const auto r = simctl::run_scenario(cfg);
      const auto rep = simctl::audit_text(r.log);
      ++runs;
      const auto& a = rep.get("atomicity");
      const auto& c = rep.get("conservation");
      atomicity += a.violations.size();
      conservation += c.violations.size();
      if (!a.pass || !c.pass) {
        t.fail("seed " + std::to_string(seed) + " drop " + std::to_string(drop) + ": " +
               (a.violations.empty() ? c.violations.front() : a.violations.front()));
      }
      for (const auto& ch : rep.checks) {
        if (!ch.pass && ch.name != "atomicity" && ch.name != "conservation") ++other[ch.name];
      }
      if (r.status != "ok") ++not_ok;
      for (const auto& au : r.metrics["auctions"]) concluded += au["status"] == "Concluded";
      g_sweep_metrics.push_back(r.metrics);
    }
  }
  std::string detail = std::to_string(runs) + " runs, " + std::to_string(atomicity) + " atomicity and " +
                       std::to_string(conservation) + " conservation violations; " + std::to_string(concluded) +
                       " concluded, " + std::to_string(not_ok) + " hit max_ticks";
  for (const auto& [name, n] : other) detail += ", " + name + " failed in " + std::to_string(n);
  return {atomicity == 0 && conservation == 0 && t.failures == 0, detail + t.str()};
}

// ---------------------------------------------------------------------------

Outcome serializability() {
  Rng rng(20240601);
  std::size_t ok = 0, committed = 0, aborted = 0;
  Tally t;
  for (int i = 0; i < 100; ++i) {
    const auto s = testnet::random_scenario(rng);
    const auto mode = i % 2 ? xchain::Mode::Locks : xchain::Mode::Occ;
    const auto r = testnet::run_scenario(5000 + i, s, mode);
    committed += r.committed;
    aborted += r.aborted;
    if (s.chains.size() > 3 || s.programs.size() > 8) {
      t.fail("scenario " + std::to_string(i) + " exceeds the size bound");
    } else if (r.serializable && r.leftover_locks == 0) {
      ++ok;
    } else {
      t.fail("scenario " + std::to_string(i) + ": serializable=" + std::to_string(r.serializable) +
             " leftover_locks=" + std::to_string(r.leftover_locks));
    }
  }
  return {ok == 100 && t.failures == 0, std::to_string(ok) + "/100 match a serial order (" + std::to_string(committed) +
                                            " committed, " + std::to_string(aborted) + " aborted)" + t.str()};
}

// ---------------------------------------------------------------------------

sim::Task<xchain::ReadResponse> read_one(xchain::Coordinator* c, std::string chain, std::string key) {
  std::vector<std::string> keys{std::move(key)};
  auto task = c->verified_read(std::move(chain), std::move(keys));
  auto r = co_await task;
  co_return r;
}

/// Old verified responses presented for later requests, both as captured and
/// with the nonce field rewritten to the new request's.
std::pair<std::size_t, std::size_t> replay_read_responses(Tally& t) {
  testnet::XNet net(31);
  std::vector<xchain::ReadResponse> responses;
  for (int k = 0; k < 50; ++k) {
    net.put("B", "x", Value::integer(k));
    net.settle(2);
    responses.push_back(net.world.run(read_one(net.coord.get(), "B", "Kv.x"), 500));
    xchain::verify_read_response(net.world.keys(), responses.back(), responses.back().nonce);
  }
  std::size_t injected = 0, rejected = 0;
  for (std::size_t k = 1; k < responses.size() && injected < 1000; ++k) {
    for (std::size_t j = 0; j < k && injected < 1000; ++j) {
      auto replay = responses[j];
      const auto fresh = responses[k].nonce;
      if (injected % 2) replay.nonce = fresh;
      ++injected;
      try {
        xchain::verify_read_response(net.world.keys(), replay, fresh);
        t.fail("read response " + std::to_string(j) + " accepted for request " + std::to_string(k));
      } catch (const xchain::XchainError&) {
        ++rejected;
      }
    }
  }
  return {injected, rejected};
}

/// Accepted batches re-published through the broker after delivery.
std::pair<std::size_t, std::size_t> replay_batches(Tally& t) {
  testnet::Net net(32);
  std::vector<Bytes> captured;
  net.world.bus().brokers()[0]->drop_filter = [&](const std::string&, const Bytes& m) {
    captured.push_back(m);
    return false;
  };
  for (int i = 0; i < 50; ++i) net.send(i);
  // Wait out the gateway's own republication so only injected copies remain.
  const auto& gw = net.world.bus().gateway("A").stats();
  net.world.run_until([&] { return net.hits() == 50 && gw.republished == xbus::GatewayConfig{}.republish_limit * gw.emitted; }, 400);
  for (int i = 0; i < 5; ++i) net.world.step();
  net.world.bus().brokers()[0]->drop_filter = nullptr;
  if (net.hits() != 50 || captured.size() < 50) t.fail("setup delivered " + std::to_string(net.hits()) + " events");

  const auto before = net.world.bus().stats().consumer;
  std::size_t injected = 0;
  while (injected < 1000) {
    for (int k = 0; k < 10 && injected < 1000; ++k) {
      net.world.bus().brokers()[0]->publish("B", captured[injected % captured.size()], net.world.tick());
      ++injected;
    }
    net.world.step();
  }
  for (int i = 0; i < 5; ++i) net.world.step();
  const auto after = net.world.bus().stats().consumer;
  const std::size_t rejected = after.duplicates - before.duplicates;
  if (after.accepted != before.accepted) t.fail(std::to_string(after.accepted - before.accepted) + " replays accepted");
  if (net.hits() != 50) t.fail("Sink.hits moved to " + std::to_string(net.hits()));
  std::size_t executed = 0;
  for (const auto& blk : net.b.blocks()) {
    for (const auto& tx : blk.block.txns) executed += tx.caller.chain == "A";
  }
  if (executed != 50) t.fail(std::to_string(executed) + " inbound executions on B");
  return {injected, rejected};
}

bool forged_delivered(const testnet::Net& net) {
  for (const auto& blk : net.b.blocks()) {
    for (const auto& tx : blk.block.txns) {
      if (tx.nonce >= (std::uint64_t{1} << 63)) return true;
    }
  }
  return false;
}

Outcome freshness() {
  Tally t;
  const auto [rq, rr] = replay_read_responses(t);
  const auto [bq, br] = replay_batches(t);

  // f = 1 on a 4-node chain: every single node as a forger, across seeds.
  std::size_t f_runs = 0, f_leaks = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    for (int node = 0; node < 4; ++node) {
      testnet::Net net(seed);
      net.a.set_behavior(chain::node_id("A", node), chain::Behavior::ForgeEvents);
      for (int i = 0; i < 5; ++i) net.send(i);
      net.world.run_until([] { return false; }, 40);
      ++f_runs;
      if (forged_delivered(net)) {
        ++f_leaks;
        t.fail("forged event delivered with one forger, seed " + std::to_string(seed));
      }
      if (net.hits() != 5) t.fail("honest events lost with one forger, seed " + std::to_string(seed));
    }
  }
  // f + 1 forgers: every pair of nodes.
  std::size_t pair_runs = 0, pair_delivered = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (int x = 0; x < 4; ++x) {
      for (int y = x + 1; y < 4; ++y) {
        testnet::Net net(seed);
        net.a.set_behavior(chain::node_id("A", x), chain::Behavior::ForgeEvents);
        net.a.set_behavior(chain::node_id("A", y), chain::Behavior::ForgeEvents);
        net.send(1);
        net.world.run_until([] { return false; }, 30);
        ++pair_runs;
        if (forged_delivered(net)) {
          ++pair_delivered;
        } else {
          t.fail("two forgers did not get a forged event through, seed " + std::to_string(seed));
        }
      }
    }
  }
  const bool pass = rq == 1000 && rr == 1000 && bq == 1000 && br == 1000 && f_leaks == 0 &&
                    pair_delivered == pair_runs && t.failures == 0;
  return {pass, "read responses " + std::to_string(rr) + "/" + std::to_string(rq) + " rejected, batches " +
                    std::to_string(br) + "/" + std::to_string(bq) + " rejected; f forgers leaked in " +
                    std::to_string(f_leaks) + "/" + std::to_string(f_runs) + " runs, f+1 forgers delivered in " +
                    std::to_string(pair_delivered) + "/" + std::to_string(pair_runs) + t.str()};
}

// ---------------------------------------------------------------------------

Outcome round_trips() {
  Tally t;
  std::size_t minis = 0, mini_aborted = 0;
  const chain::Behavior behaviors[] = {chain::Behavior::Honest, chain::Behavior::Silent,
                                       chain::Behavior::EquivocateDigest, chain::Behavior::ForgeEvents};
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    testnet::XNet net(seed, {"A", "B", "C"}, {.drop_rate = seed % 2 ? 0.3 : 0.0, .duplicate_rate = 0.1, .replay_rate = 0.1});
    for (const auto& c : net.chains) {
      auto& ch = net.world.chain(c);
      ch.set_behavior(ch.node_id(static_cast<std::uint32_t>(seed % 4)), behaviors[seed % 4]);
    }
    net.put("B", "bal", Value::integer(0));
    net.settle(3);
    for (int i = 0; i < 10; ++i) {
      xchain::MiniTxn m;
      // Every third compare is stale on purpose, so aborts are exercised too.
      m.compares = {{"B", "Kv.bal", Value::integer(i % 3 == 2 ? -1 : i - i / 3)}};
      m.reads = {{"C", "Kv.bal"}};
      m.writes = {{"B", "Kv.bal", Value::integer(i - i / 3 + 1)}, {"C", "Kv.bal", Value::integer(i)}};
      auto out = net.world.run(net.coord->execute_minitxn(m), 5000);
      const auto& meter = net.coord->meter().txns().at(out.txn_id);
      if (!out.committed) {
        ++mini_aborted;
        continue;
      }
      ++minis;
      if (meter.round_trips != 2) {
        t.fail("mini txn " + out.txn_id + " took " + std::to_string(meter.round_trips) + " round trips");
      }
    }
  }

  std::size_t conclusions = 0;
  std::uint32_t min_rt = ~0u, max_rt = 0;
  for (const auto& m : g_sweep_metrics) {
    for (const auto& a : m["auctions"]) {
      const std::string txn = a["txn_id"];
      if (txn.empty() || !m["txns"].contains(txn) || m["txns"][txn]["outcome"] != "committed") continue;
      ++conclusions;
      const std::uint32_t rt = a["round_trips"];
      const std::uint32_t k = a["read_trips"];
      min_rt = std::min(min_rt, rt);
      max_rt = std::max(max_rt, rt);
      if (rt < k + 2 || rt <= 2) {
        t.fail("conclusion " + txn + " took " + std::to_string(rt) + " with " + std::to_string(k) + " read trips");
      }
    }
  }
  if (conclusions == 0) t.fail("no committed conclusions to check");
  return {t.failures == 0 && minis > 0,
          std::to_string(minis) + " committed mini-transactions all at 2 round trips (" + std::to_string(mini_aborted) +
              " aborted); " + std::to_string(conclusions) + " committed conclusions at " + std::to_string(min_rt) +
              ".." + std::to_string(max_rt) + " round trips, each >= read trips + 2" + t.str()};
}

// ---------------------------------------------------------------------------

/// The bid receipt submitted by `user` on `chain` after the auction opened.
const chain::Receipt* bid_receipt(const simctl::RunLog& log, const std::string& chain, const std::string& user) {
  for (const auto& [c, cb] : log.blocks) {
    if (c != chain) continue;
    const auto& b = cb.block;
    for (std::size_t i = 0; i < b.txns.size(); ++i) {
      if (b.txns[i].method == "submit_bid" && b.txns[i].caller.id == user) return &b.receipts[i];
    }
  }
  return nullptr;
}

Outcome race_fixture() {
  const auto base = simctl::load_scenario(source_path("scenarios/race.scn"));
  Tally t;
  std::size_t occ_conflicts = 0, lock_blocks = 0, wrong_winners = 0;
  for (auto mode : {xchain::Mode::Occ, xchain::Mode::Locks}) {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
      auto cfg = base;
      cfg.seed = seed;
      cfg.mode = mode;
      const auto r = simctl::run_scenario(cfg);
      const auto log = simctl::parse_log(r.log);
      const auto rep = simctl::audit_log(log);
      const std::string tag = std::string(xchain::mode_name(mode)) + " seed " + std::to_string(seed) + ": ";
      if (!rep.get("winner").pass) {
        ++wrong_winners;
        t.fail(tag + rep.get("winner").violations.front());
      }
      if (!rep.ok()) t.fail(tag + "audit\n" + rep.str());
      const auto& a = r.metrics["auctions"].at(0);
      const auto* late = bid_receipt(log, "coinB", "late");
      if (mode == xchain::Mode::Occ) {
        const bool conflict = !a["aborts"].empty() && a["aborts"][0].get<std::string>().find("VersionConflict") != std::string::npos;
        if (conflict && a["status"] == "Concluded" && a["winner"]["user"] == "late") {
          ++occ_conflicts;
        } else {
          t.fail(tag + "expected a VersionConflict abort then a win for the late bid, got " + a.dump());
        }
      } else {
        const bool blocked = late && !late->ok() && late->error.find("Locked") != std::string::npos;
        if (blocked && a["status"] == "Concluded" && a["attempts"] == 1) {
          ++lock_blocks;
        } else {
          t.fail(tag + "expected the late bid to fail on the lock, got " + (late ? late->error : "no receipt") + " " +
                 a.dump());
        }
      }
    }
  }
  return {t.failures == 0, "occ: " + std::to_string(occ_conflicts) + "/200 VersionConflict then late wins; locks: " +
                               std::to_string(lock_blocks) + "/200 late bid refused with Locked; " +
                               std::to_string(wrong_winners) + " wrong winners" + t.str()};
}

// ---------------------------------------------------------------------------

struct PolicyState {
  std::map<std::string, Value> current;
  std::vector<chain::StateEntry> log;

  policy::EvalContext ctx(std::uint64_t height) const {
    policy::EvalContext c;
    c.height = height;
    c.read = [this](std::string_view k) {
      auto it = current.find(std::string(k));
      return it == current.end() ? Value::null() : it->second;
    };
    c.scan = [this](std::string_view p) {
      std::vector<std::pair<std::string, Value>> out;
      for (const auto& [k, v] : current) {
        if (k.starts_with(p)) out.emplace_back(k, v);
      }
      return out;
    };
    c.history = [this](std::string_view p, std::uint64_t from, std::uint64_t to) {
      std::vector<chain::StateEntry> out;
      for (const auto& e : log) {
        if (e.key.starts_with(p) && e.version.height >= from && e.version.height <= to) out.push_back(e);
      }
      return out;
    };
    return c;
  }
};

/// Random well-typed programs in the policy grammar.
class PolicyGen {
 public:
  explicit PolicyGen(Rng& rng) : rng_(rng) {}

  std::string program() {
    std::string s;
    const auto n = 1 + rng_.below(4);
    for (std::uint64_t i = 0; i < n; ++i) {
      s += pick({"allow read on ", "allow write on ", "allow invoke on "});
      s += resource();
      if (rng_.chance(0.8)) s += " when " + boolean(3);
      s += ";";
      s += rng_.chance(0.2) ? "  # note\n" : "\n";
    }
    return s;
  }

 private:
  std::string pick(std::initializer_list<const char*> xs) { return *(xs.begin() + rng_.below(xs.size())); }

  std::string ident() {
    static const char* words[] = {"bids", "auction", "x", "y_1", "balance", "a", "orders", "Zed"};
    return words[rng_.below(8)];
  }

  std::string resource() {
    std::string s = rng_.chance(0.1) ? "*" : ident();
    if (s == "*") return s;
    const auto extra = rng_.below(3);
    for (std::uint64_t i = 0; i < extra; ++i) s += "." + ident();
    if (rng_.chance(0.3)) s += ".*";
    return s;
  }

  std::string str_lit() {
    static const char* parts[] = {"open", "bids.", "a b", "q\\\"", "\\\\", "", "auctions.", "x.y"};
    return "\"" + std::string(parts[rng_.below(8)]) + "\"";
  }

  std::string integer(int depth) {
    switch (depth <= 0 ? rng_.below(2) : rng_.below(7)) {
      case 0: return std::to_string(rng_.below(1000));
      case 1: return "block.height";
      case 2: return "count(" + str(depth - 1) + ", " + integer(depth - 1) + ", " + integer(depth - 1) + ")";
      case 3: return "sum(" + str(depth - 1) + ")";
      case 4: return "sum(" + str(depth - 1) + ", " + integer(depth - 1) + ", " + integer(depth - 1) + ")";
      case 5: return integer(depth - 1) + " + " + integer(depth - 1);
      default: return integer(depth - 1) + " - " + integer(depth - 1);
    }
  }

  std::string str(int depth) {
    switch (depth <= 0 ? rng_.below(3) : rng_.below(4)) {
      case 0: return str_lit();
      case 1: return "caller.id";
      case 2: return "caller.chain";
      default: return str(depth - 1) + " + " + str(depth - 1);
    }
  }

  std::string any(int depth) { return std::string(rng_.chance(0.5) ? "state(" : "avg(") + str(depth - 1) + ")"; }

  std::string comparison(int depth) {
    const char* ops[] = {" == ", " != ", " < ", " <= ", " > ", " >= "};
    const auto op = rng_.below(6);
    switch (rng_.below(4)) {
      case 0: return integer(depth) + ops[op] + (rng_.chance(0.3) ? any(depth) : integer(depth));
      case 1: return str(depth) + ops[op] + str(depth);
      case 2: return any(depth) + ops[rng_.below(2)] + pick({"null", "true", "3", "\"open\""});
      default: return "exists(" + str(depth) + ")";
    }
  }

  std::string boolean(int depth) {
    switch (depth <= 0 ? rng_.below(2) : rng_.below(6)) {
      case 0: return pick({"true", "false"});
      case 1: return comparison(1);
      case 2: return boolean(depth - 1) + " && " + boolean(depth - 1);
      case 3: return boolean(depth - 1) + " || " + boolean(depth - 1);
      case 4: return "!" + boolean(depth - 1);
      default: return "(" + boolean(depth - 1) + ")";
    }
  }

  Rng& rng_;
};

Outcome policy_suite() {
  using policy::AccessRequest;
  using policy::Action;
  Tally t;
  auto load = [](const char* name) { return policy::parse_policy(read_text(source_path(std::string("policies/") + name))); };
  auto expect = [&](const std::string& what, const policy::PolicyAst& ast, const AccessRequest& rq, const PolicyState& st,
                    bool want) {
    const auto d = policy::evaluate(ast, rq, st.ctx(rq.height));
    if (d.allowed != want) t.fail(what + (want ? " denied: " : " allowed") + d.reason);
  };
  std::size_t cases = 0;
  auto check = [&](auto&&... a) {
    ++cases;
    expect(a...);
  };

  // P1: one bid per user while open and at or before the close height.
  const auto p1 = load("p1_bid.policy");
  PolicyState open;
  open.current = {{"auction.status", Value::string("open")}, {"auction.close_height", Value::integer(100)}};
  check("P1 fresh bid", p1, AccessRequest{"bob", "coinB", Action::Write, "bids.bob", 90, {}}, open, true);
  check("P1 bid at close", p1, AccessRequest{"bob", "coinB", Action::Write, "bids.bob", 100, {}}, open, true);
  check("P1 bid after close", p1, AccessRequest{"bob", "coinB", Action::Write, "bids.bob", 101, {}}, open, false);
  auto rebid = open;
  rebid.current["bids.bob"] = Value::integer(5);
  check("P1 second bid", p1, AccessRequest{"bob", "coinB", Action::Write, "bids.bob", 90, {}}, rebid, false);
  auto closed = open;
  closed.current["auction.status"] = Value::string("closed");
  check("P1 closed auction", p1, AccessRequest{"bob", "coinB", Action::Write, "bids.bob", 90, {}}, closed, false);
  check("P1 read", p1, AccessRequest{"bob", "coinB", Action::Read, "bids.bob", 90, {}}, open, false);

  // P2: at most four starts per 100-block window, from write history.
  const auto p2 = load("p2_provenance.policy");
  PolicyState hist;
  for (std::uint64_t h : {120, 150, 180}) hist.log.push_back({"auctions.a" + std::to_string(h), Value::integer(1), {h, 0}});
  hist.log.push_back({"auctions.old", Value::integer(1), {10, 0}});
  const AccessRequest start{"Auctioneer", "ticket", Action::Invoke, "start_auction", 200, {}};
  check("P2 fourth start", p2, start, hist, true);
  auto busy = hist;
  busy.log.push_back({"auctions.a190", Value::integer(1), {190, 0}});
  check("P2 fifth start", p2, start, busy, false);
  auto later = start;
  later.height = 300;
  check("P2 after the window", p2, later, busy, true);
  check("P2 other method", p2, AccessRequest{"Auctioneer", "ticket", Action::Invoke, "mint", 200, {}}, hist, false);

  // P3: the aggregate is readable by the auditor, entries are not.
  const auto p3 = load("p3_aggregate.policy");
  PolicyState wins;
  wins.current = {{"winning_bids.a1", Value::integer(60)}, {"winning_bids.a2", Value::integer(45)}};
  check("P3 auditor aggregate", p3, AccessRequest{"auditor", "", Action::Read, "agg.sum.winning_bids", 50, {}}, wins, true);
  check("P3 auditor entry", p3, AccessRequest{"auditor", "", Action::Read, "winning_bids.a1", 50, {}}, wins, false);
  check("P3 other reader", p3, AccessRequest{"bob", "", Action::Read, "agg.sum.winning_bids", 50, {}}, wins, false);
  if (policy::eval_aggregate({policy::AggFn::Sum, "winning_bids.", {}}, wins.ctx(50)) != Value::integer(105)) {
    t.fail("P3 aggregate value");
  }

  // Pure time range.
  const auto tr = load("time_range.policy");
  PolicyState none;
  for (std::uint64_t h : {99, 100, 150, 200, 201}) {
    check("time range at " + std::to_string(h), tr,
          AccessRequest{"anyone", "", Action::Write, "settlements.s1", h, {}}, none, h >= 100 && h <= 200);
  }

  // The files match what the contracts attach.
  const auto bidder = policy::parse_policy(auction::bidder_policy("ticket", "bank"));
  const auto auctioneer = policy::parse_policy(auction::auctioneer_policy("ticket"));
  auto contains = [](const policy::PolicyAst& all, const policy::PolicyAst& part) {
    for (const auto& r : part.rules) {
      if (std::find(all.rules.begin(), all.rules.end(), r) == all.rules.end()) return false;
    }
    return true;
  };
  if (!contains(bidder, p1) || !contains(bidder, p2) || !contains(auctioneer, p3)) {
    t.fail("policy files differ from the contracts' policies");
  }

  // Deny by default.
  for (auto action : {Action::Read, Action::Write, Action::Invoke}) {
    check("empty policy", policy::PolicyAst{}, AccessRequest{"root", "", action, "anything", 1, {}}, open, false);
  }

  // Parser fuzz: generated programs round-trip; mutated ones parse or fail
  // with ParseError.
  Rng rng(77);
  PolicyGen gen(rng);
  std::size_t programs = 0, mutants = 0, mutant_errors = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto src = gen.program();
    ++programs;
    try {
      const auto ast = policy::parse_policy(src);
      const auto printed = policy::print_policy(ast);
      const auto again = policy::parse_policy(printed);
      if (!(again == ast) || policy::print_policy(again) != printed) t.fail("round trip differs for: " + src);
      policy::evaluate(ast, AccessRequest{"bob", "coinB", Action::Read, "bids.bob", 5, {}}, PolicyState{}.ctx(5));
    } catch (const std::exception& e) {
      t.fail(std::string("generated program rejected (") + e.what() + "): " + src);
    }
    auto bad = src;
    const auto pos = rng.below(bad.size());
    bad[pos] = "();.\"!&|=<>+-* \nxa1#"[rng.below(20)];
    ++mutants;
    try {
      policy::parse_policy(bad);
    } catch (const policy::ParseError&) {
      ++mutant_errors;
    } catch (const std::exception& e) {
      t.fail(std::string("mutant threw a non-parse error (") + e.what() + "): " + bad);
    }
  }
  return {t.failures == 0, std::to_string(cases) + " request cases; " + std::to_string(programs) +
                               " generated programs round-tripped, " + std::to_string(mutants) + " mutants (" +
                               std::to_string(mutant_errors) + " ParseError, 0 crashes)" + t.str()};
}

// ---------------------------------------------------------------------------

Value random_value(Rng& rng) {
  switch (rng.below(4)) {
    case 0: return Value::integer(static_cast<std::int64_t>(rng.next() % 2001) - 1000);
    case 1: return Value::string(std::string(1 + rng.below(6), static_cast<char>('a' + rng.below(26))));
    case 2: return Value::boolean(rng.chance(0.5));
    default: {
      Bytes b(1 + rng.below(5));
      for (auto& x : b) x = static_cast<std::uint8_t>(rng.below(256));
      return Value::bytes(std::move(b));
    }
  }
}

std::string random_key(Rng& rng) {
  std::string k(1 + rng.below(6), 'a');
  for (auto& c : k) c = "abcdxyz.01"[rng.below(10)];
  return k;
}

std::map<std::string, Value> random_map(Rng& rng, std::uint64_t min_size) {
  std::map<std::string, Value> m;
  const auto n = min_size + rng.below(40);
  while (m.size() < n) m[random_key(rng)] = random_value(rng);
  return m;
}

/// Round trip through the wire format; a proof that no longer decodes is
/// rejected like one that does not verify.
bool accepts(const Digest& root, const chain::MerkleProof& p) {
  try {
    return chain::verify_proof(root, chain::decode_proof(chain::encode_proof(p)));
  } catch (const DecodeError&) {
    return false;
  }
}

void flip_byte(Rng& rng, std::string& s) {
  s[rng.below(s.size())] ^= static_cast<char>(1 + rng.below(255));
}

/// Flips one byte of the value's canonical encoding; false if the result no
/// longer decodes.
bool flip_value(Rng& rng, Value& v) {
  auto bytes = chain::encode_value(v);
  bytes[rng.below(bytes.size())] ^= static_cast<std::uint8_t>(1 + rng.below(255));
  try {
    v = chain::decode_value(bytes);
    return true;
  } catch (const DecodeError&) {
    return false;
  }
}

void flip_path(Rng& rng, std::vector<chain::PathStep>& path) {
  auto& step = path[rng.below(path.size())];
  const auto i = rng.below(33);
  if (i == 32) {
    step.side = static_cast<chain::Side>(static_cast<std::uint8_t>(step.side) ^ (1 + rng.below(255)));
  } else {
    step.sibling.bytes[i] ^= static_cast<std::uint8_t>(1 + rng.below(255));
  }
}

/// One byte of a leaf key, leaf value, or authentication path. For absence
/// proofs the mutated leaves are the bracketing witnesses.
std::string mutate(Rng& rng, chain::MerkleProof& p, bool& undecodable) {
  undecodable = false;
  chain::LeafWitness* w = nullptr;
  std::string* key = nullptr;
  Value* value = nullptr;
  std::vector<chain::PathStep>* path = nullptr;
  if (p.kind == chain::ProofKind::Membership) {
    key = &p.leaf_key;
    value = &*p.leaf_value;
    path = &p.path;
  } else {
    w = p.left && (!p.right || rng.chance(0.5)) ? &*p.left : &*p.right;
    key = &w->key;
    value = &w->value;
    path = &w->path;
  }
  const auto field = rng.below(path->empty() ? 2 : 3);
  if (field == 0) {
    flip_byte(rng, *key);
    return "key";
  }
  if (field == 1) {
    undecodable = !flip_value(rng, *value);
    return "value";
  }
  flip_path(rng, *path);
  return "path";
}

Outcome proof_soundness() {
  Rng rng(4242);
  Tally t;
  std::size_t membership = 0, absence = 0, valid = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto m = random_map(rng, 0);
    const chain::AuthenticatedMap am(m);
    std::string key;
    if (!m.empty() && rng.chance(0.5)) {
      auto it = m.begin();
      std::advance(it, rng.below(m.size()));
      key = it->first;
    } else {
      do key = random_key(rng); while (m.contains(key));
    }
    const auto p = am.prove(key);
    (p.kind == chain::ProofKind::Membership ? membership : absence)++;
    if (accepts(am.root(), p)) {
      ++valid;
    } else {
      t.fail("honest proof for " + key + " rejected");
    }
  }

  std::size_t mutations = 0, rejected = 0;
  std::map<std::string, std::size_t> by_field;
  while (mutations < 10000) {
    const auto m = random_map(rng, 1);
    const chain::AuthenticatedMap am(m);
    std::string key;
    if (rng.chance(0.5)) {
      auto it = m.begin();
      std::advance(it, rng.below(m.size()));
      key = it->first;
    } else {
      do key = random_key(rng); while (m.contains(key));
    }
    auto p = am.prove(key);
    bool undecodable = false;
    const auto field = mutate(rng, p, undecodable);
    ++mutations;
    ++by_field[field];
    if (undecodable || !accepts(am.root(), p)) {
      ++rejected;
    } else {
      t.fail("mutated " + field + " accepted for key " + key);
    }
  }
  std::string fields;
  for (const auto& [f, n] : by_field) fields += " " + f + "=" + std::to_string(n);
  return {valid == 10000 && rejected == mutations && t.failures == 0,
          std::to_string(valid) + "/10000 proofs verify (" + std::to_string(membership) + " membership, " +
              std::to_string(absence) + " absence); " + std::to_string(rejected) + "/" + std::to_string(mutations) +
              " mutations rejected (" + fields.substr(1) + ")" + t.str()};
}

// ---------------------------------------------------------------------------

std::vector<std::string> final_roots(const std::string& log_text) {
  const auto log = simctl::parse_log(log_text);
  std::map<std::string, std::string> last;
  for (const auto& [c, b] : log.blocks) last[c] = b.block.header.state_root.hex();
  std::vector<std::string> out;
  for (const auto& [c, r] : last) out.push_back(c + "=" + r);
  return out;
}

Outcome determinism() {
  Tally t;
  std::vector<simctl::ScenarioConfig> configs;
  for (const char* file : {"scenarios/auction.scn", "scenarios/race.scn"}) {
    const auto base = simctl::load_scenario(source_path(file));
    for (std::uint64_t seed : {1, 2, 3, 99, 12345}) {
      for (auto mode : {xchain::Mode::Occ, xchain::Mode::Locks}) {
        for (double drop : {0.0, 0.3}) {
          auto c = base;
          c.seed = seed;
          c.mode = mode;
          simctl::set_drop_rate(c, drop);
          configs.push_back(std::move(c));
        }
      }
    }
  }
  configs.push_back(simctl::parse_scenario(simctl::demo_scenario_text()));
  std::size_t identical = 0;
  for (const auto& c : configs) {
    const auto a = simctl::run_scenario(c);
    const auto b = simctl::run_scenario(c);
    const std::string tag = "seed " + std::to_string(c.seed) + " " + std::string(xchain::mode_name(c.mode)) + ": ";
    bool same = true;
    if (a.log != b.log) same = false, t.fail(tag + "logs differ");
    if (a.metrics_text != b.metrics_text) same = false, t.fail(tag + "metrics differ");
    if (final_roots(a.log) != final_roots(b.log)) same = false, t.fail(tag + "state roots differ");
    identical += same;
  }
  // Random transaction scenarios, compared on committed/aborted counts and
  // final state through the serial oracle's runner.
  Rng r1(9), r2(9);
  for (int i = 0; i < 10; ++i) {
    const auto s1 = testnet::random_scenario(r1);
    const auto s2 = testnet::random_scenario(r2);
    const auto a = testnet::run_scenario(700 + i, s1, xchain::Mode::Occ);
    const auto b = testnet::run_scenario(700 + i, s2, xchain::Mode::Occ);
    if (a.committed != b.committed || a.aborted != b.aborted) t.fail("random scenario " + std::to_string(i) + " differs");
  }
  return {t.failures == 0, std::to_string(identical) + "/" + std::to_string(configs.size()) +
                               " scenario pairs byte-identical in log, metrics and state roots" + t.str()};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"atomicity sweep", atomicity_sweep},     {"serializability oracle", serializability},
      {"freshness and authenticity", freshness}, {"round-trip accounting", round_trips},
      {"late-bid race", race_fixture},           {"policy suite", policy_suite},
      {"proof soundness", proof_soundness},     {"determinism", determinism},
  };
  bool all = true;
  int n = 0;
  for (const auto& c : criteria) {
    ++n;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    all &= o.pass;
    std::cout << "criterion " << n << " " << c.name << ": " << (o.pass ? "PASS" : "FAIL") << " (" << o.detail << ") ["
              << ms << " ms]" << std::endl;
  }
  return all ? 0 : 1;
}
