#include "interop/simctl/runner.hpp"

#include <deque>
#include <memory>
#include <numeric>

#include "interop/auction/driver.hpp"
#include "interop/simctl/runlog.hpp"
#include "interop/xbus/broker.hpp"

namespace interop::simctl {

using nlohmann::ordered_json;

namespace {

constexpr std::array<chain::Behavior, 3> kFaulty = {chain::Behavior::Silent, chain::Behavior::EquivocateDigest,
                                                    chain::Behavior::ForgeEvents};

struct ConcludeSlot {
  std::string aid;
  bool done = false;
  auction::ConcludeResult result;
};

sim::Task<void> run_conclude(auction::AuctionDriver* d, ConcludeSlot* slot) {
  auto task = d->conclude(slot->aid);
  slot->result = co_await task;
  slot->done = true;
}

chain::Value script_arg(const std::string& s) {
  try {
    std::size_t used = 0;
    const auto v = std::stoll(s, &used);
    if (used == s.size()) return chain::Value::integer(v);
  } catch (const std::logic_error&) {
  }
  return chain::Value::string(s);
}

/// Abort reasons grouped by their leading code.
std::string reason_code(const std::string& reason) {
  auto r = reason;
  const auto colon = r.find(':');
  if (colon != std::string::npos) r = r.substr(0, colon);
  const auto space = r.find(' ');
  if (space != std::string::npos) r = r.substr(0, space);
  return r.empty() ? "unspecified" : r;
}

class Run {
 public:
  explicit Run(const ScenarioConfig& cfg)
      : cfg_(cfg), text_(to_text(cfg)), world_(cfg.seed, chain::make_scheme(cfg.scheme)), log_(text_, cfg.seed) {}

  RunResult go() {
    setup();
    const auto t0 = world_.tick();
    std::size_t next = 0;
    RunResult out;
    while (true) {
      const auto rel = world_.tick() - t0;
      while (next < cfg_.script.size() && cfg_.script[next].tick <= rel) apply(cfg_.script[next++]);
      const bool finished = next == cfg_.script.size() && all_concluded() && world_.quiescent();
      if (finished) break;
      if (rel >= cfg_.max_ticks) {
        out.status = "MaxTicksExceeded";
        break;
      }
      world_.step();
    }
    out.metrics = metrics(out.status, world_.tick() - t0);
    out.metrics_text = out.metrics.dump(2);
    out.log = log_.finish(out.metrics_text);
    return out;
  }

 private:
  void setup() {
    const auto& scheme = world_.scheme();
    for (const auto& spec : cfg_.chains) {
      auto& c = world_.add_chain(chain::ChainConfig::generate(spec.id, spec.n, spec.f, scheme));
      for (const auto& [i, b] : spec.byzantine) c.set_behavior(c.node_id(i), b);
      // Draw order: per chain in file order, a node index (redrawn while it
      // hits an already faulty node), then a behavior.
      for (std::uint32_t k = 0; k < spec.random_byzantine; ++k) {
        std::uint32_t idx = 0;
        do {
          idx = static_cast<std::uint32_t>(world_.rng().below(spec.n));
        } while (c.behavior(c.node_id(idx)) != chain::Behavior::Honest);
        c.set_behavior(c.node_id(idx), kFaulty[world_.rng().below(kFaulty.size())]);
      }
      log_.block(c.id(), c.block(0));
    }
    for (const auto& b : cfg_.brokers) {
      world_.bus().add_broker(std::make_unique<xbus::Broker>(b.id, b.faults, world_.rng()));
    }
    world_.block_observers.push_back(
        [this](const chain::Chain& c, const chain::CertifiedBlock& b) { log_.block(c.id(), b); });
    world_.step();
    if (!cfg_.has_auction) return;
    auto acfg = cfg_.auction;
    acfg.mode = cfg_.mode;
    acfg.xcfg = cfg_.xcfg;
    driver_ = std::make_unique<auction::AuctionDriver>(world_, acfg);
    world_.step();
    driver_->mint(acfg.ticket_id, acfg.seller);
    for (const auto& [c, list] : cfg_.accounts) {
      for (const auto& [user, amount] : list) driver_->fund(c, user, amount);
    }
    world_.run_until([&] { return world_.quiescent(); }, 500);
  }

  std::string current_aid() {
    for (auto it = starts_.rbegin(); it != starts_.rend(); ++it) {
      if (auto id = driver_->started_id(*it)) return *id;
    }
    return "";
  }

  void apply(const Action& a) {
    const auto& ac = cfg_.auction;
    if (a.kind == "start_auction") {
      const auto close = world_.chain(ac.ticket_chain).height() + cfg_.window;
      starts_.push_back(driver_->start(a.args.empty() ? ac.seller : a.args[0], ac.ticket_id, close));
    } else if (a.kind == "submit_bid") {
      driver_->bid(a.args[0], a.args[1], current_aid(), std::stoll(a.args[2]));
    } else if (a.kind == "conclude") {
      auto& slot = concludes_.emplace_back();
      slot.aid = current_aid();
      world_.sched().spawn(run_conclude(driver_.get(), &slot));
    } else if (a.kind == "late_bid") {
      driver_->after_bidders_read = [this, a, armed = true](const std::string& c) mutable {
        if (!armed || c != a.args[0]) return;
        armed = false;
        driver_->bid(a.args[0], a.args[1], current_aid(), std::stoll(a.args[2]));
      };
    } else if (a.kind == "submit_txn") {
      std::vector<chain::Value> args;
      for (std::size_t i = 4; i < a.args.size(); ++i) args.push_back(script_arg(a.args[i]));
      world_.chain(a.args[0]).submit_call(chain::CallerRef::user(a.args[1]), a.args[2], a.args[3], std::move(args));
    } else if (a.kind == "crash_gateway") {
      world_.bus().gateway(a.args[0]).crash(world_.tick() + std::stoull(a.args[1]));
    } else if (a.kind == "set_byzantine") {
      auto& c = world_.chain(a.args[0]);
      const auto idx = static_cast<std::uint32_t>(std::stoul(a.args[1]));
      if (idx >= c.config().n) throw ConfigError("set_byzantine: node index out of range");
      c.set_behavior(c.node_id(idx), *chain::parse_behavior(a.args[2]));
    }
  }

  bool all_concluded() const {
    for (const auto& s : concludes_) {
      if (!s.done) return false;
    }
    return true;
  }

  ordered_json metrics(const std::string& status, std::uint64_t ticks) {
    ordered_json m;
    m["seed"] = cfg_.seed;
    m["mode"] = std::string(xchain::mode_name(cfg_.mode));
    m["status"] = status;
    m["ticks"] = ticks;

    ordered_json auctions = ordered_json::array();
    std::map<std::string, std::uint64_t> aborts;
    for (const auto& s : concludes_) {
      ordered_json a;
      const auto& r = s.result;
      a["auction_id"] = s.aid;
      a["status"] = s.done ? std::string(auction::conclude_status_name(r.status)) : "Unfinished";
      if (r.winner) {
        const auto n = auction::Normalized::of(r.winner->amount, cfg_.auction.rates.at(r.winner->chain));
        const auto g = std::gcd(static_cast<std::int64_t>(n.num), static_cast<std::int64_t>(n.den));
        a["winner"] = {{"chain", r.winner->chain},
                       {"user", r.winner->user},
                       {"amount", r.winner->amount},
                       {"normalized", std::to_string(static_cast<std::int64_t>(n.num) / g) + "/" +
                                          std::to_string(static_cast<std::int64_t>(n.den) / g)}};
      } else {
        a["winner"] = nullptr;
      }
      a["attempts"] = r.attempts;
      a["aborts"] = r.aborts;
      a["txn_id"] = r.txn_id;
      a["read_trips"] = r.read_trips;
      const auto& txns = driver_->coordinator().meter().txns();
      const auto it = txns.find(r.txn_id);
      a["round_trips"] = it == txns.end() ? 0 : it->second.round_trips;
      auctions.push_back(std::move(a));
    }
    m["auctions"] = std::move(auctions);

    ordered_json txns = ordered_json::object();
    if (driver_) {
      for (const auto& [id, t] : driver_->coordinator().meter().txns()) {
        txns[id] = {{"kind", t.kind},
                    {"round_trips", t.round_trips},
                    {"retransmissions", t.retransmissions},
                    {"outcome", t.outcome},
                    {"reason", t.reason}};
        if (t.outcome == "aborted") ++aborts[reason_code(t.reason)];
      }
    }
    m["txns"] = std::move(txns);
    m["aborts_by_reason"] = aborts;

    xbus::BrokerStats bs;
    for (const auto& b : world_.bus().brokers()) {
      const auto& s = b->stats();
      bs.published += s.published;
      bs.dropped += s.dropped;
      bs.duplicated += s.duplicated;
      bs.replayed += s.replayed;
      bs.forged += s.forged;
      bs.delivered += s.delivered;
    }
    const auto& st = world_.bus().stats();
    const auto& cs = st.consumer;
    m["messages"] = {{"events_emitted", st.events_emitted},
                     {"sent", bs.published},
                     {"dropped", bs.dropped},
                     {"duplicated", bs.duplicated},
                     {"replayed", bs.replayed},
                     {"forged", bs.forged},
                     {"delivered", bs.delivered},
                     {"accepted", cs.accepted},
                     {"rejected", cs.malformed + cs.misrouted + cs.invalid + cs.duplicates},
                     {"rejected_invalid", cs.invalid},
                     {"rejected_duplicate", cs.duplicates},
                     {"relay_retransmits", st.relay_retransmits}};

    ordered_json chains = ordered_json::object();
    for (const auto& [id, c] : world_.chains()) {
      const auto& s = c->stats();
      chains[id] = {{"height", c->height()},
                    {"blocks", s.blocks},
                    {"txns", s.txns},
                    {"failed", s.failed},
                    {"quorum_failures", s.quorum_failures},
                    {"state_root", c->block(c->height()).block.header.state_root.hex()}};
    }
    m["chains"] = std::move(chains);
    return m;
  }

  const ScenarioConfig& cfg_;
  std::string text_;
  sim::World world_;
  LogWriter log_;
  std::unique_ptr<auction::AuctionDriver> driver_;
  std::vector<Digest> starts_;
  std::deque<ConcludeSlot> concludes_;
};

}  // namespace

RunResult run_scenario(const ScenarioConfig& cfg) {
  Run run(cfg);
  return run.go();
}

std::string demo_scenario_text() {
  return R"(seed = 42
mode = occ

[chain ticket]
[chain coinB]
[chain coinC]

[broker br0]

[rates]
coinB = 1/2
coinC = 3/2

[auction]
ticket_chain = ticket
bidder_chains = coinB,coinC
seller = alice
ticket = t1
window = 40

[accounts coinB]
bob = 500
dave = 80

[accounts coinC]
carol = 500

[script]
0 start_auction
20 submit_bid coinB bob 100
21 submit_bid coinC carol 40
22 submit_bid coinB dave 60
30 conclude
)";
}

}  // namespace interop::simctl
