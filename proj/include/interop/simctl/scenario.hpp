#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "interop/auction/driver.hpp"
#include "interop/chain/chain.hpp"
#include "interop/xbus/broker.hpp"

namespace interop::simctl {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChainSpec {
  std::string id;
  std::uint32_t n = 4;
  std::uint32_t f = 1;
  /// Explicit node index -> behavior.
  std::map<std::uint32_t, chain::Behavior> byzantine;
  /// Additional nodes made Byzantine at random (index and behavior drawn
  /// from the run's generator).
  std::uint32_t random_byzantine = 0;
};

struct BrokerSpec {
  std::string id;
  xbus::FaultProfile faults;
};

/// One timed script line: `<tick> <action> <args...>`, tick relative to the
/// end of setup.
struct Action {
  std::uint64_t tick = 0;
  std::string kind;
  std::vector<std::string> args;
};

/// Parsed scenario. Text format, one `key = value` per line, `#` comments:
///
///   seed = 42
///   mode = occ | locks
///   max_ticks = 20000
///   scheme = test | ed25519
///
///   [chain <id>]      n, f, byzantine = "<idx>:<behavior>,..." | <count>
///   [broker <id>]     drop_rate, duplicate_rate, replay_rate, forge
///   [xchain]          response_timeout, retry_limit, lock_timeout, lock_retry_delay
///   [rates]           <chain> = <num>/<den>
///   [auction]         ticket_chain, bidder_chains, seller, ticket, operator,
///                     funder, window, conclude_attempts, conclude_backoff
///   [accounts <chain>] <user> = <amount>
///   [script]          <tick> <action> <args...>
///
/// Script actions: start_auction [caller], submit_bid <chain> <user> <amount>,
/// conclude, submit_txn <chain> <user> <contract> <method> [args...],
/// crash_gateway <chain> <ticks>, set_byzantine <chain> <node> <behavior>,
/// late_bid <chain> <user> <amount> (submitted right after the next
/// conclusion attempt reads <chain>'s bidder list).
struct ScenarioConfig {
  std::uint64_t seed = 42;
  xchain::Mode mode = xchain::Mode::Occ;
  std::uint64_t max_ticks = 20000;
  std::string scheme = "test";
  std::vector<ChainSpec> chains;
  std::vector<BrokerSpec> brokers;
  xchain::XConfig xcfg;
  bool has_auction = false;
  auction::AuctionConfig auction;
  std::uint64_t window = 40;
  /// chain -> (user, amount), in file order.
  std::map<std::string, std::vector<std::pair<std::string, std::int64_t>>> accounts;
  std::vector<Action> script;
};

/// Throws ConfigError with a line number on malformed input or ids that do
/// not resolve.
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);
/// Canonical text form; parse_scenario(to_text(c)) reproduces c.
std::string to_text(const ScenarioConfig& c);

/// Overwrites every broker's drop rate.
void set_drop_rate(ScenarioConfig& c, double rate);
xchain::Mode parse_mode(const std::string& s);

}  // namespace interop::simctl
