#include "doctest.h"
#include "interop/simctl/audit.hpp"
#include "interop/simctl/runlog.hpp"
#include "interop/simctl/runner.hpp"

using namespace interop;
using namespace interop::simctl;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  FAIL("no ConfigError for:\n" << text);
  return "";
}

/// Rewrites a parsed log, letting `edit` change blocks first.
std::string rewrite(const RunLog& log, const std::function<void(RunLog&)>& edit) {
  RunLog copy = log;
  edit(copy);
  LogWriter w(copy.config_text, copy.seed);
  for (const auto& [c, b] : copy.blocks) w.block(c, b);
  return w.finish(copy.metrics.dump(2));
}

}  // namespace

TEST_CASE("scenario parse errors name the line") {
  CHECK(config_error("seed = x\n").find("line 1") != std::string::npos);
  CHECK(config_error("[chain a]\nn = 3\nf = 1\n").find("line 1: chain a: n must be at least 3f+1") != std::string::npos);
  CHECK(config_error("[chain a]\n[chain a]\n").find("line 2") != std::string::npos);
  CHECK(config_error("[bogus]\n").find("line 1") != std::string::npos);
  CHECK(config_error("[chain a]\n[script]\n5 submit_bid nowhere bob 1\n").find("line 3") != std::string::npos);
  CHECK(config_error("[chain a]\n[script]\n5 teleport\n").find("line 3") != std::string::npos);
  CHECK(config_error("[chain a]\n[broker b]\ndrop_rate = 1.5\n").find("line 3") != std::string::npos);
  const auto unknown = config_error("[chain t]\n[chain a]\n[auction]\nticket_chain = t\nbidder_chains = a,z\n[rates]\na = 1/1\n");
  CHECK(unknown.find("line 5") != std::string::npos);
  CHECK(unknown.find("\"z\"") != std::string::npos);
  CHECK(config_error("[chain a]\n").find("no brokers") != std::string::npos);
}

TEST_CASE("to_text is canonical") {
  const auto c = parse_scenario(demo_scenario_text());
  const auto text = to_text(c);
  CHECK(to_text(parse_scenario(text)) == text);
  auto d = c;
  set_drop_rate(d, 0.1);
  CHECK(to_text(parse_scenario(to_text(d))) == to_text(d));
  CHECK(parse_scenario(to_text(d)).brokers.at(0).faults.drop_rate == 0.1);
}

TEST_CASE("demo run concludes and audits clean") {
  const auto r = run_scenario(parse_scenario(demo_scenario_text()));
  CHECK(r.status == "ok");
  const auto& a = r.metrics["auctions"].at(0);
  CHECK(a["status"] == "Concluded");
  CHECK(a["winner"]["user"] == "carol");
  CHECK(a["round_trips"].get<int>() >= a["read_trips"].get<int>() + 2);
  const auto rep = audit_text(r.log);
  CHECK_MESSAGE(rep.ok(), rep.str());
  CHECK(run_scenario(parse_scenario(demo_scenario_text())).log == r.log);
}

TEST_CASE("a planted orphan write is reported by chain, key and txn") {
  const auto r = run_scenario(parse_scenario(demo_scenario_text()));
  const auto log = parse_log(r.log);
  const auto text = rewrite(log, [](RunLog& l) {
    for (auto it = l.blocks.rbegin(); it != l.blocks.rend(); ++it) {
      if (it->first != "coinB" || it->second.block.receipts.empty()) continue;
      auto& rc = it->second.block.receipts.back();
      rc.xtxn_id = "feedface";
      rc.writes.emplace_back("Bidder.orphan", chain::Value::integer(1));
      return;
    }
  });
  const auto rep = audit_text(text);
  const auto& at = rep.get("atomicity");
  CHECK_FALSE(at.pass);
  bool named = false;
  for (const auto& v : at.violations) {
    named |= v.find("coinB") != std::string::npos && v.find("Bidder.orphan") != std::string::npos &&
             v.find("feedface") != std::string::npos;
  }
  CHECK(named);
}

TEST_CASE("damaged logs are CorruptLog") {
  const auto r = run_scenario(parse_scenario(demo_scenario_text()));
  CHECK_THROWS_AS(parse_log(r.log.substr(0, r.log.size() / 2)), CorruptLog);
  auto flipped = r.log;
  flipped[flipped.size() / 2] ^= 1;
  CHECK_THROWS_AS(parse_log(flipped), CorruptLog);
  CHECK_THROWS_AS(audit_text("interop-run-log 1\n"), CorruptLog);

  // A gap in a chain's heights, with a valid checksum.
  const auto log = parse_log(r.log);
  const auto gap = rewrite(log, [](RunLog& l) {
    for (auto it = l.blocks.begin(); it != l.blocks.end(); ++it) {
      if (it->first == "coinB" && it->second.block.header.height == 1) {
        l.blocks.erase(it);
        return;
      }
    }
  });
  CHECK_THROWS_AS(parse_log(gap), CorruptLog);
}

TEST_CASE("replaying a log's config reproduces it byte for byte") {
  auto c = parse_scenario(demo_scenario_text());
  c.seed = 5;
  set_drop_rate(c, 0.2);
  const auto r = run_scenario(c);
  const auto log = parse_log(r.log);
  CHECK(log.seed == 5);
  const auto again = run_scenario(parse_scenario(log.config_text));
  CHECK(again.log == r.log);
  CHECK(again.metrics_text == r.metrics_text);
}
