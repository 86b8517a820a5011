#include "interop/simctl/scenario.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace interop::simctl {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

struct Line {
  int no;
  std::string key;
  std::string value;
};

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

std::uint64_t to_u64(const Line& l) {
  try {
    std::size_t used = 0;
    if (l.value.empty() || l.value[0] == '-') throw std::invalid_argument(l.value);
    const auto v = std::stoull(l.value, &used);
    if (used != l.value.size()) throw std::invalid_argument(l.value);
    return v;
  } catch (const std::logic_error&) {
    fail(l.no, l.key + ": expected a non-negative integer, got \"" + l.value + "\"");
  }
}

std::int64_t to_i64(const Line& l) {
  try {
    std::size_t used = 0;
    const auto v = std::stoll(l.value, &used);
    if (used != l.value.size()) throw std::invalid_argument(l.value);
    return v;
  } catch (const std::logic_error&) {
    fail(l.no, l.key + ": expected an integer, got \"" + l.value + "\"");
  }
}

double to_rate(const Line& l) {
  try {
    std::size_t used = 0;
    const auto v = std::stod(l.value, &used);
    if (used != l.value.size() || v < 0 || v > 1) throw std::invalid_argument(l.value);
    return v;
  } catch (const std::logic_error&) {
    fail(l.no, l.key + ": expected a probability in [0, 1], got \"" + l.value + "\"");
  }
}

bool to_bool(const Line& l) {
  if (l.value == "true") return true;
  if (l.value == "false") return false;
  fail(l.no, l.key + ": expected true or false");
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void parse_byzantine(const Line& l, ChainSpec& c) {
  if (l.value.find(':') == std::string::npos) {
    c.random_byzantine = static_cast<std::uint32_t>(to_u64(l));
    return;
  }
  std::string item;
  std::istringstream in(l.value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    const auto colon = item.find(':');
    if (colon == std::string::npos) fail(l.no, "byzantine: expected <index>:<behavior>");
    const auto b = chain::parse_behavior(item.substr(colon + 1));
    if (!b) fail(l.no, "unknown behavior \"" + item.substr(colon + 1) + "\"");
    c.byzantine[static_cast<std::uint32_t>(to_u64({l.no, "byzantine", item.substr(0, colon)}))] = *b;
  }
}

void check_action(const Action& a, int line) {
  static const std::map<std::string, std::pair<std::size_t, std::size_t>> arity = {
      {"start_auction", {0, 1}}, {"submit_bid", {3, 3}},    {"conclude", {0, 0}},
      {"submit_txn", {4, 64}},   {"crash_gateway", {2, 2}}, {"set_byzantine", {3, 3}},
      {"late_bid", {3, 3}},
  };
  const auto it = arity.find(a.kind);
  if (it == arity.end()) fail(line, "unknown action \"" + a.kind + "\"");
  if (a.args.size() < it->second.first || a.args.size() > it->second.second) {
    fail(line, a.kind + ": wrong number of arguments");
  }
}

}  // namespace

xchain::Mode parse_mode(const std::string& s) {
  if (s == "occ") return xchain::Mode::Occ;
  if (s == "locks") return xchain::Mode::Locks;
  throw ConfigError("mode must be occ or locks, got \"" + s + "\"");
}

ScenarioConfig parse_scenario(const std::string& text) {
  ScenarioConfig c;
  c.auction.bidder_chains.clear();
  c.auction.rates.clear();
  std::string section;
  std::string target;
  std::set<std::string> seen_sections;
  std::istringstream in(text);
  std::string raw;
  int no = 0;
  // Where things were declared, for validation errors after the pass.
  std::map<std::string, int> rate_lines;
  std::vector<int> chain_lines;
  std::map<std::string, int> account_lines;
  std::map<std::string, int> auction_lines;
  std::vector<int> script_lines;
  int auction_line = 0;
  while (std::getline(in, raw)) {
    ++no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(no, "unterminated section header");
      const auto w = words(line.substr(1, line.size() - 2));
      if (w.empty() || w.size() > 2) fail(no, "bad section header");
      section = w[0];
      target = w.size() == 2 ? w[1] : "";
      const bool named = section == "chain" || section == "broker" || section == "accounts";
      const bool plain = section == "xchain" || section == "rates" || section == "auction" || section == "script";
      if (!named && !plain) fail(no, "unknown section [" + section + "]");
      if (named == target.empty()) fail(no, "[" + section + "] " + (named ? "needs an id" : "takes no id"));
      if (!seen_sections.insert(section + " " + target).second) fail(no, "duplicate section");
      if (section == "chain") {
        c.chains.push_back(ChainSpec{target, 4, 1, {}, 0});
        chain_lines.push_back(no);
      }
      if (section == "broker") c.brokers.push_back({target, {}});
      if (section == "auction") {
        c.has_auction = true;
        auction_line = no;
      }
      if (section == "accounts") {
        c.accounts[target];
        account_lines[target] = no;
      }
      continue;
    }
    if (section == "script") {
      const auto w = words(line);
      if (w.size() < 2) fail(no, "script lines are <tick> <action> [args]");
      Action a;
      a.tick = to_u64({no, "tick", w[0]});
      a.kind = w[1];
      a.args.assign(w.begin() + 2, w.end());
      check_action(a, no);
      if (!c.script.empty() && a.tick < c.script.back().tick) fail(no, "script ticks must be non-decreasing");
      c.script.push_back(std::move(a));
      script_lines.push_back(no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(no, "expected key = value");
    const Line l{no, trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
    if (l.key.empty()) fail(no, "empty key");
    if (section.empty()) {
      if (l.key == "seed") c.seed = to_u64(l);
      else if (l.key == "mode") c.mode = parse_mode(l.value);
      else if (l.key == "max_ticks") c.max_ticks = to_u64(l);
      else if (l.key == "scheme") c.scheme = l.value;
      else fail(no, "unknown key \"" + l.key + "\"");
    } else if (section == "chain") {
      auto& ch = c.chains.back();
      if (l.key == "n") ch.n = static_cast<std::uint32_t>(to_u64(l));
      else if (l.key == "f") ch.f = static_cast<std::uint32_t>(to_u64(l));
      else if (l.key == "byzantine") parse_byzantine(l, ch);
      else fail(no, "unknown chain key \"" + l.key + "\"");
    } else if (section == "broker") {
      auto& fp = c.brokers.back().faults;
      if (l.key == "drop_rate") fp.drop_rate = to_rate(l);
      else if (l.key == "duplicate_rate") fp.duplicate_rate = to_rate(l);
      else if (l.key == "replay_rate") fp.replay_rate = to_rate(l);
      else if (l.key == "forge") fp.forge = to_bool(l);
      else fail(no, "unknown broker key \"" + l.key + "\"");
    } else if (section == "xchain") {
      if (l.key == "response_timeout") c.xcfg.response_timeout = to_u64(l);
      else if (l.key == "retry_limit") c.xcfg.retry_limit = static_cast<std::uint32_t>(to_u64(l));
      else if (l.key == "lock_timeout") c.xcfg.lock_timeout = to_u64(l);
      else if (l.key == "lock_retry_delay") c.xcfg.lock_retry_delay = to_u64(l);
      else fail(no, "unknown xchain key \"" + l.key + "\"");
    } else if (section == "rates") {
      try {
        c.auction.rates[l.key] = auction::Rate::parse(l.value);
      } catch (const std::invalid_argument& e) {
        fail(no, e.what());
      }
      rate_lines[l.key] = no;
    } else if (section == "auction") {
      auto& a = c.auction;
      auction_lines[l.key] = no;
      if (l.key == "ticket_chain") a.ticket_chain = l.value;
      else if (l.key == "bidder_chains") a.bidder_chains = auction::split_list(l.value);
      else if (l.key == "seller") a.seller = l.value;
      else if (l.key == "ticket") a.ticket_id = l.value;
      else if (l.key == "operator") a.operator_id = l.value;
      else if (l.key == "funder") a.funder = l.value;
      else if (l.key == "window") c.window = to_u64(l);
      else if (l.key == "conclude_attempts") a.conclude_attempts = static_cast<std::uint32_t>(to_u64(l));
      else if (l.key == "conclude_backoff") a.conclude_backoff = to_u64(l);
      else fail(no, "unknown auction key \"" + l.key + "\"");
    } else if (section == "accounts") {
      const auto amount = to_i64(l);
      if (amount <= 0) fail(no, "account amounts must be positive");
      c.accounts[target].emplace_back(l.key, amount);
    }
  }

  // Resolve references.
  std::set<std::string> ids;
  for (std::size_t i = 0; i < c.chains.size(); ++i) {
    const auto& ch = c.chains[i];
    const int at = chain_lines[i];
    if (!ids.insert(ch.id).second) fail(at, "duplicate chain " + ch.id);
    if (ch.n < 3 * ch.f + 1) fail(at, "chain " + ch.id + ": n must be at least 3f+1");
    for (const auto& [idx, b] : ch.byzantine) {
      if (idx >= ch.n) fail(at, "chain " + ch.id + ": node index out of range");
    }
    if (!ch.byzantine.empty() && ch.random_byzantine > 0) {
      fail(at, "chain " + ch.id + ": byzantine is either a list or a count");
    }
    if (ch.byzantine.size() + ch.random_byzantine > ch.n) fail(at, "chain " + ch.id + ": too many byzantine");
  }
  if (c.chains.empty()) throw ConfigError("no chains");
  auto need_chain = [&](const std::string& id, int at, const std::string& where) {
    if (!ids.contains(id)) fail(at, where + ": unknown chain \"" + id + "\"");
  };
  auto auction_at = [&](const std::string& key) {
    const auto it = auction_lines.find(key);
    return it == auction_lines.end() ? auction_line : it->second;
  };
  for (const auto& [k, line] : rate_lines) need_chain(k, line, "[rates]");
  for (const auto& [ch, list] : c.accounts) {
    const int at = account_lines[ch];
    need_chain(ch, at, "[accounts]");
    if (c.has_auction &&
        std::find(c.auction.bidder_chains.begin(), c.auction.bidder_chains.end(), ch) == c.auction.bidder_chains.end()) {
      fail(at, "[accounts " + ch + "]: not a bidder chain");
    }
    if (!c.has_auction) fail(at, "[accounts] needs an [auction]");
  }
  if (c.has_auction) {
    need_chain(c.auction.ticket_chain, auction_at("ticket_chain"), "ticket_chain");
    const int bc_at = auction_at("bidder_chains");
    if (c.auction.bidder_chains.empty()) fail(bc_at, "bidder_chains is empty");
    for (const auto& b : c.auction.bidder_chains) {
      need_chain(b, bc_at, "bidder_chains");
      if (b == c.auction.ticket_chain) fail(bc_at, "ticket chain cannot be a bidder chain");
      if (!c.auction.rates.contains(b)) fail(bc_at, "[rates] missing rate for " + b);
    }
    if (c.window == 0) fail(auction_at("window"), "window must be positive");
  }
  for (std::size_t i = 0; i < c.script.size(); ++i) {
    const auto& a = c.script[i];
    const int at = script_lines[i];
    const bool auction_action =
        a.kind == "start_auction" || a.kind == "submit_bid" || a.kind == "conclude" || a.kind == "late_bid";
    if (auction_action && !c.has_auction) fail(at, a.kind + " needs an [auction]");
    if (a.kind == "submit_bid" || a.kind == "late_bid") {
      const auto& bc = c.auction.bidder_chains;
      if (std::find(bc.begin(), bc.end(), a.args[0]) == bc.end()) {
        fail(at, a.kind + ": \"" + a.args[0] + "\" is not a bidder chain");
      }
      to_i64({at, "amount", a.args[2]});
    }
    if (a.kind == "submit_txn" || a.kind == "crash_gateway" || a.kind == "set_byzantine") need_chain(a.args[0], at, a.kind);
    if (a.kind == "crash_gateway") to_u64({at, "ticks", a.args[1]});
    if (a.kind == "set_byzantine") {
      to_u64({at, "node", a.args[1]});
      if (!chain::parse_behavior(a.args[2])) fail(at, "set_byzantine: unknown behavior " + a.args[2]);
    }
  }
  if (c.brokers.empty()) throw ConfigError("no brokers");
  try {
    chain::make_scheme(c.scheme);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_scenario(ss.str());
}

std::string to_text(const ScenarioConfig& c) {
  std::ostringstream o;
  o << "seed = " << c.seed << "\n";
  o << "mode = " << (c.mode == xchain::Mode::Locks ? "locks" : "occ") << "\n";
  o << "max_ticks = " << c.max_ticks << "\n";
  o << "scheme = " << c.scheme << "\n";
  for (const auto& ch : c.chains) {
    o << "\n[chain " << ch.id << "]\nn = " << ch.n << "\nf = " << ch.f << "\n";
    if (!ch.byzantine.empty()) {
      o << "byzantine = ";
      bool first = true;
      for (const auto& [i, b] : ch.byzantine) {
        o << (first ? "" : ",") << i << ":" << chain::behavior_name(b);
        first = false;
      }
      o << "\n";
    }
    if (ch.random_byzantine > 0) {
      o << "byzantine = " << ch.random_byzantine << "\n";
    }
  }
  for (const auto& b : c.brokers) {
    o << "\n[broker " << b.id << "]\n";
    o << "drop_rate = " << fmt_double(b.faults.drop_rate) << "\n";
    o << "duplicate_rate = " << fmt_double(b.faults.duplicate_rate) << "\n";
    o << "replay_rate = " << fmt_double(b.faults.replay_rate) << "\n";
    o << "forge = " << (b.faults.forge ? "true" : "false") << "\n";
  }
  o << "\n[xchain]\nresponse_timeout = " << c.xcfg.response_timeout << "\nretry_limit = " << c.xcfg.retry_limit
    << "\nlock_timeout = " << c.xcfg.lock_timeout << "\nlock_retry_delay = " << c.xcfg.lock_retry_delay << "\n";
  if (c.has_auction) {
    const auto& a = c.auction;
    o << "\n[rates]\n";
    for (const auto& [ch, r] : a.rates) o << ch << " = " << r.str() << "\n";
    o << "\n[auction]\nticket_chain = " << a.ticket_chain << "\nbidder_chains = ";
    for (std::size_t i = 0; i < a.bidder_chains.size(); ++i) o << (i ? "," : "") << a.bidder_chains[i];
    o << "\nseller = " << a.seller << "\nticket = " << a.ticket_id << "\noperator = " << a.operator_id
      << "\nfunder = " << a.funder << "\nwindow = " << c.window << "\nconclude_attempts = " << a.conclude_attempts
      << "\nconclude_backoff = " << a.conclude_backoff << "\n";
    for (const auto& [ch, list] : c.accounts) {
      o << "\n[accounts " << ch << "]\n";
      for (const auto& [u, amount] : list) o << u << " = " << amount << "\n";
    }
  }
  o << "\n[script]\n";
  for (const auto& a : c.script) {
    o << a.tick << " " << a.kind;
    for (const auto& x : a.args) o << " " << x;
    o << "\n";
  }
  return o.str();
}

void set_drop_rate(ScenarioConfig& c, double rate) {
  if (rate < 0 || rate > 1) throw ConfigError("drop rate must be in [0, 1]");
  for (auto& b : c.brokers) b.faults.drop_rate = rate;
}

}  // namespace interop::simctl
