#include "interop/auction/contracts.hpp"

#include "interop/auction/rational.hpp"

namespace interop::auction {

using chain::arg;
using chain::arg_int;
using chain::arg_str;
using chain::ContractFailure;
using chain::ExecContext;
using chain::Value;

Rate Rate::parse(const std::string& text) {
  Rate r;
  try {
    const auto slash = text.find('/');
    std::size_t used = 0;
    if (slash == std::string::npos) {
      r.num = std::stoll(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    } else {
      const auto a = text.substr(0, slash);
      const auto b = text.substr(slash + 1);
      r.num = std::stoll(a, &used);
      if (used != a.size()) throw std::invalid_argument(text);
      r.den = std::stoll(b, &used);
      if (used != b.size()) throw std::invalid_argument(text);
    }
  } catch (const std::logic_error&) {
    throw std::invalid_argument("bad rate: " + text);
  }
  if (r.num <= 0 || r.den <= 0) throw std::invalid_argument("rate must be positive: " + text);
  return r;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < csv.size()) {
    const auto comma = csv.find(',', start);
    const auto end = comma == std::string::npos ? csv.size() : comma;
    if (end > start) out.push_back(csv.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

namespace {

std::int64_t int_or_zero(const Value& v) { return v.is_int() ? v.as_int() : 0; }

std::string str_or_empty(const Value& v) { return v.is_str() ? v.as_str() : std::string(); }

}  // namespace

// ---------------------------------------------------------------- Bidder

policy::AccessRequest Bidder::access_request(const std::string& method, const std::vector<Value>& args,
                                             const chain::CallerRef& caller) const {
  if (method == "submit_bid") return {caller.id, caller.chain, policy::Action::Write, "bids." + caller.id, 0, args};
  return Contract::access_request(method, args, caller);
}

Value Bidder::call(ExecContext& ctx, const std::string& method, const std::vector<Value>& args) {
  const auto& caller = ctx.caller();
  if (method == "fund") {
    if (!caller.is_user() || caller.id != funder_) throw ContractFailure("NotFunder", caller.id);
    const std::string& user = arg_str(args, 0);
    const auto amount = arg_int(args, 1);
    if (amount <= 0) throw ContractFailure("BadArgs", "amount must be positive");
    ctx.put("balance." + user, Value::integer(int_or_zero(ctx.get("balance." + user)) + amount));
    return Value::null();
  }
  if (method == "start_auction") {
    if (caller.is_user() || caller.id != kAuctioneer || caller.chain != auctioneer_chain_) {
      throw ContractFailure("NotAuctioneer", caller.chain + "/" + caller.id);
    }
    const std::string& aid = arg_str(args, 0);
    const auto window = arg_int(args, 1);
    if (window <= 0) throw ContractFailure("BadArgs", "window must be positive");
    if (str_or_empty(ctx.get("auction.status")) == "open") throw ContractFailure("AuctionOpen", aid);
    ctx.put("auction.id", Value::string(aid));
    ctx.put("auction.status", Value::string("open"));
    ctx.put("auction.close_height", Value::integer(static_cast<std::int64_t>(ctx.height()) + window));
    ctx.put("auctions." + aid, Value::integer(static_cast<std::int64_t>(ctx.height())));
    ctx.put("bidders", Value::string(""));
    return Value::null();
  }
  if (method == "submit_bid") {
    if (!caller.is_user()) throw ContractFailure("BadCaller", "bids come from users");
    const std::string& aid = arg_str(args, 0);
    const auto amount = arg_int(args, 1);
    if (str_or_empty(ctx.get("auction.id")) != aid) throw ContractFailure("WrongAuction", aid);
    if (amount < 0) throw ContractFailure("BadArgs", "negative bid");
    const auto balance = int_or_zero(ctx.get("balance." + caller.id));
    if (balance < amount) {
      throw ContractFailure("InsufficientFunds", std::to_string(balance) + " < " + std::to_string(amount));
    }
    ctx.put("balance." + caller.id, Value::integer(balance - amount));
    ctx.put("escrow." + caller.id, Value::integer(int_or_zero(ctx.get("escrow." + caller.id)) + amount));
    ctx.put("bids." + caller.id, Value::integer(amount));
    ctx.put("bidh." + caller.id, Value::integer(static_cast<std::int64_t>(ctx.height())));
    const auto list = str_or_empty(ctx.get("bidders"));
    ctx.put("bidders", Value::string(list.empty() ? caller.id : list + "," + caller.id));
    return Value::null();
  }
  throw ContractFailure("UnknownMethod", method);
}

// ---------------------------------------------------------------- Auctioneer

Value Auctioneer::call(ExecContext& ctx, const std::string& method, const std::vector<Value>& args) {
  const auto& caller = ctx.caller();
  if (method == "mint") {
    if (!caller.is_user() || caller.id != minter_) throw ContractFailure("NotMinter", caller.id);
    const std::string& tid = arg_str(args, 0);
    if (!ctx.get("ticket." + tid + ".owner").is_null()) throw ContractFailure("TicketExists", tid);
    ctx.put("ticket." + tid + ".owner", Value::string(arg_str(args, 1)));
    ctx.put("ticket." + tid + ".escrowed", Value::boolean(false));
    return Value::null();
  }
  if (method == "start_auction") {
    const std::string& tid = arg_str(args, 0);
    const auto close = arg_int(args, 1);
    const Value owner = ctx.get("ticket." + tid + ".owner");
    if (!caller.is_user() || !owner.is_str() || owner.as_str() != caller.id) {
      throw ContractFailure("NotOwner", caller.id + " does not own " + tid);
    }
    if (ctx.get("ticket." + tid + ".escrowed") == Value::boolean(true)) throw ContractFailure("AlreadyEscrowed", tid);
    const auto h = static_cast<std::int64_t>(ctx.height());
    if (close <= h) throw ContractFailure("BadArgs", "close height must be in the future");
    const auto n = int_or_zero(ctx.get("next_id")) + 1;
    const std::string aid = "a" + std::to_string(n);
    ctx.put("next_id", Value::integer(n));
    const std::string a = "auction." + aid + ".";
    ctx.put(a + "ticket", Value::string(tid));
    ctx.put(a + "seller", Value::string(caller.id));
    ctx.put(a + "status", Value::string("open"));
    ctx.put(a + "close_height", Value::integer(close));
    ctx.put("ticket." + tid + ".escrowed", Value::boolean(true));
    for (const auto& c : bidder_chains_) {
      xbus::Event e;
      e.dest_chain = c;
      e.dest_contract = kBidder;
      e.kind = static_cast<std::uint8_t>(xbus::EventKind::Call);
      e.payload = chain::encode_call("start_auction", {Value::string(aid), Value::integer(close - h)});
      ctx.emit(std::move(e));
    }
    return Value::string(aid);
  }
  throw ContractFailure("UnknownMethod", method);
}

// ---------------------------------------------------------------- policies

std::string bidder_policy(const std::string& auctioneer_chain, const std::string& funder) {
  const std::string who = "caller.id == \"Auctioneer\" && caller.chain == \"" + auctioneer_chain + "\"";
  return "allow write on bids.* when state(\"auction.status\") == \"open\" && !exists(\"bids.\" + caller.id) && "
         "block.height <= state(\"auction.close_height\");\n"
         "allow invoke on start_auction when count(\"auctions.\", block.height - 100, block.height) <= 3;\n"
         "allow invoke on fund when caller.id == \"" + funder + "\";\n"
         "allow read on * when " + who + ";\n"
         "allow write on * when " + who + ";\n";
}

std::string auctioneer_policy(const std::string& ticket_chain) {
  const std::string who = "caller.id == \"Auctioneer\" && caller.chain == \"" + ticket_chain + "\"";
  return "allow invoke on *;\n"
         "allow read on * when " + who + ";\n"
         "allow write on * when " + who + ";\n"
         "allow read on agg.sum.winning_bids when caller.id == \"auditor\";\n";
}

}  // namespace interop::auction
