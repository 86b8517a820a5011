#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "interop/chain/state_store.hpp"
#include "interop/chain/value.hpp"
#include "interop/policy/ast.hpp"

namespace interop::policy {

struct AccessRequest {
  std::string caller_id;
  std::string caller_chain;
  Action action = Action::Invoke;
  std::string resource;
  std::uint64_t height = 0;
  std::vector<chain::Value> args;
};

/// Read-only view of one contract's namespace. Keys are relative to the
/// contract ("auction.status", not "Bidder.auction.status").
struct EvalContext {
  std::function<chain::Value(std::string_view key)> read;
  std::function<std::vector<chain::StateEntry>(std::string_view prefix, std::uint64_t from,
                                               std::uint64_t to)>
      history;
  /// Current non-null entries under a prefix.
  std::function<std::vector<std::pair<std::string, chain::Value>>(std::string_view prefix)> scan;
  std::uint64_t height = 0;
  std::string caller_id;
  std::string caller_chain;
};

struct Decision {
  bool allowed = false;
  std::string reason;

  static Decision allow() { return {true, {}}; }
  static Decision deny(std::string why) { return {false, std::move(why)}; }
};

/// Allow iff some rule matches the action and resource and its condition is
/// true. A condition that hits a type error counts as false.
Decision evaluate(const PolicyAst& ast, const AccessRequest& req, const EvalContext& ctx);

enum class AggFn : std::uint8_t { Sum, Count, Avg };

std::string_view agg_name(AggFn fn);
std::optional<AggFn> parse_agg(std::string_view name);

struct AggExpr {
  AggFn fn = AggFn::Sum;
  std::string prefix;
  /// Set for ranged (historical) aggregates; otherwise current values are used.
  std::optional<std::pair<std::int64_t, std::int64_t>> range;
};

/// sum/count/avg over Int values under a prefix. Null values are skipped;
/// anything else non-Int raises chain::TypeMismatch. avg of nothing is Null.
/// A negative range start is clamped to 0 and the end to ctx.height.
chain::Value eval_aggregate(const AggExpr& agg, const EvalContext& ctx);

/// Resource name checked for an aggregate query: "agg.<fn>.<prefix>" with any
/// trailing dot of the prefix dropped.
std::string aggregate_resource(const AggExpr& agg);

}  // namespace interop::policy
