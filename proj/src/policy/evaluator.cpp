#include "interop/policy/evaluator.hpp"

#include <stdexcept>

namespace interop::policy {

using chain::TypeMismatch;
using chain::Value;
using Kind = Expr::Kind;

namespace {

struct Interp {
  const AccessRequest& req;
  const EvalContext& ctx;

  Value eval(const ExprPtr& e) const {
    switch (e->kind) {
      case Kind::Literal: return e->literal;
      case Kind::CallerId: return Value::string(req.caller_id);
      case Kind::CallerChain: return Value::string(req.caller_chain);
      case Kind::BlockHeight: return Value::integer(static_cast<std::int64_t>(req.height));
      case Kind::State: return ctx.read(eval(e->args[0]).as_str());
      case Kind::Exists: return Value::boolean(!ctx.read(eval(e->args[0]).as_str()).is_null());
      case Kind::Count:
      case Kind::Sum:
      case Kind::Avg: {
        AggExpr agg;
        agg.fn = e->kind == Kind::Count ? AggFn::Count : e->kind == Kind::Sum ? AggFn::Sum : AggFn::Avg;
        agg.prefix = eval(e->args[0]).as_str();
        if (e->args.size() == 3) agg.range = {{eval(e->args[1]).as_int(), eval(e->args[2]).as_int()}};
        return eval_aggregate(agg, ctx);
      }
      case Kind::Add: {
        const Value a = eval(e->args[0]);
        const Value b = eval(e->args[1]);
        if (a.is_str() && b.is_str()) return Value::string(a.as_str() + b.as_str());
        std::int64_t out = 0;
        if (__builtin_add_overflow(a.as_int(), b.as_int(), &out)) throw TypeMismatch("integer overflow");
        return Value::integer(out);
      }
      case Kind::Sub: {
        std::int64_t out = 0;
        if (__builtin_sub_overflow(eval(e->args[0]).as_int(), eval(e->args[1]).as_int(), &out)) {
          throw TypeMismatch("integer overflow");
        }
        return Value::integer(out);
      }
      case Kind::Eq: return Value::boolean(eval(e->args[0]) == eval(e->args[1]));
      case Kind::Ne: return Value::boolean(!(eval(e->args[0]) == eval(e->args[1])));
      case Kind::Lt:
      case Kind::Le:
      case Kind::Gt:
      case Kind::Ge: {
        const Value a = eval(e->args[0]);
        const Value b = eval(e->args[1]);
        int c = 0;
        if (a.is_int() && b.is_int()) {
          c = a.as_int() < b.as_int() ? -1 : a.as_int() > b.as_int() ? 1 : 0;
        } else if (a.is_str() && b.is_str()) {
          c = a.as_str().compare(b.as_str());
        } else {
          throw TypeMismatch("cannot order " + std::string(chain::type_name(a.type())) + " and " +
                             std::string(chain::type_name(b.type())));
        }
        switch (e->kind) {
          case Kind::Lt: return Value::boolean(c < 0);
          case Kind::Le: return Value::boolean(c <= 0);
          case Kind::Gt: return Value::boolean(c > 0);
          default: return Value::boolean(c >= 0);
        }
      }
      case Kind::And: return Value::boolean(eval(e->args[0]).as_bool() && eval(e->args[1]).as_bool());
      case Kind::Or: return Value::boolean(eval(e->args[0]).as_bool() || eval(e->args[1]).as_bool());
      case Kind::Not: return Value::boolean(!eval(e->args[0]).as_bool());
    }
    throw TypeMismatch("unknown expression");
  }
};

}  // namespace

Decision evaluate(const PolicyAst& ast, const AccessRequest& req, const EvalContext& ctx) {
  std::string first_failure;
  for (std::size_t i = 0; i < ast.rules.size(); ++i) {
    const Rule& r = ast.rules[i];
    if (r.action != req.action || !r.resource.matches(req.resource)) continue;
    if (!r.condition) return Decision::allow();
    std::string failure;
    try {
      if (Interp{req, ctx}.eval(r.condition).as_bool()) return Decision::allow();
      failure = "condition false";
    } catch (const TypeMismatch& ex) {
      failure = std::string("type error: ") + ex.what();
    }
    if (first_failure.empty()) {
      first_failure = "rule " + std::to_string(i + 1) + " (line " + std::to_string(r.condition->line) +
                      "): " + failure;
    }
  }
  return Decision::deny(first_failure.empty() ? "no matching rule" : first_failure);
}

std::string_view agg_name(AggFn fn) {
  switch (fn) {
    case AggFn::Sum: return "sum";
    case AggFn::Count: return "count";
    case AggFn::Avg: return "avg";
  }
  return "?";
}

std::optional<AggFn> parse_agg(std::string_view name) {
  if (name == "sum") return AggFn::Sum;
  if (name == "count") return AggFn::Count;
  if (name == "avg") return AggFn::Avg;
  return std::nullopt;
}

Value eval_aggregate(const AggExpr& agg, const EvalContext& ctx) {
  std::vector<Value> values;
  if (agg.range) {
    const auto h = static_cast<std::int64_t>(ctx.height);
    const std::int64_t from = std::max<std::int64_t>(agg.range->first, 0);
    const std::int64_t to = std::min(agg.range->second, h);
    if (from <= to) {
      for (auto& e : ctx.history(agg.prefix, static_cast<std::uint64_t>(from),
                                 static_cast<std::uint64_t>(to))) {
        values.push_back(std::move(e.value));
      }
    }
  } else {
    for (auto& [k, v] : ctx.scan(agg.prefix)) values.push_back(std::move(v));
  }
  if (agg.fn == AggFn::Count) return Value::integer(static_cast<std::int64_t>(values.size()));

  std::int64_t sum = 0;
  std::int64_t n = 0;
  for (const auto& v : values) {
    if (v.is_null()) continue;
    if (!v.is_int()) throw TypeMismatch("non-integer value under prefix \"" + agg.prefix + "\"");
    if (__builtin_add_overflow(sum, v.as_int(), &sum)) throw TypeMismatch("integer overflow");
    ++n;
  }
  if (agg.fn == AggFn::Sum) return Value::integer(sum);
  if (n == 0) return Value::null();
  return Value::integer(sum / n);
}

std::string aggregate_resource(const AggExpr& agg) {
  std::string p = agg.prefix;
  if (!p.empty() && p.back() == '.') p.pop_back();
  return "agg." + std::string(agg_name(agg.fn)) + "." + p;
}

}  // namespace interop::policy
