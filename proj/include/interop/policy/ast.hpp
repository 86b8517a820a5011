#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "interop/chain/value.hpp"

namespace interop::policy {

enum class Action : std::uint8_t { Read, Write, Invoke };

std::string_view action_name(Action a);

/// Dotted resource pattern. A trailing "*" matches one or more further segments.
struct ResourcePattern {
  std::vector<std::string> segments;
  bool wildcard_tail = false;

  bool matches(std::string_view resource) const;
  bool operator==(const ResourcePattern&) const = default;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind : std::uint8_t {
    Literal,
    CallerId,
    CallerChain,
    BlockHeight,
    State,   // state(key)
    Exists,  // exists(key)
    Count,   // count(prefix, from, to)
    Sum,     // sum(prefix) | sum(prefix, from, to)
    Avg,     // avg(prefix)
    Add,
    Sub,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Not,
  };

  Kind kind = Kind::Literal;
  chain::Value literal;
  std::vector<ExprPtr> args;
  // Source position, for diagnostics only; ignored by equality.
  int line = 0;
  int column = 0;

  static ExprPtr make(Kind k, std::vector<ExprPtr> args = {}, int line = 0, int column = 0);
  static ExprPtr lit(chain::Value v, int line = 0, int column = 0);

  bool is_comparison() const { return kind >= Kind::Eq && kind <= Kind::Ge; }
  bool is_logical() const { return kind == Kind::And || kind == Kind::Or || kind == Kind::Not; }
};

/// Structural equality (positions ignored).
bool same_expr(const ExprPtr& a, const ExprPtr& b);

struct Rule {
  Action action = Action::Read;
  ResourcePattern resource;
  ExprPtr condition;  // null when the rule is unconditional

  bool operator==(const Rule& o) const {
    return action == o.action && resource == o.resource && same_expr(condition, o.condition);
  }
};

struct PolicyAst {
  std::vector<Rule> rules;

  bool operator==(const PolicyAst&) const = default;
};

}  // namespace interop::policy
