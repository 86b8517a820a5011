#include "interop/policy/ast.hpp"

namespace interop::policy {

std::string_view action_name(Action a) {
  switch (a) {
    case Action::Read: return "read";
    case Action::Write: return "write";
    case Action::Invoke: return "invoke";
  }
  return "?";
}

bool ResourcePattern::matches(std::string_view resource) const {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    const auto dot = resource.find('.', pos);
    if (dot == std::string_view::npos) {
      parts.push_back(resource.substr(pos));
      break;
    }
    parts.push_back(resource.substr(pos, dot - pos));
    pos = dot + 1;
  }
  if (wildcard_tail ? parts.size() <= segments.size() : parts.size() != segments.size()) {
    return false;
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (parts[i] != segments[i]) return false;
  }
  return true;
}

ExprPtr Expr::make(Kind k, std::vector<ExprPtr> args, int line, int column) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->args = std::move(args);
  e->line = line;
  e->column = column;
  return e;
}

ExprPtr Expr::lit(chain::Value v, int line, int column) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Literal;
  e->literal = std::move(v);
  e->line = line;
  e->column = column;
  return e;
}

bool same_expr(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  if (a->kind != b->kind || !(a->literal == b->literal) || a->args.size() != b->args.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a->args.size(); ++i) {
    if (!same_expr(a->args[i], b->args[i])) return false;
  }
  return true;
}

}  // namespace interop::policy
