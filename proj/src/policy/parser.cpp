#include "interop/policy/parser.hpp"

#include <array>
#include <charconv>
#include <cctype>
#include <limits>

namespace interop::policy {

using chain::Value;
using Kind = Expr::Kind;

ParseError::ParseError(int line, int column, std::string expected, std::string found)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": expected " + expected + ", found " + found),
      line_(line),
      column_(column),
      expected_(std::move(expected)),
      found_(std::move(found)) {}

namespace {

enum class Tok { Ident, Int, String, Punct, End };

struct Token {
  Tok type = Tok::End;
  std::string text;
  std::int64_t int_value = 0;
  int line = 1;
  int column = 1;

  std::string describe() const {
    switch (type) {
      case Tok::End: return "end of input";
      case Tok::String: return "string literal";
      default: return "'" + text + "'";
    }
  }
};

constexpr std::array<std::string_view, 9> kReserved = {
    "allow", "on", "when", "read", "write", "invoke", "true", "false", "null"};

bool is_reserved(std::string_view w) {
  for (auto r : kReserved) {
    if (r == w) return true;
  }
  return false;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = col_;
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.type = Tok::Ident;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          t.text.push_back(take());
        }
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        t.type = Tok::Int;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
          t.text.push_back(take());
        }
        const auto [p, ec] =
            std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.int_value);
        if (ec != std::errc{}) {
          throw ParseError(t.line, t.column, "integer literal within 64-bit range", t.text);
        }
      } else if (c == '"') {
        t.type = Tok::String;
        take();
        while (true) {
          if (pos_ >= src_.size() || src_[pos_] == '\n') {
            throw ParseError(line_, col_, "closing '\"'", "end of line");
          }
          char ch = take();
          if (ch == '"') break;
          if (ch == '\\') {
            if (pos_ >= src_.size()) throw ParseError(line_, col_, "escape character", "end of input");
            ch = take();
            if (ch != '"' && ch != '\\') {
              throw ParseError(line_, col_ - 1, "'\\\"' or '\\\\'", std::string("'\\") + ch + "'");
            }
          }
          t.text.push_back(ch);
        }
      } else {
        t.type = Tok::Punct;
        static constexpr std::array<std::string_view, 6> kTwo = {"==", "!=", "<=", ">=", "&&", "||"};
        for (auto op : kTwo) {
          if (src_.substr(pos_, 2) == op) {
            t.text = std::string(op);
            break;
          }
        }
        if (t.text.empty()) {
          if (std::string_view(";.*(),<>!+-").find(c) == std::string_view::npos) {
            throw ParseError(t.line, t.column, "token", std::string("'") + c + "'");
          }
          t.text = std::string(1, c);
        }
        for (std::size_t i = 0; i < t.text.size(); ++i) take();
      }
      out.push_back(std::move(t));
    }
  }

 private:
  char take() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') take();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        take();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

enum class Ty { Int, Str, Bool, Null, Any };

std::string_view ty_name(Ty t) {
  switch (t) {
    case Ty::Int: return "int";
    case Ty::Str: return "str";
    case Ty::Bool: return "bool";
    case Ty::Null: return "null";
    case Ty::Any: return "any";
  }
  return "?";
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  PolicyAst run() {
    PolicyAst ast;
    do {
      ast.rules.push_back(rule());
    } while (peek().type != Tok::End);
    return ast;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_ == toks_.size() - 1 ? pos_ : pos_++]; }

  bool at_punct(std::string_view p) const { return peek().type == Tok::Punct && peek().text == p; }
  bool at_word(std::string_view w) const { return peek().type == Tok::Ident && peek().text == w; }

  [[noreturn]] void fail(std::string expected) const {
    throw ParseError(peek().line, peek().column, std::move(expected), peek().describe());
  }

  void expect_punct(std::string_view p) {
    if (!at_punct(p)) fail("'" + std::string(p) + "'");
    next();
  }

  void expect_word(std::string_view w) {
    if (!at_word(w)) fail("'" + std::string(w) + "'");
    next();
  }

  Rule rule() {
    Rule r;
    expect_word("allow");
    if (at_word("read")) {
      r.action = Action::Read;
    } else if (at_word("write")) {
      r.action = Action::Write;
    } else if (at_word("invoke")) {
      r.action = Action::Invoke;
    } else {
      fail("'read', 'write' or 'invoke'");
    }
    next();
    expect_word("on");
    r.resource = resource();
    if (at_word("when")) {
      next();
      r.condition = expr();
      const auto t = check(r.condition);
      if (t != Ty::Bool && t != Ty::Any) type_error(r.condition, "bool condition", t);
    }
    expect_punct(";");
    return r;
  }

  ResourcePattern resource() {
    ResourcePattern p;
    while (true) {
      if (at_punct("*")) {
        next();
        p.wildcard_tail = true;
        if (at_punct(".")) fail("'when' or ';' after wildcard segment");
        return p;
      }
      if (peek().type != Tok::Ident || is_reserved(peek().text)) fail("resource segment");
      p.segments.push_back(next().text);
      if (!at_punct(".")) return p;
      next();
    }
  }

  ExprPtr expr() {
    auto lhs = and_expr();
    while (at_punct("||")) {
      const auto& op = next();
      lhs = Expr::make(Kind::Or, {lhs, and_expr()}, op.line, op.column);
    }
    return lhs;
  }

  ExprPtr and_expr() {
    auto lhs = not_expr();
    while (at_punct("&&")) {
      const auto& op = next();
      lhs = Expr::make(Kind::And, {lhs, not_expr()}, op.line, op.column);
    }
    return lhs;
  }

  ExprPtr not_expr() {
    if (at_punct("!")) {
      const auto& op = next();
      return Expr::make(Kind::Not, {not_expr()}, op.line, op.column);
    }
    return cmp();
  }

  ExprPtr cmp() {
    if (at_punct("(")) {
      next();
      auto e = expr();
      expect_punct(")");
      return e;
    }
    auto lhs = term();
    static constexpr std::array<std::pair<std::string_view, Kind>, 6> kOps = {{
        {"==", Kind::Eq}, {"!=", Kind::Ne}, {"<", Kind::Lt},
        {"<=", Kind::Le}, {">", Kind::Gt}, {">=", Kind::Ge},
    }};
    for (const auto& [text, kind] : kOps) {
      if (at_punct(text)) {
        const auto& op = next();
        return Expr::make(kind, {lhs, term()}, op.line, op.column);
      }
    }
    return lhs;
  }

  ExprPtr term() {
    auto lhs = primary();
    while (at_punct("+") || at_punct("-")) {
      const auto& op = next();
      const auto kind = op.text == "+" ? Kind::Add : Kind::Sub;
      lhs = Expr::make(kind, {lhs, primary()}, op.line, op.column);
    }
    return lhs;
  }

  std::vector<ExprPtr> call_args(std::size_t min, std::size_t max) {
    expect_punct("(");
    std::vector<ExprPtr> args{term()};
    while (args.size() < max && at_punct(",")) {
      next();
      args.push_back(term());
    }
    if (args.size() < min) fail("','");
    expect_punct(")");
    return args;
  }

  ExprPtr primary() {
    const Token t = peek();
    if (t.type == Tok::Int) {
      next();
      return Expr::lit(Value::integer(t.int_value), t.line, t.column);
    }
    if (t.type == Tok::String) {
      next();
      return Expr::lit(Value::string(t.text), t.line, t.column);
    }
    if (t.type != Tok::Ident) fail("term");
    if (t.text == "true" || t.text == "false") {
      next();
      return Expr::lit(Value::boolean(t.text == "true"), t.line, t.column);
    }
    if (t.text == "null") {
      next();
      return Expr::lit(Value::null(), t.line, t.column);
    }
    if (t.text == "caller") {
      next();
      expect_punct(".");
      if (at_word("id")) {
        next();
        return Expr::make(Kind::CallerId, {}, t.line, t.column);
      }
      if (at_word("chain")) {
        next();
        return Expr::make(Kind::CallerChain, {}, t.line, t.column);
      }
      fail("'id' or 'chain'");
    }
    if (t.text == "block") {
      next();
      expect_punct(".");
      expect_word("height");
      return Expr::make(Kind::BlockHeight, {}, t.line, t.column);
    }
    if (t.text == "state" || t.text == "exists" || t.text == "avg") {
      next();
      const auto kind = t.text == "state" ? Kind::State : t.text == "exists" ? Kind::Exists : Kind::Avg;
      return Expr::make(kind, call_args(1, 1), t.line, t.column);
    }
    if (t.text == "count") {
      next();
      return Expr::make(Kind::Count, call_args(3, 3), t.line, t.column);
    }
    if (t.text == "sum") {
      next();
      auto args = call_args(1, 3);
      if (args.size() == 2) {
        throw ParseError(t.line, t.column, "sum with 1 or 3 arguments", "2 arguments");
      }
      return Expr::make(Kind::Sum, std::move(args), t.line, t.column);
    }
    fail("term");
  }

  [[noreturn]] static void type_error(const ExprPtr& e, std::string expected, Ty got) {
    throw ParseError(e->line, e->column, std::move(expected), std::string(ty_name(got)) + " expression");
  }

  static void want(const ExprPtr& e, std::initializer_list<Ty> allowed, std::string expected) {
    const Ty t = check(e);
    if (t == Ty::Any) return;
    for (auto a : allowed) {
      if (a == t) return;
    }
    type_error(e, std::move(expected), t);
  }

  static Ty check(const ExprPtr& e) {
    switch (e->kind) {
      case Kind::Literal:
        switch (e->literal.type()) {
          case chain::ValueType::Int: return Ty::Int;
          case chain::ValueType::Str: return Ty::Str;
          case chain::ValueType::Bool: return Ty::Bool;
          default: return Ty::Null;
        }
      case Kind::CallerId:
      case Kind::CallerChain: return Ty::Str;
      case Kind::BlockHeight: return Ty::Int;
      case Kind::State: want(e->args[0], {Ty::Str}, "string key"); return Ty::Any;
      case Kind::Exists: want(e->args[0], {Ty::Str}, "string key"); return Ty::Bool;
      case Kind::Avg: want(e->args[0], {Ty::Str}, "string prefix"); return Ty::Any;
      case Kind::Count:
      case Kind::Sum:
        want(e->args[0], {Ty::Str}, "string prefix");
        for (std::size_t i = 1; i < e->args.size(); ++i) want(e->args[i], {Ty::Int}, "integer height");
        return Ty::Int;
      case Kind::Add: {
        const Ty a = check(e->args[0]);
        const Ty b = check(e->args[1]);
        want(e->args[0], {Ty::Int, Ty::Str}, "int or str operand");
        want(e->args[1], {Ty::Int, Ty::Str}, "int or str operand");
        if (a == Ty::Any || b == Ty::Any) return Ty::Any;
        if (a != b) type_error(e->args[1], std::string(ty_name(a)) + " operand", b);
        return a;
      }
      case Kind::Sub:
        want(e->args[0], {Ty::Int}, "int operand");
        want(e->args[1], {Ty::Int}, "int operand");
        return Ty::Int;
      case Kind::Eq:
      case Kind::Ne:
        check(e->args[0]);
        check(e->args[1]);
        return Ty::Bool;
      case Kind::Lt:
      case Kind::Le:
      case Kind::Gt:
      case Kind::Ge: {
        const Ty a = check(e->args[0]);
        const Ty b = check(e->args[1]);
        want(e->args[0], {Ty::Int, Ty::Str}, "int or str operand");
        want(e->args[1], {Ty::Int, Ty::Str}, "int or str operand");
        if (a != Ty::Any && b != Ty::Any && a != b) {
          type_error(e->args[1], std::string(ty_name(a)) + " operand", b);
        }
        return Ty::Bool;
      }
      case Kind::And:
      case Kind::Or:
      case Kind::Not:
        for (const auto& a : e->args) want(a, {Ty::Bool}, "bool operand");
        return Ty::Bool;
    }
    return Ty::Any;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string print_term(const ExprPtr& e);

std::string print_call(std::string_view name, const ExprPtr& e) {
  std::string s(name);
  s += "(";
  for (std::size_t i = 0; i < e->args.size(); ++i) {
    if (i) s += ", ";
    s += print_term(e->args[i]);
  }
  return s + ")";
}

std::string print_term(const ExprPtr& e) {
  switch (e->kind) {
    case Kind::Literal:
      switch (e->literal.type()) {
        case chain::ValueType::Int: return std::to_string(e->literal.as_int());
        case chain::ValueType::Str: return quote(e->literal.as_str());
        case chain::ValueType::Bool: return e->literal.as_bool() ? "true" : "false";
        default: return "null";
      }
    case Kind::CallerId: return "caller.id";
    case Kind::CallerChain: return "caller.chain";
    case Kind::BlockHeight: return "block.height";
    case Kind::State: return print_call("state", e);
    case Kind::Exists: return print_call("exists", e);
    case Kind::Count: return print_call("count", e);
    case Kind::Sum: return print_call("sum", e);
    case Kind::Avg: return print_call("avg", e);
    case Kind::Add: return print_term(e->args[0]) + " + " + print_term(e->args[1]);
    case Kind::Sub: return print_term(e->args[0]) + " - " + print_term(e->args[1]);
    default: return "(" + print_expr(e) + ")";
  }
}

// level 1: anywhere an expr may appear; 2: operand of "||" (right side);
// 3: operand of "&&" (right side) or "!".
std::string print_bool(const ExprPtr& e, int level) {
  static constexpr std::array<std::string_view, 6> kCmp = {"==", "!=", "<", "<=", ">", ">="};
  switch (e->kind) {
    case Kind::Or: {
      auto s = print_bool(e->args[0], 1) + " || " + print_bool(e->args[1], 2);
      return level > 1 ? "(" + s + ")" : s;
    }
    case Kind::And: {
      auto s = print_bool(e->args[0], 2) + " && " + print_bool(e->args[1], 3);
      return level > 2 ? "(" + s + ")" : s;
    }
    case Kind::Not: return "!" + print_bool(e->args[0], 3);
    default:
      if (e->is_comparison()) {
        const auto op = kCmp[static_cast<int>(e->kind) - static_cast<int>(Kind::Eq)];
        return print_term(e->args[0]) + " " + std::string(op) + " " + print_term(e->args[1]);
      }
      return print_term(e);
  }
}

}  // namespace

PolicyAst parse_policy(std::string_view src) { return Parser(Lexer(src).run()).run(); }

std::string print_expr(const ExprPtr& e) { return print_bool(e, 1); }

std::string print_policy(const PolicyAst& ast) {
  std::string out;
  for (const auto& r : ast.rules) {
    out += "allow ";
    out += action_name(r.action);
    out += " on ";
    for (std::size_t i = 0; i < r.resource.segments.size(); ++i) {
      if (i) out += ".";
      out += r.resource.segments[i];
    }
    if (r.resource.wildcard_tail) out += r.resource.segments.empty() ? "*" : ".*";
    if (r.condition) out += " when " + print_expr(r.condition);
    out += ";\n";
  }
  return out;
}

}  // namespace interop::policy
