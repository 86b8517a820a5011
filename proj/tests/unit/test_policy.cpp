#include <map>

#include "doctest.h"
#include "interop/policy/evaluator.hpp"
#include "interop/policy/parser.hpp"

using namespace interop;
using namespace interop::policy;
using chain::Value;

namespace {

const char* kP1 =
    "allow write on bids.* when state(\"auction.status\") == \"open\" && !exists(\"bids.\" + caller.id) "
    "&& block.height <= state(\"auction.close_height\");";

struct FakeState {
  std::map<std::string, Value> current;
  std::vector<chain::StateEntry> log;
  std::uint64_t height = 0;

  EvalContext ctx() const {
    EvalContext c;
    c.height = height;
    c.read = [this](std::string_view k) {
      auto it = current.find(std::string(k));
      return it == current.end() ? Value::null() : it->second;
    };
    c.scan = [this](std::string_view p) {
      std::vector<std::pair<std::string, Value>> out;
      for (const auto& [k, v] : current) {
        if (k.starts_with(p)) out.emplace_back(k, v);
      }
      return out;
    };
    c.history = [this](std::string_view p, std::uint64_t from, std::uint64_t to) {
      std::vector<chain::StateEntry> out;
      for (const auto& e : log) {
        if (e.key.starts_with(p) && e.version.height >= from && e.version.height <= to) out.push_back(e);
      }
      return out;
    };
    return c;
  }
};

AccessRequest req(Action a, std::string resource, std::string caller = "bob", std::uint64_t h = 90) {
  return {caller, "coinB", a, std::move(resource), h, {}};
}

}  // namespace

TEST_CASE("parse minimal and P1") {
  auto ast = parse_policy("allow read on *;");
  REQUIRE(ast.rules.size() == 1);
  CHECK(ast.rules[0].resource.wildcard_tail);
  CHECK(ast.rules[0].resource.segments.empty());
  CHECK_FALSE(ast.rules[0].condition);

  auto p1 = parse_policy(kP1);
  REQUIRE(p1.rules.size() == 1);
  const auto& c = p1.rules[0].condition;
  REQUIRE(c);
  // ((A && B) && C): one conjunction of three comparisons/tests.
  CHECK(c->kind == Expr::Kind::And);
  CHECK(c->args[0]->kind == Expr::Kind::And);
  CHECK(c->args[0]->args[0]->kind == Expr::Kind::Eq);
  CHECK(c->args[0]->args[1]->kind == Expr::Kind::Not);
  CHECK(c->args[1]->kind == Expr::Kind::Le);
}

TEST_CASE("parse errors carry positions") {
  try {
    parse_policy("allow write on bids. when");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(e.column() == 22);
    CHECK(e.found() == "'when'");
  }
  CHECK_THROWS_AS(parse_policy(""), ParseError);
  CHECK_THROWS_AS(parse_policy("allow read on a.*.b;"), ParseError);
  CHECK_THROWS_AS(parse_policy("allow read on a when 1 + \"x\" == 2;"), ParseError);
  CHECK_THROWS_AS(parse_policy("allow read on a when 1;"), ParseError);
  CHECK_THROWS_AS(parse_policy("allow read on a when 1 < \"x\";"), ParseError);
  CHECK_THROWS_AS(parse_policy("allow read on a when sum(\"x\", 1) == 0;"), ParseError);
  CHECK_THROWS_AS(parse_policy("allow read on a when 99999999999999999999 == 1;"), ParseError);
  try {
    parse_policy("# comment\nallow read on a;\nallow read on b when x;");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() == 22);
  }
}

TEST_CASE("printer round trip") {
  const char* srcs[] = {
      kP1,
      "allow invoke on start_auction when count(\"auctions.\", block.height - 100, block.height) <= 3;",
      "allow read on agg.sum.winning_bids when caller.id == \"auditor\";",
      "allow read on a when !(true || false) && (1 == 1 || 2 == 2);",
      "allow read on a when true || (false && !null == null);",
      "allow write on x.y.* when state(\"q\\\"\\\\\") + \"a\" == \"b\";\nallow read on z;",
  };
  for (const char* s : srcs) {
    const auto ast = parse_policy(s);
    const auto printed = print_policy(ast);
    CHECK(parse_policy(printed) == ast);
    CHECK(print_policy(parse_policy(printed)) == printed);
  }
}

TEST_CASE("deny by default and P1 truth table") {
  FakeState st;
  st.height = 90;
  CHECK(evaluate(PolicyAst{}, req(Action::Write, "bids.bob"), st.ctx()).reason == "no matching rule");

  const auto p1 = parse_policy(kP1);
  // Enumerate the three conjuncts independently.
  for (int mask = 0; mask < 8; ++mask) {
    const bool open = mask & 1, fresh = mask & 2, in_time = mask & 4;
    st.current.clear();
    st.current["auction.status"] = Value::string(open ? "open" : "closed");
    st.current["auction.close_height"] = Value::integer(100);
    if (!fresh) st.current["bids.bob"] = Value::integer(5);
    st.height = in_time ? 90 : 101;
    const auto d = evaluate(p1, req(Action::Write, "bids.bob", "bob", st.height), st.ctx());
    CHECK(d.allowed == (open && fresh && in_time));
    if (!d.allowed) CHECK(d.reason.find("condition false") != std::string::npos);
  }
  // Wrong action or resource does not match.
  CHECK_FALSE(evaluate(p1, req(Action::Read, "bids.bob"), st.ctx()).allowed);
  CHECK_FALSE(evaluate(p1, req(Action::Write, "bids"), st.ctx()).allowed);
}

TEST_CASE("type errors make a rule false") {
  FakeState st;
  st.current["n"] = Value::string("x");
  auto ast = parse_policy("allow read on a when state(\"n\") < 3;\nallow read on b when state(\"n\") == 3;");
  auto d = evaluate(ast, req(Action::Read, "a"), st.ctx());
  CHECK_FALSE(d.allowed);
  CHECK(d.reason.find("type error") != std::string::npos);
  CHECK_FALSE(evaluate(ast, req(Action::Read, "b"), st.ctx()).allowed);
  // A later permissive rule still allows.
  auto two = parse_policy("allow read on a when state(\"n\") < 3;\nallow read on a;");
  CHECK(evaluate(two, req(Action::Read, "a"), st.ctx()).allowed);
}

TEST_CASE("aggregates") {
  FakeState st;
  st.height = 10;
  st.current["bids.a"] = Value::integer(3);
  st.current["bids.b"] = Value::integer(7);
  CHECK(eval_aggregate({AggFn::Sum, "bids.", {}}, st.ctx()) == Value::integer(10));
  CHECK(eval_aggregate({AggFn::Avg, "bids.", {}}, st.ctx()) == Value::integer(5));
  CHECK(eval_aggregate({AggFn::Avg, "none.", {}}, st.ctx()).is_null());
  st.current["bids.c"] = Value::string("x");
  CHECK_THROWS_AS(eval_aggregate({AggFn::Sum, "bids.", {}}, st.ctx()), chain::TypeMismatch);

  st.log = {{"auctions.1", Value::integer(1), {3, 0}},
            {"auctions.2", Value::integer(1), {7, 0}},
            {"auctions.3", Value::integer(1), {9, 1}}};
  CHECK(eval_aggregate({AggFn::Count, "auctions.", {{5, 10}}}, st.ctx()) == Value::integer(2));
  CHECK(eval_aggregate({AggFn::Count, "auctions.", {{-95, 10}}}, st.ctx()) == Value::integer(3));
  CHECK(eval_aggregate({AggFn::Sum, "auctions.", {{0, 8}}}, st.ctx()) == Value::integer(2));
  CHECK(aggregate_resource({AggFn::Sum, "winning_bids.", {}}) == "agg.sum.winning_bids");
}

TEST_CASE("resource patterns") {
  auto ast = parse_policy("allow read on a.b;\nallow read on c.*;");
  CHECK(ast.rules[0].resource.matches("a.b"));
  CHECK_FALSE(ast.rules[0].resource.matches("a"));
  CHECK_FALSE(ast.rules[0].resource.matches("a.b.c"));
  CHECK(ast.rules[1].resource.matches("c.d.e"));
  CHECK_FALSE(ast.rules[1].resource.matches("c"));
}
