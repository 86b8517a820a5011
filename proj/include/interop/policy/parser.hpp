#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "interop/policy/ast.hpp"

namespace interop::policy {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, std::string expected, std::string found);

  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& expected() const { return expected_; }
  const std::string& found() const { return found_; }

 private:
  int line_;
  int column_;
  std::string expected_;
  std::string found_;
};

/// Parses and type-checks a policy program.
///
///   policy   := rule+
///   rule     := "allow" action "on" resource ("when" expr)? ";"
///   action   := "read" | "write" | "invoke"
///   resource := seg ("." seg)*        seg := IDENT | "*"  ("*" only last)
///   expr     := expr "||" and | and
///   and      := and "&&" not | not
///   not      := "!" not | cmp
///   cmp      := term (("=="|"!="|"<"|"<="|">"|">=") term)? | "(" expr ")"
///   term     := INT | STRING | "true" | "false" | "null" | builtin
///             | term "+" term | term "-" term
///   builtin  := "caller.id" | "caller.chain" | "block.height" | "state(" term ")"
///             | "exists(" term ")" | "count(" term "," term "," term ")"
///             | "sum(" term ")" | "sum(" term "," term "," term ")" | "avg(" term ")"
///
/// "#" starts a comment running to end of line. The words allow, on, when,
/// read, write, invoke, true, false and null are reserved.
PolicyAst parse_policy(std::string_view src);

/// Canonical source text; parse_policy(print_policy(ast)) == ast.
std::string print_policy(const PolicyAst& ast);
std::string print_expr(const ExprPtr& e);

}  // namespace interop::policy
