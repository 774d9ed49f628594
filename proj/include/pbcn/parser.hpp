#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "pbcn/bool_expr.hpp"
#include "pbcn/model.hpp"

namespace pbcn {

// Model file grammar, one statement per line, '#' to end of line is a comment:
//
//   name    <label>                      (optional)
//   nodes   <n>
//   inputs  <m>
//   x<i>' = <expr> [: <prob>] { | <expr> : <prob> }
//
// <expr> uses x<k>, u<k>, 0, 1, !, &, | and parentheses; ! binds tightest,
// then &, then |. A lone alternative may omit its probability (taken as 1).
// Header lines must precede the rules; every node needs exactly one rule.
//
// Throws ParseError for malformed text and ModelError for semantic problems.
PbcnModel parse_pbcn(std::string_view text, std::string name = {});
PbcnModel load_pbcn(const std::filesystem::path& path);

// Single expression against model dimensions (n, m).
BoolExpr parse_expr(std::string_view text, int nodes, int inputs);

// Canonical text; parse_pbcn(serialize_pbcn(m)) == m.
std::string serialize_pbcn(const PbcnModel& model);

}  // namespace pbcn
