#include "pbcn/parser.hpp"

#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include "pbcn/errors.hpp"
#include "pbcn/format.hpp"

namespace pbcn {
namespace {

enum class Tok { kIdent, kNumber, kPrime, kEquals, kColon, kBang, kAmp, kPipe,
                 kLParen, kRParen, kEnd };

struct Token {
  Tok kind;
  std::string text;
  int column;  // 1-based
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::kEnd:
      return "end of line";
    case Tok::kIdent:
    case Tok::kNumber:
      return "'" + t.text + "'";
    default:
      return "'" + t.text + "'";
  }
}

std::vector<Token> tokenize(std::string_view line, int line_no) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    const int col = static_cast<int>(i) + 1;
    if (c == '#') break;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < line.size() &&
             (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '_')) {
        ++j;
      }
      out.push_back({Tok::kIdent, std::string(line.substr(i, j - i)), col});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t j = i;
      while (j < line.size() &&
             (std::isdigit(static_cast<unsigned char>(line[j])) || line[j] == '.' ||
              line[j] == 'e' || line[j] == 'E' ||
              ((line[j] == '-' || line[j] == '+') && j > i &&
               (line[j - 1] == 'e' || line[j - 1] == 'E')))) {
        ++j;
      }
      out.push_back({Tok::kNumber, std::string(line.substr(i, j - i)), col});
      i = j;
      continue;
    }
    Tok kind;
    switch (c) {
      case '\'': kind = Tok::kPrime; break;
      case '=': kind = Tok::kEquals; break;
      case ':': kind = Tok::kColon; break;
      case '!': kind = Tok::kBang; break;
      case '&': kind = Tok::kAmp; break;
      case '|': kind = Tok::kPipe; break;
      case '(': kind = Tok::kLParen; break;
      case ')': kind = Tok::kRParen; break;
      default:
        throw ParseError(line_no, col, std::string("unexpected character '") + c + "'");
    }
    out.push_back({kind, std::string(1, c), col});
    ++i;
  }
  out.push_back({Tok::kEnd, "", static_cast<int>(line.size()) + 1});
  return out;
}

// x12 -> 12, otherwise nullopt.
std::optional<int> variable_index(const std::string& ident, char prefix) {
  if (ident.size() < 2 || ident[0] != prefix) return std::nullopt;
  auto v = parse_integer(std::string_view(ident).substr(1));
  if (!v || *v < 1 || *v > 1'000'000) return std::nullopt;
  return static_cast<int>(*v);
}

class LineParser {
 public:
  LineParser(std::vector<Token> tokens, int line_no, int nodes, int inputs)
      : toks_(std::move(tokens)), line_(line_no), nodes_(nodes), inputs_(inputs) {}

  const Token& peek() const { return toks_[pos_]; }
  Token take() { return toks_[pos_++]; }

  [[noreturn]] void fail(const Token& at, const std::string& expected) const {
    throw ParseError(line_, at.column, "expected " + expected + ", found " + describe(at));
  }

  Token expect(Tok kind, const std::string& what) {
    if (peek().kind != kind) fail(peek(), what);
    return take();
  }

  BoolExpr parse_or() {
    BoolExpr lhs = parse_and();
    while (peek().kind == Tok::kPipe && starts_operand(toks_[pos_ + 1])) {
      take();
      lhs = BoolExpr::disj(std::move(lhs), parse_and());
    }
    return lhs;
  }

  BoolExpr parse_and() {
    BoolExpr lhs = parse_unary();
    while (peek().kind == Tok::kAmp) {
      take();
      lhs = BoolExpr::conj(std::move(lhs), parse_unary());
    }
    return lhs;
  }

  BoolExpr parse_unary() {
    if (peek().kind == Tok::kBang) {
      take();
      return BoolExpr::negate(parse_unary());
    }
    return parse_atom();
  }

  BoolExpr parse_atom() {
    const Token t = peek();
    if (t.kind == Tok::kLParen) {
      take();
      BoolExpr inner = parse_or_in_parens();
      expect(Tok::kRParen, "')'");
      return inner;
    }
    if (t.kind == Tok::kNumber && (t.text == "0" || t.text == "1")) {
      take();
      return BoolExpr::constant(t.text == "1");
    }
    if (t.kind == Tok::kIdent) {
      if (auto k = variable_index(t.text, 'x')) {
        take();
        check_bound(t, *k, nodes_, "x", "nodes");
        return BoolExpr::state(*k);
      }
      if (auto k = variable_index(t.text, 'u')) {
        take();
        check_bound(t, *k, inputs_, "u", "inputs");
        return BoolExpr::input(*k);
      }
    }
    fail(t, "variable, constant, '!' or '('");
  }

  bool at_end() const { return peek().kind == Tok::kEnd; }

 private:
  // Inside parentheses '|' is always disjunction.
  BoolExpr parse_or_in_parens() {
    BoolExpr lhs = parse_and();
    while (peek().kind == Tok::kPipe) {
      take();
      lhs = BoolExpr::disj(std::move(lhs), parse_and());
    }
    return lhs;
  }

  // At top level a '|' after a probability separates alternatives; after an
  // operand it is disjunction. Both read the same token, so look past it.
  static bool starts_operand(const Token& t) {
    return t.kind == Tok::kIdent || t.kind == Tok::kBang || t.kind == Tok::kLParen ||
           t.kind == Tok::kNumber;
  }

  void check_bound(const Token& t, int k, int limit, const char* prefix,
                   const char* what) const {
    if (k > limit) {
      throw ModelError("line " + std::to_string(line_) + ", column " +
                       std::to_string(t.column) + ": " + prefix + std::to_string(k) +
                       " out of range (model has " + std::to_string(limit) + " " +
                       what + ")");
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int line_;
  int nodes_;
  int inputs_;
};

int parse_count(LineParser& p, const char* what) {
  const Token t = p.expect(Tok::kNumber, std::string("integer ") + what + " count");
  auto v = parse_integer(t.text);
  if (!v || *v < 0) p.fail(t, std::string("integer ") + what + " count");
  if (!p.at_end()) p.fail(p.peek(), "end of line");
  return static_cast<int>(*v);
}

}  // namespace

PbcnModel parse_pbcn(std::string_view text, std::string name) {
  std::optional<int> nodes;
  std::optional<int> inputs;
  std::vector<std::optional<NodeRule>> rules;

  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::string_view line =
        text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    auto tokens = tokenize(line, line_no);
    if (tokens.front().kind == Tok::kEnd) continue;
    LineParser p(std::move(tokens), line_no, nodes.value_or(0), inputs.value_or(0));
    const Token head = p.take();

    if (head.kind == Tok::kIdent && head.text == "name") {
      const auto rest = trim(line.substr(static_cast<std::size_t>(head.column - 1) + 4));
      const auto hash = rest.find('#');
      name = std::string(trim(rest.substr(0, hash)));
      continue;
    }
    if (head.kind == Tok::kIdent && head.text == "nodes") {
      if (nodes) throw ParseError(line_no, head.column, "duplicate 'nodes' header");
      nodes = parse_count(p, "node");
      if (*nodes < 1) throw ModelError("line " + std::to_string(line_no) + ": need at least one node");
      rules.assign(static_cast<std::size_t>(*nodes), std::nullopt);
      continue;
    }
    if (head.kind == Tok::kIdent && head.text == "inputs") {
      if (inputs) throw ParseError(line_no, head.column, "duplicate 'inputs' header");
      inputs = parse_count(p, "input");
      continue;
    }

    const auto node = head.kind == Tok::kIdent ? variable_index(head.text, 'x') : std::nullopt;
    if (!node) p.fail(head, "'nodes', 'inputs', 'name' or a rule 'x<i>' = ...'");
    if (!nodes || !inputs) {
      throw ParseError(line_no, head.column, "rules must follow the 'nodes' and 'inputs' headers");
    }
    if (*node > *nodes) {
      throw ModelError("line " + std::to_string(line_no) + ": rule for x" +
                       std::to_string(*node) + " but the model has " +
                       std::to_string(*nodes) + " nodes");
    }
    auto& slot = rules[static_cast<std::size_t>(*node - 1)];
    if (slot) {
      throw ModelError("line " + std::to_string(line_no) + ": duplicate definition of x" +
                       std::to_string(*node));
    }
    if (p.peek().kind == Tok::kPrime) p.take();
    p.expect(Tok::kEquals, "'='");

    NodeRule rule;
    for (;;) {
      BoolExpr expr = p.parse_or();
      if (p.peek().kind != Tok::kColon) {
        if (!rule.alternatives.empty()) p.fail(p.peek(), "':' and a probability");
        if (!p.at_end()) p.fail(p.peek(), "':' or end of line");
        rule.alternatives.push_back({std::move(expr), 1.0});
        break;
      }
      p.take();
      const Token pt = p.expect(Tok::kNumber, "probability");
      const auto prob = parse_double(pt.text);
      if (!prob) p.fail(pt, "probability");
      rule.alternatives.push_back({std::move(expr), *prob});
      if (p.at_end()) break;
      p.expect(Tok::kPipe, "'|' or end of line");
    }
    slot = std::move(rule);
  }

  if (!nodes) throw ParseError(line_no, 1, "missing 'nodes' header");
  if (!inputs) throw ParseError(line_no, 1, "missing 'inputs' header");
  std::vector<NodeRule> done;
  done.reserve(rules.size());
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (!rules[i]) throw ModelError("no rule for x" + std::to_string(i + 1));
    done.push_back(std::move(*rules[i]));
  }
  return PbcnModel(*nodes, *inputs, std::move(done), std::move(name));
}

PbcnModel load_pbcn(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_pbcn(buf.str(), path.stem().string());
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.column(), path.string() + ": " +
                                               std::string(e.what()).substr(
                                                   std::string(e.what()).find(": ") + 2));
  } catch (const ModelError& e) {
    throw ModelError(path.string() + ": " + e.what());
  }
}

BoolExpr parse_expr(std::string_view text, int nodes, int inputs) {
  LineParser p(tokenize(text, 1), 1, nodes, inputs);
  BoolExpr e = p.parse_or();
  if (p.peek().kind == Tok::kPipe) {
    // A trailing '|' that was not followed by an operand.
    p.fail(p.peek(), "operand after '|'");
  }
  if (!p.at_end()) p.fail(p.peek(), "end of expression");
  return e;
}

std::string serialize_pbcn(const PbcnModel& model) {
  std::ostringstream out;
  if (!model.name().empty()) out << "name " << model.name() << "\n";
  out << "nodes " << model.nodes() << "\n";
  out << "inputs " << model.inputs() << "\n";
  for (int i = 1; i <= model.nodes(); ++i) {
    out << "x" << i << "' = ";
    const auto& alts = model.rule(i).alternatives;
    for (std::size_t j = 0; j < alts.size(); ++j) {
      if (j) out << " | ";
      const BoolExpr& e = alts[j].expr;
      // A disjunction followed by ':' is fine, but wrap it so the
      // alternative boundary stays obvious to a reader.
      if (alts.size() > 1 && e.kind() == BoolExpr::Kind::kOr) {
        out << "(" << e.to_string() << ")";
      } else {
        out << e.to_string();
      }
      if (alts.size() > 1 || alts[j].prob != 1.0) out << " : " << format_double(alts[j].prob);
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace pbcn
