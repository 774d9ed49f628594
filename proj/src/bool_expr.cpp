#include "pbcn/bool_expr.hpp"

#include <algorithm>

namespace pbcn {

BoolExpr BoolExpr::constant(bool value) {
  return BoolExpr(Kind::kConst, value ? 1 : 0, nullptr, nullptr);
}

BoolExpr BoolExpr::state(int index) {
  return BoolExpr(Kind::kState, index, nullptr, nullptr);
}

BoolExpr BoolExpr::input(int index) {
  return BoolExpr(Kind::kInput, index, nullptr, nullptr);
}

BoolExpr BoolExpr::negate(BoolExpr child) {
  return BoolExpr(Kind::kNot, 0,
                  std::make_shared<const BoolExpr>(std::move(child)), nullptr);
}

BoolExpr BoolExpr::conj(BoolExpr lhs, BoolExpr rhs) {
  return BoolExpr(Kind::kAnd, 0, std::make_shared<const BoolExpr>(std::move(lhs)),
                  std::make_shared<const BoolExpr>(std::move(rhs)));
}

BoolExpr BoolExpr::disj(BoolExpr lhs, BoolExpr rhs) {
  return BoolExpr(Kind::kOr, 0, std::make_shared<const BoolExpr>(std::move(lhs)),
                  std::make_shared<const BoolExpr>(std::move(rhs)));
}

bool BoolExpr::eval(std::span<const std::uint8_t> state,
                    std::span<const std::uint8_t> action) const {
  switch (kind_) {
    case Kind::kConst:
      return index_ != 0;
    case Kind::kState:
      return state[static_cast<std::size_t>(index_ - 1)] != 0;
    case Kind::kInput:
      return action[static_cast<std::size_t>(index_ - 1)] != 0;
    case Kind::kNot:
      return !lhs_->eval(state, action);
    case Kind::kAnd:
      return lhs_->eval(state, action) && rhs_->eval(state, action);
    case Kind::kOr:
      return lhs_->eval(state, action) || rhs_->eval(state, action);
  }
  return false;
}

int BoolExpr::max_state_index() const {
  switch (kind_) {
    case Kind::kState:
      return index_;
    case Kind::kConst:
    case Kind::kInput:
      return 0;
    case Kind::kNot:
      return lhs_->max_state_index();
    default:
      return std::max(lhs_->max_state_index(), rhs_->max_state_index());
  }
}

int BoolExpr::max_input_index() const {
  switch (kind_) {
    case Kind::kInput:
      return index_;
    case Kind::kConst:
    case Kind::kState:
      return 0;
    case Kind::kNot:
      return lhs_->max_input_index();
    default:
      return std::max(lhs_->max_input_index(), rhs_->max_input_index());
  }
}

namespace {

// | binds loosest, then &, then !.
int precedence(BoolExpr::Kind kind) {
  switch (kind) {
    case BoolExpr::Kind::kOr:
      return 1;
    case BoolExpr::Kind::kAnd:
      return 2;
    default:
      return 3;
  }
}

std::string wrap(const BoolExpr& e, int min_prec) {
  std::string s = e.to_string();
  return precedence(e.kind()) < min_prec ? "(" + s + ")" : s;
}

}  // namespace

std::string BoolExpr::to_string() const {
  switch (kind_) {
    case Kind::kConst:
      return index_ ? "1" : "0";
    case Kind::kState:
      return "x" + std::to_string(index_);
    case Kind::kInput:
      return "u" + std::to_string(index_);
    case Kind::kNot:
      return "!" + wrap(*lhs_, 3);
    case Kind::kAnd:
      // Left-associative: a right operand of equal precedence needs parens to
      // keep the tree shape on re-parse.
      return wrap(*lhs_, 2) + " & " + wrap(*rhs_, 3);
    case Kind::kOr:
      return wrap(*lhs_, 1) + " | " + wrap(*rhs_, 2);
  }
  return {};
}

bool operator==(const BoolExpr& a, const BoolExpr& b) {
  if (a.kind_ != b.kind_ || a.index_ != b.index_) return false;
  switch (a.kind_) {
    case BoolExpr::Kind::kConst:
    case BoolExpr::Kind::kState:
    case BoolExpr::Kind::kInput:
      return true;
    case BoolExpr::Kind::kNot:
      return *a.lhs_ == *b.lhs_;
    default:
      return *a.lhs_ == *b.lhs_ && *a.rhs_ == *b.rhs_;
  }
}

}  // namespace pbcn
