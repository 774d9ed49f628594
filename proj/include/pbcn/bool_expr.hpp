#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>

namespace pbcn {

/// Immutable Boolean expression over state variables x1..xn and inputs
/// u1..um. Copies share subtrees.
class BoolExpr {
 public:
  enum class Kind { kConst, kState, kInput, kNot, kAnd, kOr };

  static BoolExpr constant(bool value);
  // Indices are 1-based, as written in model files.
  static BoolExpr state(int index);
  static BoolExpr input(int index);
  static BoolExpr negate(BoolExpr child);
  static BoolExpr conj(BoolExpr lhs, BoolExpr rhs);
  static BoolExpr disj(BoolExpr lhs, BoolExpr rhs);

  Kind kind() const { return kind_; }
  // Variable index for kState/kInput, the bit for kConst.
  int index() const { return index_; }
  const BoolExpr& lhs() const { return *lhs_; }
  const BoolExpr& rhs() const { return *rhs_; }

  bool eval(std::span<const std::uint8_t> state,
            std::span<const std::uint8_t> action) const;

  // Largest state / input index referenced, 0 if none.
  int max_state_index() const;
  int max_input_index() const;

  // Canonical text using ! & | and the minimum parentheses.
  std::string to_string() const;

  friend bool operator==(const BoolExpr& a, const BoolExpr& b);

 private:
  BoolExpr(Kind kind, int index, std::shared_ptr<const BoolExpr> lhs,
           std::shared_ptr<const BoolExpr> rhs)
      : kind_(kind), index_(index), lhs_(std::move(lhs)), rhs_(std::move(rhs)) {}

  Kind kind_;
  int index_;
  std::shared_ptr<const BoolExpr> lhs_;
  std::shared_ptr<const BoolExpr> rhs_;
};

}  // namespace pbcn
