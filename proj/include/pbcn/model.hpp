#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pbcn/bits.hpp"
#include "pbcn/bool_expr.hpp"

namespace pbcn {

inline constexpr double kProbabilityTolerance = 1e-9;
inline constexpr std::uint64_t kDefaultEnumerationBudget = 1'000'000;

struct Alternative {
  BoolExpr expr;
  double prob;
};

// Candidate update functions of one node; exactly one is drawn per step.
struct NodeRule {
  std::vector<Alternative> alternatives;

  bool deterministic() const { return alternatives.size() == 1; }
};

/// Probabilistic Boolean control network with n state nodes and m inputs.
/// Immutable once constructed; the constructor validates every rule.
class PbcnModel {
 public:
  // Throws ModelError on inconsistent rules.
  PbcnModel(int nodes, int inputs, std::vector<NodeRule> rules,
            std::string name = {});

  int nodes() const { return nodes_; }
  int inputs() const { return inputs_; }
  const std::vector<NodeRule>& rules() const { return rules_; }
  const NodeRule& rule(int node) const {
    return rules_[static_cast<std::size_t>(node - 1)];
  }
  const std::string& name() const { return name_; }

  std::uint64_t state_count() const { return space_size(nodes_); }
  std::uint64_t action_count() const { return space_size(inputs_); }

  // True when every node has a single rule (a plain Boolean control network).
  bool deterministic() const;

  // Product of the per-node alternative counts, saturating at UINT64_MAX.
  std::uint64_t selection_count() const;

  friend bool operator==(const PbcnModel& a, const PbcnModel& b);

 private:
  int nodes_;
  int inputs_;
  std::vector<NodeRule> rules_;
  std::string name_;
};

// Next-state decimal -> probability; zero-mass successors are omitted.
using TransitionDistribution = std::map<std::uint64_t, double>;

// One synchronous update. Draws exactly one uniform per node, node 1 first.
State step(const PbcnModel& model, const State& state, const Action& action,
           Rng& rng);

// Exact successor distribution. Throws ScaleError when the number of rule
// selections exceeds `budget`.
TransitionDistribution transition_distribution(
    const PbcnModel& model, const State& state, const Action& action,
    std::uint64_t budget = kDefaultEnumerationBudget);

}  // namespace pbcn
