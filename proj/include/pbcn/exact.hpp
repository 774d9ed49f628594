#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pbcn/env.hpp"
#include "pbcn/model.hpp"

namespace pbcn {

inline constexpr double kTieTolerance = 1e-9;
// Largest node count the dense oracle accepts by default (2^12 states).
inline constexpr int kDefaultExactMaxNodes = 12;

/// Enumerated finite MDP: one dense row-stochastic matrix per action and a
/// states x actions reward table.
struct ExactMdp {
  int nodes = 0;
  int inputs = 0;
  double gamma = 0.9;
  std::vector<Eigen::MatrixXd> transition;
  Eigen::MatrixXd reward;

  Eigen::Index states() const { return reward.rows(); }
  Eigen::Index actions() const { return reward.cols(); }
};

enum class Objective { kMaximize, kMinimize };

struct Solution {
  Eigen::VectorXd value;               // v*(x)
  Eigen::MatrixXd q;                   // q*(x, u)
  std::vector<std::uint64_t> policy;   // smallest optimal action per state
  int improvement_rounds = 0;
};

// Rewards are map(cost(x, u)). Throws ScaleError above `max_nodes`.
ExactMdp build_exact_mdp(const PbcnModel& model, const CostSpec& spec,
                         const RewardMap& map, double gamma,
                         int max_nodes = kDefaultExactMaxNodes);

// Same transitions with the raw cost as the per-step payoff, for
// minimisation.
ExactMdp build_cost_mdp(const PbcnModel& model, const CostSpec& spec,
                        double gamma, int max_nodes = kDefaultExactMaxNodes);

// Howard policy iteration with exact (LU) policy evaluation. Improvement only
// switches action on a gain above kTieTolerance; the returned policy picks the
// smallest action within kTieTolerance of the optimum.
Solution policy_iteration(const ExactMdp& mdp,
                          Objective objective = Objective::kMaximize);

// q(x, u) = R(x, u) + gamma * sum_x' P_u(x, x') v(x').
Eigen::MatrixXd action_values(const ExactMdp& mdp, const Eigen::VectorXd& value);

// max_x |v(x) - opt_u q(x, u)| for q built from v.
double bellman_residual(const ExactMdp& mdp, const Eigen::VectorXd& value,
                        Objective objective = Objective::kMaximize);

// Actions within `tol` of the best entry in `row`, ascending.
std::vector<std::uint64_t> optimal_actions(const Eigen::Ref<const Eigen::RowVectorXd>& row,
                                           Objective objective = Objective::kMaximize,
                                           double tol = kTieTolerance);

// Mean over states of |v*(x) - max_u estimate(x, u)|. `estimate` is
// states x actions.
double error_q(const Solution& solution, const Eigen::MatrixXd& estimate);

// Mean over states of the per-bit disagreement between the reference and
// candidate action vectors, each bit difference weighted 1/m.
double error_pi(const Solution& solution, std::span<const std::uint64_t> policy,
                int inputs);

struct EquivalenceReport {
  bool policies_coincide = true;
  bool identity_holds = true;
  double max_identity_gap = 0.0;
  bool all_tied = false;  // every action optimal at every state
  std::optional<std::uint64_t> first_mismatch_state;
  std::string summary;
};

// Compares the reward-maximising solution under `map` with the
// cost-minimising solution: optimal-action sets must match state by state and
// q_r = c1 * q_cost + c2 / (1 - gamma) must hold within `identity_tol`.
EquivalenceReport verify_reward_cost_equivalence(
    const PbcnModel& model, const CostSpec& spec, const RewardMap& map,
    double gamma, double identity_tol = 1e-8);

}  // namespace pbcn
