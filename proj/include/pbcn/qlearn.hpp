#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "pbcn/env.hpp"
#include "pbcn/model.hpp"
#include "pbcn/scale.hpp"
#include "pbcn/training.hpp"

namespace pbcn {

/// Dense 2^n x 2^m action-value table indexed by (state decimal, action
/// decimal). Starts at zero.
class QTable {
 public:
  QTable(std::uint64_t states, std::uint64_t actions)
      : values_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(states),
                                      static_cast<Eigen::Index>(actions))) {}

  double operator()(std::uint64_t s, std::uint64_t a) const {
    return values_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
  }
  double& operator()(std::uint64_t s, std::uint64_t a) {
    return values_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
  }

  // Smallest action decimal attaining the row maximum.
  std::uint64_t greedy(std::uint64_t s) const;
  double max_value(std::uint64_t s) const { return values_.row(static_cast<Eigen::Index>(s)).maxCoeff(); }
  std::vector<std::uint64_t> greedy_policy() const;

  std::uint64_t states() const { return static_cast<std::uint64_t>(values_.rows()); }
  std::uint64_t actions() const { return static_cast<std::uint64_t>(values_.cols()); }
  const Eigen::MatrixXd& values() const { return values_; }

 private:
  Eigen::MatrixXd values_;
};

// Q(s, a) <- (1 - alpha) Q(s, a) + alpha (r + gamma max_a' Q(next, a')).
// Returns the new entry.
double q_update(QTable& table, std::uint64_t state, std::uint64_t action,
                double reward, std::uint64_t next_state, double alpha, double gamma);

// Draws one uniform; below epsilon it draws a uniform action, otherwise
// returns the greedy action.
std::uint64_t epsilon_greedy(const QTable& table, std::uint64_t state,
                             double epsilon, Rng& rng);

/// Learning-rate and exploration schedules. The step size decays per episode,
/// alpha = 1 / (ep + 1)^omega; exploration decays per global step
/// t' = ep * T + t, epsilon = (1 - delta)^t'.
struct QlSchedule {
  double gamma = 0.9;
  double omega = 0.6;
  double delta = 8e-6;
  int episodes = 20000;
  int steps = 15;

  double alpha(int episode) const;
  double epsilon(std::uint64_t global_step) const;

  // omega must lie in (0.5, 1] so that sum alpha diverges and sum alpha^2
  // converges; throws ConfigError otherwise.
  void validate() const;
};

struct QlResult {
  QTable table;
  std::vector<std::uint64_t> policy;
  std::vector<double> episode_rewards;  // mean per-step reward of each episode
  std::vector<EpisodeMetric> metrics;
};

// Tabular Q-learning over `schedule.episodes` episodes of `schedule.steps`
// steps from uniform initial states. The environment and the agent use
// independent streams derived from `seed`. Throws ScaleError when the table
// would not fit in `ram_budget_gb`.
QlResult train_ql(const PbcnModel& model, const CostSpec& spec,
                  const RewardMap& map, const QlSchedule& schedule,
                  std::uint64_t seed, const TrainingOptions& options = {},
                  double ram_budget_gb = kDefaultRamBudgetGb);

}  // namespace pbcn
