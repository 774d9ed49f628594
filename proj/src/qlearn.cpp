#include "pbcn/qlearn.hpp"

#include <cmath>
#include <string>

#include "pbcn/errors.hpp"

namespace pbcn {

std::uint64_t QTable::greedy(std::uint64_t s) const {
  const auto row = values_.row(static_cast<Eigen::Index>(s));
  Eigen::Index best = 0;
  for (Eigen::Index a = 1; a < row.size(); ++a) {
    if (row(a) > row(best)) best = a;
  }
  return static_cast<std::uint64_t>(best);
}

std::vector<std::uint64_t> QTable::greedy_policy() const {
  std::vector<std::uint64_t> policy(states());
  for (std::uint64_t s = 0; s < states(); ++s) policy[s] = greedy(s);
  return policy;
}

double q_update(QTable& table, std::uint64_t state, std::uint64_t action,
                double reward, std::uint64_t next_state, double alpha, double gamma) {
  const double target = reward + gamma * table.max_value(next_state);
  double& entry = table(state, action);
  entry = (1.0 - alpha) * entry + alpha * target;
  return entry;
}

std::uint64_t epsilon_greedy(const QTable& table, std::uint64_t state,
                             double epsilon, Rng& rng) {
  if (uniform01(rng) < epsilon) return uniform_index(rng, table.actions());
  return table.greedy(state);
}

double QlSchedule::alpha(int episode) const {
  return 1.0 / std::pow(static_cast<double>(episode) + 1.0, omega);
}

double QlSchedule::epsilon(std::uint64_t global_step) const {
  return std::pow(1.0 - delta, static_cast<double>(global_step));
}

void QlSchedule::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(omega > 0.5 && omega <= 1.0)) {
    throw ConfigError("omega = " + std::to_string(omega) +
                      " breaks the step-size conditions for convergence (need "
                      "0.5 < omega <= 1: sum alpha = inf, sum alpha^2 < inf)");
  }
  if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in [0, 1]");
  if (episodes < 0 || steps < 1) throw ConfigError("episodes must be >= 0 and steps >= 1");
}

QlResult train_ql(const PbcnModel& model, const CostSpec& spec,
                  const RewardMap& map, const QlSchedule& schedule,
                  std::uint64_t seed, const TrainingOptions& options,
                  double ram_budget_gb) {
  schedule.validate();
  if (classify_scale(model.nodes(), model.inputs(), ram_budget_gb) != Scale::kSmall) {
    throw ScaleError("Q-table of 2^" + std::to_string(model.nodes() + model.inputs()) +
                     " entries does not fit in " + std::to_string(ram_budget_gb) +
                     " GB; the model is large-scale, use DDQN");
  }

  Environment env(model, spec, map, derive_rng(seed, 0));
  Rng agent_rng = derive_rng(seed, 1);

  QlResult result{QTable(model.state_count(), model.action_count()), {}, {}, {}};
  QTable& q = result.table;
  result.episode_rewards.reserve(static_cast<std::size_t>(schedule.episodes));

  std::uint64_t global_step = 0;
  double window_sum = 0.0;
  int window_count = 0;
  for (int ep = 0; ep < schedule.episodes; ++ep) {
    const double alpha = schedule.alpha(ep);
    std::uint64_t s = to_decimal(env.reset());
    double total = 0.0;
    for (int t = 0; t < schedule.steps; ++t, ++global_step) {
      const std::uint64_t a = epsilon_greedy(q, s, schedule.epsilon(global_step), agent_rng);
      const StepResult out = env.step(a);
      const std::uint64_t next = to_decimal(out.next_state);
      q_update(q, s, a, out.reward, next, alpha, schedule.gamma);
      total += out.reward;
      s = next;
    }
    const double mean = total / schedule.steps;
    result.episode_rewards.push_back(mean);
    window_sum += mean;
    ++window_count;

    if (is_checkpoint(ep, schedule.episodes, options.metric_every)) {
      EpisodeMetric m{ep, window_sum / window_count, std::nullopt, std::nullopt};
      if (options.oracle) {
        m.error_q = error_q(*options.oracle, q.values());
        m.error_pi = error_pi(*options.oracle, q.greedy_policy(), model.inputs());
      }
      result.metrics.push_back(m);
      window_sum = 0.0;
      window_count = 0;
    }
  }
  result.policy = q.greedy_policy();
  return result;
}

}  // namespace pbcn
