#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pbcn/bits.hpp"
#include "pbcn/model.hpp"

namespace pbcn {

// Penalise `weight` whenever variable `index` (1-based) differs from `target`.
struct CostTarget {
  int index;
  std::uint8_t target;
  double weight;
};

/// Weighted mismatch cost over designated nodes and inputs. Variables without
/// a target contribute nothing.
struct CostSpec {
  std::vector<CostTarget> nodes;
  std::vector<CostTarget> inputs;

  // Throws ModelError for out-of-range indices, non-binary targets or
  // negative weights.
  void validate(int node_count, int input_count) const;

  // Upper bound on the per-step cost: the sum of all weights.
  double max_cost() const;

  double operator()(std::span<const std::uint8_t> state,
                    std::span<const std::uint8_t> action) const;
};

inline double cost(const CostSpec& spec, std::span<const std::uint8_t> state,
                   std::span<const std::uint8_t> action) {
  return spec(state, action);
}

/// Affine cost-to-reward map r = c1 * cost + c2 with c1 < 0, which keeps the
/// reward-maximising and cost-minimising policies identical.
class RewardMap {
 public:
  RewardMap() = default;
  // Throws ModelError unless c1 < 0.
  RewardMap(double c1, double c2);

  double c1() const { return c1_; }
  double c2() const { return c2_; }
  double operator()(double cost_value) const { return c1_ * cost_value + c2_; }

 private:
  double c1_ = -1.0;
  double c2_ = 1.0;
};

inline double reward(const RewardMap& map, double cost_value) {
  return map(cost_value);
}

struct Transition {
  State state;
  Action action;
  State next_state;
  double reward;
};

struct StepResult {
  State next_state;
  double reward;
};

/// Episodic view of a PBCN. Rewards depend on the pre-transition (x_t, u_t)
/// pair only. There are no terminal states. The referenced model must outlive
/// the environment.
class Environment {
 public:
  Environment(const PbcnModel& model, CostSpec spec, RewardMap map, Rng rng);
  Environment(const PbcnModel& model, CostSpec spec, RewardMap map,
              std::uint64_t seed)
      : Environment(model, std::move(spec), map, Rng(seed)) {}

  // Uniform draw over all 2^n states, or `start` when given.
  const State& reset(std::optional<State> start = std::nullopt);

  // Throws std::logic_error before the first reset.
  StepResult step(const Action& action);
  StepResult step(std::uint64_t action_dec);

  double reward_for(std::span<const std::uint8_t> state,
                    std::span<const std::uint8_t> action) const {
    return map_(spec_(state, action));
  }

  const State& state() const;
  const PbcnModel& model() const { return *model_; }
  const CostSpec& cost_spec() const { return spec_; }
  const RewardMap& reward_map() const { return map_; }
  Rng& rng() { return rng_; }

 private:
  const PbcnModel* model_;
  CostSpec spec_;
  RewardMap map_;
  Rng rng_;
  std::optional<State> state_;
};

// sum_k gamma^k * values[k].
double discounted_return(std::span<const double> values, double gamma);

}  // namespace pbcn
