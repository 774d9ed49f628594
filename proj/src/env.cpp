#include "pbcn/env.hpp"

#include <stdexcept>
#include <string>

#include "pbcn/errors.hpp"

namespace pbcn {
namespace {

void check_targets(const std::vector<CostTarget>& targets, int limit,
                   const char* kind) {
  for (const CostTarget& t : targets) {
    if (t.index < 1 || t.index > limit) {
      throw ModelError(std::string("cost ") + kind + " index " +
                       std::to_string(t.index) + " outside [1, " +
                       std::to_string(limit) + "]");
    }
    if (t.target > 1) {
      throw ModelError(std::string("cost ") + kind + " target must be 0 or 1");
    }
    if (!(t.weight >= 0.0)) {
      throw ModelError(std::string("cost ") + kind + " weight must be >= 0");
    }
  }
}

}  // namespace

void CostSpec::validate(int node_count, int input_count) const {
  check_targets(nodes, node_count, "node");
  check_targets(inputs, input_count, "input");
}

double CostSpec::max_cost() const {
  double total = 0.0;
  for (const CostTarget& t : nodes) total += t.weight;
  for (const CostTarget& t : inputs) total += t.weight;
  return total;
}

double CostSpec::operator()(std::span<const std::uint8_t> state,
                            std::span<const std::uint8_t> action) const {
  double c = 0.0;
  for (const CostTarget& t : inputs) {
    if (action[static_cast<std::size_t>(t.index - 1)] != t.target) c += t.weight;
  }
  for (const CostTarget& t : nodes) {
    if (state[static_cast<std::size_t>(t.index - 1)] != t.target) c += t.weight;
  }
  return c;
}

RewardMap::RewardMap(double c1, double c2) : c1_(c1), c2_(c2) {
  if (!(c1 < 0.0)) {
    throw ModelError("reward scale c1 must be negative, got " + std::to_string(c1));
  }
}

Environment::Environment(const PbcnModel& model, CostSpec spec, RewardMap map,
                         Rng rng)
    : model_(&model), spec_(std::move(spec)), map_(map), rng_(std::move(rng)) {
  spec_.validate(model.nodes(), model.inputs());
}

const State& Environment::reset(std::optional<State> start) {
  if (start) {
    if (start->size() != static_cast<std::size_t>(model_->nodes())) {
      throw std::invalid_argument("reset state has wrong length");
    }
    state_ = std::move(start);
  } else {
    state_ = from_decimal(uniform_index(rng_, model_->state_count()), model_->nodes());
  }
  return *state_;
}

StepResult Environment::step(const Action& action) {
  if (!state_) throw std::logic_error("Environment::step called before reset");
  const double r = reward_for(*state_, action);
  State next = pbcn::step(*model_, *state_, action, rng_);
  *state_ = next;
  return {std::move(next), r};
}

StepResult Environment::step(std::uint64_t action_dec) {
  return step(from_decimal(action_dec, model_->inputs()));
}

const State& Environment::state() const {
  if (!state_) throw std::logic_error("Environment::state called before reset");
  return *state_;
}

double discounted_return(std::span<const double> values, double gamma) {
  double total = 0.0;
  double discount = 1.0;
  for (double v : values) {
    total += discount * v;
    discount *= gamma;
  }
  return total;
}

}  // namespace pbcn
