#include "pbcn/model.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <utility>

#include "pbcn/errors.hpp"

namespace pbcn {

PbcnModel::PbcnModel(int nodes, int inputs, std::vector<NodeRule> rules,
                     std::string name)
    : nodes_(nodes), inputs_(inputs), rules_(std::move(rules)),
      name_(std::move(name)) {
  if (nodes_ < 1 || nodes_ > 63) {
    throw ModelError("node count must be in [1, 63], got " +
                     std::to_string(nodes_));
  }
  if (inputs_ < 0 || inputs_ > 30) {
    throw ModelError("input count must be in [0, 30], got " +
                     std::to_string(inputs_));
  }
  if (rules_.size() != static_cast<std::size_t>(nodes_)) {
    throw ModelError("expected " + std::to_string(nodes_) + " node rules, got " +
                     std::to_string(rules_.size()));
  }
  for (int i = 1; i <= nodes_; ++i) {
    const NodeRule& r = rule(i);
    const std::string where = "node x" + std::to_string(i) + ": ";
    if (r.alternatives.empty()) throw ModelError(where + "no update function");
    double total = 0.0;
    for (const Alternative& alt : r.alternatives) {
      if (!(alt.prob >= 0.0) || alt.prob > 1.0) {
        throw ModelError(where + "probability " + std::to_string(alt.prob) +
                         " outside [0, 1]");
      }
      if (alt.expr.max_state_index() > nodes_) {
        throw ModelError(where + "references x" +
                         std::to_string(alt.expr.max_state_index()) +
                         " but the model has " + std::to_string(nodes_) +
                         " nodes");
      }
      if (alt.expr.max_input_index() > inputs_) {
        throw ModelError(where + "references u" +
                         std::to_string(alt.expr.max_input_index()) +
                         " but the model has " + std::to_string(inputs_) +
                         " inputs");
      }
      total += alt.prob;
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.15g", total);
      throw ModelError(where + "probabilities sum to " + buf);
    }
  }
}

bool PbcnModel::deterministic() const {
  for (const NodeRule& r : rules_) {
    if (!r.deterministic()) return false;
  }
  return true;
}

std::uint64_t PbcnModel::selection_count() const {
  std::uint64_t count = 1;
  for (const NodeRule& r : rules_) {
    const std::uint64_t l = r.alternatives.size();
    if (count > std::numeric_limits<std::uint64_t>::max() / l) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    count *= l;
  }
  return count;
}

bool operator==(const PbcnModel& a, const PbcnModel& b) {
  if (a.nodes_ != b.nodes_ || a.inputs_ != b.inputs_) return false;
  for (std::size_t i = 0; i < a.rules_.size(); ++i) {
    const auto& x = a.rules_[i].alternatives;
    const auto& y = b.rules_[i].alternatives;
    if (x.size() != y.size()) return false;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (x[j].prob != y[j].prob || !(x[j].expr == y[j].expr)) return false;
    }
  }
  return true;
}

State step(const PbcnModel& model, const State& state, const Action& action,
           Rng& rng) {
  State next(state.size());
  for (int i = 1; i <= model.nodes(); ++i) {
    const auto& alts = model.rule(i).alternatives;
    const double draw = uniform01(rng);
    // Falls back to the last alternative if rounding leaves the cumulative
    // mass a hair under 1.
    std::size_t chosen = alts.size() - 1;
    double cumulative = 0.0;
    for (std::size_t j = 0; j < alts.size(); ++j) {
      cumulative += alts[j].prob;
      if (draw < cumulative) {
        chosen = j;
        break;
      }
    }
    next[static_cast<std::size_t>(i - 1)] = alts[chosen].expr.eval(state, action);
  }
  return next;
}

TransitionDistribution transition_distribution(const PbcnModel& model,
                                               const State& state,
                                               const Action& action,
                                               std::uint64_t budget) {
  if (model.selection_count() > budget) {
    throw ScaleError("model has more rule selections than the enumeration budget (" +
                     std::to_string(budget) + ")");
  }
  // Nodes draw independently, so the joint law factorises into per-node
  // Bernoulli masses; expand those into the product distribution.
  std::vector<std::pair<std::uint64_t, double>> partial{{0, 1.0}};
  for (int i = 1; i <= model.nodes(); ++i) {
    double one = 0.0;
    double zero = 0.0;
    for (const Alternative& alt : model.rule(i).alternatives) {
      (alt.expr.eval(state, action) ? one : zero) += alt.prob;
    }
    std::vector<std::pair<std::uint64_t, double>> grown;
    grown.reserve(partial.size() * 2);
    for (const auto& [prefix, mass] : partial) {
      if (zero > 0.0) grown.emplace_back(prefix << 1, mass * zero);
      if (one > 0.0) grown.emplace_back((prefix << 1) | 1u, mass * one);
    }
    partial = std::move(grown);
  }
  TransitionDistribution dist;
  for (const auto& [next, mass] : partial) dist[next] += mass;
  return dist;
}

}  // namespace pbcn
