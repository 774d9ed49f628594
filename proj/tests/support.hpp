#pragma once

// Shared fixtures and test-side oracles. Nothing here calls the enumeration,
// solver or backpropagation code it is used to check.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pbcn/bits.hpp"
#include "pbcn/env.hpp"
#include "pbcn/mlp.hpp"
#include "pbcn/model.hpp"
#include "pbcn/parser.hpp"

namespace pbcn::testing {

inline const char* kApoptosisSource = R"(
# three nodes, one input
nodes 3
inputs 1
x1' = !x2 & u1 : 0.6 | u1 : 0.4
x2' = !x1 & x3 : 0.7 | x2 : 0.3
x3' = x2 | u1 : 0.8 | x3 : 0.2
)";

inline std::filesystem::path model_dir() { return std::filesystem::path(PBCN_SOURCE_DIR) / "models"; }
inline std::filesystem::path config_dir() { return std::filesystem::path(PBCN_SOURCE_DIR) / "configs"; }

inline PbcnModel apoptosis() { return parse_pbcn(kApoptosisSource, "apoptosis3"); }

// Drive x2 to 1 (weight 0.8) and keep u1 at 0 (weight 0.2).
inline CostSpec apoptosis_cost() { return CostSpec{{{2, 1, 0.8}}, {{1, 0, 0.2}}}; }

inline CostSpec tcell_cost() {
  return CostSpec{{{1, 0, 0.4}, {7, 0, 0.3}}, {{1, 0, 0.1}, {2, 0, 0.1}, {3, 0, 0.1}}};
}

// Optimal decision per state of the apoptosis model: u1 = 1 only at 000 and 100.
inline const std::vector<std::uint64_t> kApoptosisPolicy{1, 0, 0, 0, 1, 0, 0, 0};

inline BoolExpr random_expr(Rng& rng, int nodes, int inputs, int depth) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 5 : 2);
  switch (pick(rng)) {
    case 0:
      return BoolExpr::constant(uniform01(rng) < 0.5);
    case 1:
    case 2:
      if (inputs > 0 && uniform01(rng) < 0.4) {
        return BoolExpr::input(1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(inputs))));
      }
      return BoolExpr::state(1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(nodes))));
    case 3:
      return BoolExpr::negate(random_expr(rng, nodes, inputs, depth - 1));
    case 4:
      return BoolExpr::conj(random_expr(rng, nodes, inputs, depth - 1),
                            random_expr(rng, nodes, inputs, depth - 1));
    default:
      return BoolExpr::disj(random_expr(rng, nodes, inputs, depth - 1),
                            random_expr(rng, nodes, inputs, depth - 1));
  }
}

// Up to `max_alternatives` rules per node with random probabilities.
inline PbcnModel random_model(Rng& rng, int nodes, int inputs, int max_alternatives = 3) {
  std::vector<NodeRule> rules;
  for (int i = 0; i < nodes; ++i) {
    const int count = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(max_alternatives)));
    std::vector<double> w(static_cast<std::size_t>(count));
    double total = 0.0;
    for (double& x : w) total += (x = 0.05 + uniform01(rng));
    NodeRule rule;
    double used = 0.0;
    for (int j = 0; j < count; ++j) {
      const double p = j + 1 == count ? 1.0 - used : w[static_cast<std::size_t>(j)] / total;
      used += p;
      rule.alternatives.push_back({random_expr(rng, nodes, inputs, 2), p});
    }
    rules.push_back(std::move(rule));
  }
  return PbcnModel(nodes, inputs, std::move(rules));
}

inline CostSpec random_cost(Rng& rng, int nodes, int inputs) {
  CostSpec spec;
  for (int i = 1; i <= nodes; ++i) {
    if (uniform01(rng) < 0.7) spec.nodes.push_back({i, static_cast<std::uint8_t>(uniform_index(rng, 2)), uniform01(rng)});
  }
  for (int j = 1; j <= inputs; ++j) {
    if (uniform01(rng) < 0.7) spec.inputs.push_back({j, static_cast<std::uint8_t>(uniform_index(rng, 2)), uniform01(rng)});
  }
  return spec;
}

// Walks every joint choice of one alternative per node (mixed-radix counter)
// and accumulates the product probability of each resulting successor.
inline std::map<std::uint64_t, double> brute_force_distribution(const PbcnModel& model,
                                                                const State& x, const Action& u) {
  const int n = model.nodes();
  std::vector<std::size_t> choice(static_cast<std::size_t>(n), 0);
  std::map<std::uint64_t, double> out;
  while (true) {
    double p = 1.0;
    std::uint64_t next = 0;
    for (int i = 0; i < n; ++i) {
      const Alternative& alt = model.rules()[static_cast<std::size_t>(i)].alternatives[choice[static_cast<std::size_t>(i)]];
      p *= alt.prob;
      next = (next << 1) | (alt.expr.eval(x, u) ? 1u : 0u);
    }
    if (p > 0.0) out[next] += p;
    int i = n - 1;
    for (; i >= 0; --i) {
      auto& c = choice[static_cast<std::size_t>(i)];
      if (++c < model.rules()[static_cast<std::size_t>(i)].alternatives.size()) break;
      c = 0;
    }
    if (i < 0) break;
  }
  return out;
}

// Bellman backups from v = 0. Returns v and the matching action values.
struct ValueIterationResult {
  std::vector<double> value;
  std::vector<std::vector<double>> q;
};

inline ValueIterationResult value_iteration(const PbcnModel& model, const CostSpec& spec,
                                            const RewardMap& map, double gamma, int sweeps) {
  const std::uint64_t S = model.state_count();
  const std::uint64_t A = model.action_count();
  std::vector<std::vector<std::map<std::uint64_t, double>>> dist(S);
  std::vector<std::vector<double>> reward(S, std::vector<double>(A));
  for (std::uint64_t s = 0; s < S; ++s) {
    const State x = from_decimal(s, model.nodes());
    for (std::uint64_t a = 0; a < A; ++a) {
      const Action u = from_decimal(a, model.inputs());
      dist[s].push_back(brute_force_distribution(model, x, u));
      double c = 0.0;
      for (const CostTarget& t : spec.nodes) c += x[static_cast<std::size_t>(t.index - 1)] != t.target ? t.weight : 0.0;
      for (const CostTarget& t : spec.inputs) c += u[static_cast<std::size_t>(t.index - 1)] != t.target ? t.weight : 0.0;
      reward[s][a] = map.c1() * c + map.c2();
    }
  }
  ValueIterationResult r{std::vector<double>(S, 0.0), std::vector<std::vector<double>>(S, std::vector<double>(A))};
  for (int k = 0; k < sweeps; ++k) {
    std::vector<double> next(S);
    for (std::uint64_t s = 0; s < S; ++s) {
      double best = -1e300;
      for (std::uint64_t a = 0; a < A; ++a) {
        double q = reward[s][a];
        for (const auto& [t, p] : dist[s][a]) q += gamma * p * r.value[t];
        r.q[s][a] = q;
        best = std::max(best, q);
      }
      next[s] = best;
    }
    r.value = std::move(next);
  }
  return r;
}

// Loss recomputed with plain loops over the layer parameters.
inline double reference_loss(const Mlp<double>& net, const Eigen::MatrixXd& states,
                             const std::vector<std::uint64_t>& actions, const Eigen::VectorXd& targets) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < states.cols(); ++i) {
    std::vector<double> h(static_cast<std::size_t>(states.rows()));
    for (Eigen::Index r = 0; r < states.rows(); ++r) h[static_cast<std::size_t>(r)] = states(r, i);
    const auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      std::vector<double> z(static_cast<std::size_t>(layers[l].weight.rows()));
      for (Eigen::Index o = 0; o < layers[l].weight.rows(); ++o) {
        double acc = layers[l].bias(o);
        for (Eigen::Index k = 0; k < layers[l].weight.cols(); ++k) acc += layers[l].weight(o, k) * h[static_cast<std::size_t>(k)];
        z[static_cast<std::size_t>(o)] = l + 1 < layers.size() ? std::max(acc, 0.0) : acc;
      }
      h = std::move(z);
    }
    const double err = targets(i) - h[static_cast<std::size_t>(actions[static_cast<std::size_t>(i)])];
    loss += err * err;
  }
  return loss / static_cast<double>(states.cols());
}

// Central differences of reference_loss over the flattened parameters.
inline Eigen::VectorXd finite_difference_gradient(const Mlp<double>& net, const Eigen::MatrixXd& states,
                                                  const std::vector<std::uint64_t>& actions,
                                                  const Eigen::VectorXd& targets, double step) {
  Mlp<double> probe = net;
  const Eigen::VectorXd base = net.flatten();
  Eigen::VectorXd grad(base.size());
  for (Eigen::Index k = 0; k < base.size(); ++k) {
    Eigen::VectorXd p = base;
    p(k) += step;
    probe.assign(p);
    const double up = reference_loss(probe, states, actions, targets);
    p(k) -= 2 * step;
    probe.assign(p);
    const double down = reference_loss(probe, states, actions, targets);
    grad(k) = (up - down) / (2 * step);
  }
  return grad;
}

}  // namespace pbcn::testing
