#include "pbcn/exact.hpp"

#include <bit>
#include <cmath>
#include <sstream>

#include "pbcn/errors.hpp"

namespace pbcn {
namespace {

ExactMdp enumerate(const PbcnModel& model, double gamma, int max_nodes,
                   const auto& payoff) {
  if (model.nodes() > max_nodes) {
    throw ScaleError("exact solver needs the full state space; " +
                     std::to_string(model.nodes()) + " nodes exceeds the limit of " +
                     std::to_string(max_nodes) +
                     " (the table of 2^(n+m) action-values must fit in memory)");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ModelError("discount factor must lie in [0, 1)");
  }
  ExactMdp mdp;
  mdp.nodes = model.nodes();
  mdp.inputs = model.inputs();
  mdp.gamma = gamma;
  const auto S = static_cast<Eigen::Index>(model.state_count());
  const auto A = static_cast<Eigen::Index>(model.action_count());
  mdp.transition.assign(static_cast<std::size_t>(A), Eigen::MatrixXd::Zero(S, S));
  mdp.reward.resize(S, A);
  for (Eigen::Index s = 0; s < S; ++s) {
    const State x = from_decimal(static_cast<std::uint64_t>(s), model.nodes());
    for (Eigen::Index a = 0; a < A; ++a) {
      const Action u = from_decimal(static_cast<std::uint64_t>(a), model.inputs());
      for (const auto& [next, p] : transition_distribution(model, x, u)) {
        mdp.transition[static_cast<std::size_t>(a)](s, static_cast<Eigen::Index>(next)) = p;
      }
      mdp.reward(s, a) = payoff(x, u);
    }
  }
  return mdp;
}

double sign_of(Objective objective) {
  return objective == Objective::kMaximize ? 1.0 : -1.0;
}

}  // namespace

ExactMdp build_exact_mdp(const PbcnModel& model, const CostSpec& spec,
                         const RewardMap& map, double gamma, int max_nodes) {
  spec.validate(model.nodes(), model.inputs());
  return enumerate(model, gamma, max_nodes, [&](const State& x, const Action& u) {
    return map(spec(x, u));
  });
}

ExactMdp build_cost_mdp(const PbcnModel& model, const CostSpec& spec,
                        double gamma, int max_nodes) {
  spec.validate(model.nodes(), model.inputs());
  return enumerate(model, gamma, max_nodes,
                   [&](const State& x, const Action& u) { return spec(x, u); });
}

Eigen::MatrixXd action_values(const ExactMdp& mdp, const Eigen::VectorXd& value) {
  Eigen::MatrixXd q = mdp.reward;
  for (Eigen::Index a = 0; a < mdp.actions(); ++a) {
    q.col(a).noalias() += mdp.gamma * (mdp.transition[static_cast<std::size_t>(a)] * value);
  }
  return q;
}

double bellman_residual(const ExactMdp& mdp, const Eigen::VectorXd& value,
                        Objective objective) {
  const Eigen::MatrixXd q = action_values(mdp, value);
  const Eigen::VectorXd best = objective == Objective::kMaximize
                                   ? Eigen::VectorXd(q.rowwise().maxCoeff())
                                   : Eigen::VectorXd(q.rowwise().minCoeff());
  return (value - best).cwiseAbs().maxCoeff();
}

std::vector<std::uint64_t> optimal_actions(const Eigen::Ref<const Eigen::RowVectorXd>& row,
                                           Objective objective, double tol) {
  const double s = sign_of(objective);
  const double best = (s * row).maxCoeff();
  std::vector<std::uint64_t> out;
  for (Eigen::Index a = 0; a < row.size(); ++a) {
    if (s * row(a) >= best - tol) out.push_back(static_cast<std::uint64_t>(a));
  }
  return out;
}

Solution policy_iteration(const ExactMdp& mdp, Objective objective) {
  constexpr int kMaxRounds = 1000;
  const Eigen::Index S = mdp.states();
  const double s = sign_of(objective);
  std::vector<std::uint64_t> policy(static_cast<std::size_t>(S), 0);

  Solution sol;
  Eigen::VectorXd v(S);
  for (int round = 1;; ++round) {
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S);
    Eigen::VectorXd rhs(S);
    for (Eigen::Index x = 0; x < S; ++x) {
      const auto a = static_cast<Eigen::Index>(policy[static_cast<std::size_t>(x)]);
      system.row(x) -= mdp.gamma * mdp.transition[static_cast<std::size_t>(a)].row(x);
      rhs(x) = mdp.reward(x, a);
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    if (!(lu.rcond() > 1e-14)) {
      throw Error("policy evaluation system is singular (gamma = " +
                  std::to_string(mdp.gamma) + ")");
    }
    v = lu.solve(rhs);

    const Eigen::MatrixXd q = action_values(mdp, v);
    bool changed = false;
    for (Eigen::Index x = 0; x < S; ++x) {
      auto& current = policy[static_cast<std::size_t>(x)];
      const double held = s * q(x, static_cast<Eigen::Index>(current));
      const double best = (s * q.row(x)).maxCoeff();
      if (best > held + kTieTolerance) {
        current = optimal_actions(q.row(x), objective).front();
        changed = true;
      }
    }
    sol.improvement_rounds = round;
    if (!changed) break;
    if (round >= kMaxRounds) throw Error("policy iteration did not converge");
  }

  sol.q = action_values(mdp, v);
  sol.value.resize(S);
  sol.policy.resize(static_cast<std::size_t>(S));
  for (Eigen::Index x = 0; x < S; ++x) {
    const auto best = optimal_actions(sol.q.row(x), objective).front();
    sol.policy[static_cast<std::size_t>(x)] = best;
    sol.value(x) = sol.q(x, static_cast<Eigen::Index>(best));
  }
  return sol;
}

double error_q(const Solution& solution, const Eigen::MatrixXd& estimate) {
  if (estimate.rows() != solution.value.size()) {
    throw ScaleError("estimate covers " + std::to_string(estimate.rows()) +
                     " states, reference has " + std::to_string(solution.value.size()));
  }
  return (solution.value - estimate.rowwise().maxCoeff()).cwiseAbs().mean();
}

double error_pi(const Solution& solution, std::span<const std::uint64_t> policy,
                int inputs) {
  if (policy.size() != solution.policy.size()) {
    throw ScaleError("candidate policy covers " + std::to_string(policy.size()) +
                     " states, reference has " + std::to_string(solution.policy.size()));
  }
  if (inputs < 1) throw std::invalid_argument("error_pi needs at least one input");
  double total = 0.0;
  for (std::size_t x = 0; x < policy.size(); ++x) {
    total += static_cast<double>(std::popcount(policy[x] ^ solution.policy[x])) / inputs;
  }
  return total / static_cast<double>(policy.size());
}

EquivalenceReport verify_reward_cost_equivalence(const PbcnModel& model,
                                                 const CostSpec& spec,
                                                 const RewardMap& map, double gamma,
                                                 double identity_tol) {
  const Solution rewarded = policy_iteration(build_exact_mdp(model, spec, map, gamma));
  const Solution costed =
      policy_iteration(build_cost_mdp(model, spec, gamma), Objective::kMinimize);

  EquivalenceReport report;
  report.all_tied = true;
  const double offset = map.c2() / (1.0 - gamma);
  const double scaled_tol = kTieTolerance * std::max(1.0, std::abs(map.c1()));
  for (Eigen::Index x = 0; x < rewarded.q.rows(); ++x) {
    const auto best_r = optimal_actions(rewarded.q.row(x), Objective::kMaximize, scaled_tol);
    const auto best_c = optimal_actions(costed.q.row(x), Objective::kMinimize);
    if (best_r.size() != static_cast<std::size_t>(rewarded.q.cols())) report.all_tied = false;
    if (best_r != best_c && report.policies_coincide) {
      report.policies_coincide = false;
      report.first_mismatch_state = static_cast<std::uint64_t>(x);
    }
    const double gap = (rewarded.q.row(x) -
                        (map.c1() * costed.q.row(x)).array().matrix() -
                        Eigen::RowVectorXd::Constant(rewarded.q.cols(), offset))
                           .cwiseAbs()
                           .maxCoeff();
    report.max_identity_gap = std::max(report.max_identity_gap, gap);
  }
  report.identity_holds = report.max_identity_gap <= identity_tol;

  std::ostringstream msg;
  if (report.policies_coincide) {
    msg << "optimal action sets coincide at all " << rewarded.q.rows() << " states";
  } else {
    msg << "optimal action sets differ first at state " << *report.first_mismatch_state;
  }
  msg << "; max |q_r - (c1 q_cost + c2/(1-gamma))| = " << report.max_identity_gap;
  if (report.all_tied) msg << "; every action is optimal everywhere (full tie)";
  report.summary = msg.str();
  return report;
}

}  // namespace pbcn
