#include <doctest.h>

#include <cmath>
#include <vector>

#include "pbcn/errors.hpp"
#include "pbcn/exact.hpp"
#include "support.hpp"

using namespace pbcn;
using namespace pbcn::testing;

namespace {

Solution solve_apoptosis() {
  return policy_iteration(build_exact_mdp(apoptosis(), apoptosis_cost(), RewardMap{}, 0.9));
}

}  // namespace

TEST_CASE("apoptosis MDP tables") {
  const ExactMdp mdp = build_exact_mdp(apoptosis(), apoptosis_cost(), RewardMap{}, 0.9);
  REQUIRE(mdp.states() == 8);
  REQUIRE(mdp.actions() == 2);
  REQUIRE(mdp.transition.size() == 2);
  for (const auto& p : mdp.transition) {
    CHECK((p.array() >= 0.0).all());
    for (Eigen::Index s = 0; s < 8; ++s) CHECK(std::abs(p.row(s).sum() - 1.0) <= 1e-9);
  }
  // x2 = 1 with u1 = 0 earns the full reward.
  for (std::uint64_t s : {2, 3, 6, 7}) CHECK(mdp.reward(static_cast<Eigen::Index>(s), 0) == 1.0);
  CHECK(mdp.transition[1](0, 5) == doctest::Approx(0.8));
  CHECK(mdp.transition[1](0, 4) == doctest::Approx(0.2));
}

TEST_CASE("deterministic single node driven by its input") {
  const PbcnModel m = parse_pbcn("nodes 1\ninputs 1\nx1' = u1\n");
  const ExactMdp mdp = build_exact_mdp(m, CostSpec{}, RewardMap{}, 0.5);
  for (Eigen::Index s = 0; s < 2; ++s) {
    CHECK(mdp.transition[1](s, 1) == 1.0);
    CHECK(mdp.transition[0](s, 0) == 1.0);
  }
}

TEST_CASE("two absorbing states") {
  ExactMdp mdp;
  mdp.nodes = 1;
  mdp.inputs = 0;
  mdp.gamma = 0.9;
  mdp.transition = {Eigen::MatrixXd::Identity(2, 2)};
  mdp.reward = Eigen::MatrixXd(2, 1);
  mdp.reward << 0.0, 1.0;
  const Solution sol = policy_iteration(mdp);
  CHECK(std::abs(sol.value(0)) <= 1e-12);
  CHECK(sol.value(1) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("apoptosis optimal policy") {
  const ExactMdp mdp = build_exact_mdp(apoptosis(), apoptosis_cost(), RewardMap{}, 0.9);
  const Solution sol = policy_iteration(mdp);
  CHECK(sol.policy == kApoptosisPolicy);
  CHECK(bellman_residual(mdp, sol.value) <= 1e-10);
  CHECK(sol.improvement_rounds <= 10);
  for (Eigen::Index s = 0; s < 8; ++s) {
    CHECK(sol.value(s) == sol.q(s, static_cast<Eigen::Index>(sol.policy[static_cast<std::size_t>(s)])));
    CHECK(sol.value(s) == sol.q.row(s).maxCoeff());
  }
}

TEST_CASE("policy iteration agrees with value iteration on random models") {
  Rng gen(101);
  for (int k = 0; k < 10; ++k) {
    const int mi = 1 + static_cast<int>(uniform_index(gen, 2));
    const PbcnModel m = random_model(gen, 3, mi);
    const CostSpec spec = random_cost(gen, 3, mi);
    const ExactMdp mdp = build_exact_mdp(m, spec, RewardMap{}, 0.9);
    const Solution sol = policy_iteration(mdp);
    const ValueIterationResult vi = value_iteration(m, spec, RewardMap{}, 0.9, 10000);
    for (Eigen::Index s = 0; s < 8; ++s) {
      CHECK(std::abs(sol.value(s) - vi.value[static_cast<std::size_t>(s)]) <= 1e-8);
      for (Eigen::Index a = 0; a < mdp.actions(); ++a) {
        CHECK(std::abs(sol.q(s, a) - vi.q[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]) <= 1e-8);
      }
    }
    CHECK(bellman_residual(mdp, sol.value) <= 1e-10);
    CHECK(sol.improvement_rounds <= 1000);
  }
}

TEST_CASE("minimising the cost MDP") {
  const ExactMdp costs = build_cost_mdp(apoptosis(), apoptosis_cost(), 0.9);
  const Solution sol = policy_iteration(costs, Objective::kMinimize);
  CHECK(sol.policy == kApoptosisPolicy);
  CHECK(bellman_residual(costs, sol.value, Objective::kMinimize) <= 1e-10);
  for (Eigen::Index s = 0; s < 8; ++s) CHECK(sol.value(s) == sol.q.row(s).minCoeff());
}

TEST_CASE("optimal action sets use the tie tolerance") {
  Eigen::RowVectorXd row(4);
  row << 1.0, 2.0, 2.0 + 1e-12, 1.5;
  CHECK(optimal_actions(row) == std::vector<std::uint64_t>{1, 2});
  CHECK(optimal_actions(row, Objective::kMinimize) == std::vector<std::uint64_t>{0});
  row << 0.5, 0.5, 0.5, 0.5;
  CHECK(optimal_actions(row).size() == 4);
}

TEST_CASE("ErrorQ") {
  const Solution sol = solve_apoptosis();
  CHECK(error_q(sol, sol.q) == 0.0);
  CHECK(error_q(sol, Eigen::MatrixXd::Zero(8, 2)) == doctest::Approx(sol.value.mean()).epsilon(1e-12));
  // Every shifted estimate is above the oracle, so the error is the shift.
  for (double c : {0.5, 2.0}) {
    CHECK(error_q(sol, (sol.q.array() + c).matrix()) == doctest::Approx(c).epsilon(1e-12));
  }
}

TEST_CASE("Errorpi") {
  const Solution sol = solve_apoptosis();
  CHECK(error_pi(sol, sol.policy, 1) == 0.0);
  CHECK(error_pi(sol, std::vector<std::uint64_t>(8, 0), 1) == 0.25);

  std::vector<std::uint64_t> flipped(8);
  for (std::size_t s = 0; s < 8; ++s) flipped[s] = sol.policy[s] ^ 1u;
  CHECK(error_pi(sol, flipped, 1) == 1.0);

  // Two inputs: complement in every bit, then a single-bit difference.
  Solution two;
  two.policy = {0, 1, 2, 3};
  CHECK(error_pi(two, std::vector<std::uint64_t>{3, 2, 1, 0}, 2) == 1.0);
  CHECK(error_pi(two, std::vector<std::uint64_t>{1, 1, 2, 3}, 2) == doctest::Approx(0.125));
}

TEST_CASE("reward and cost solutions coincide on the apoptosis model") {
  const EquivalenceReport r = verify_reward_cost_equivalence(apoptosis(), apoptosis_cost(), RewardMap{}, 0.9);
  CHECK(r.policies_coincide);
  CHECK(r.identity_holds);
  CHECK(r.max_identity_gap <= 1e-8);
  CHECK_FALSE(r.all_tied);

  // q_r(x, pi(x)) = -J(x) + 1 / (1 - gamma).
  const Solution rewarded = solve_apoptosis();
  const Solution costs = policy_iteration(build_cost_mdp(apoptosis(), apoptosis_cost(), 0.9), Objective::kMinimize);
  for (Eigen::Index s = 0; s < 8; ++s) {
    CHECK(std::abs(rewarded.value(s) - (-costs.value(s) + 10.0)) <= 1e-8);
  }
}

TEST_CASE("rescaled rewards keep the optimal action sets") {
  Rng gen(5);
  for (int k = 0; k < 20; ++k) {
    const int mi = 1 + static_cast<int>(uniform_index(gen, 2));
    const PbcnModel m = random_model(gen, 2, mi);
    const CostSpec spec = random_cost(gen, 2, mi);
    const Solution a = policy_iteration(build_exact_mdp(m, spec, RewardMap(-5, 3), 0.9));
    const Solution b = policy_iteration(build_exact_mdp(m, spec, RewardMap(-1, 0), 0.9));
    for (Eigen::Index s = 0; s < a.q.rows(); ++s) {
      CHECK(optimal_actions(a.q.row(s), Objective::kMaximize, 5e-9) ==
            optimal_actions(b.q.row(s), Objective::kMaximize, 1e-9));
    }
    CHECK(verify_reward_cost_equivalence(m, spec, RewardMap(-5, 3), 0.9).policies_coincide);
  }
}

TEST_CASE("zero cost makes every action optimal") {
  const EquivalenceReport r = verify_reward_cost_equivalence(apoptosis(), CostSpec{}, RewardMap{}, 0.9);
  CHECK(r.all_tied);
  CHECK(r.policies_coincide);
  CHECK(r.summary.find("full tie") != std::string::npos);
}

TEST_CASE("equivalence on random small models") {
  Rng gen(2024);
  for (int k = 0; k < 100; ++k) {
    const int n = 1 + static_cast<int>(uniform_index(gen, 3));
    const int mi = 1 + static_cast<int>(uniform_index(gen, 2));
    const PbcnModel m = random_model(gen, n, mi);
    const CostSpec spec = random_cost(gen, n, mi);
    const RewardMap map(-5.0 + 4.9 * uniform01(gen), -2.0 + 4.0 * uniform01(gen));
    const EquivalenceReport r = verify_reward_cost_equivalence(m, spec, map, 0.9);
    INFO(r.summary);
    CHECK(r.policies_coincide);
    CHECK(r.identity_holds);
  }
}

TEST_CASE("oversized models are refused") {
  const PbcnModel m = load_pbcn(model_dir() / "tcell28.pbcn");
  CHECK_THROWS_AS(build_exact_mdp(m, tcell_cost(), RewardMap{}, 0.9), ScaleError);
  CHECK_THROWS_AS(build_exact_mdp(apoptosis(), apoptosis_cost(), RewardMap{}, 0.9, 2), ScaleError);
}
