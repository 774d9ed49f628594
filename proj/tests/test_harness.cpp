#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "pbcn/errors.hpp"
#include "pbcn/harness.hpp"
#include "pbcn/scale.hpp"
#include "support.hpp"

using namespace pbcn;
using namespace pbcn::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("pbcn-harness-" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kQlConfig = R"(
seed = 4
output = out

[model]
path = apoptosis3.pbcn

[cost]
node = 2 1 0.8
input = 1 0 0.2

[algo]
kind = ql
episodes = 500
oracle = true
)";

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(kQlConfig, model_dir());
  CHECK(c.model_path == model_dir() / "apoptosis3.pbcn");
  CHECK(c.algorithm == Algorithm::kQl);
  CHECK(c.episodes == 500);
  CHECK(c.seed == 4);
  CHECK(c.oracle);
  CHECK(c.gamma == 0.9);
  CHECK(c.steps == 15);
  REQUIRE(c.cost.nodes.size() == 1);
  CHECK(c.cost.nodes[0].index == 2);
  CHECK(c.cost.nodes[0].weight == 0.8);
  CHECK(c.reward.c1() == -1.0);
  CHECK(c.ql_schedule().episodes == 500);

  const ExperimentConfig dotted = parse_config("model.path = /m.pbcn\nalgo.kind = ddqn\nalgo.hidden = 8\nalgo.init = paper\n");
  CHECK(dotted.algorithm == Algorithm::kDdqn);
  CHECK(dotted.ddqn_params().hidden == 8);
  CHECK(dotted.ddqn_params().init == InitMode::kUnit);
}

TEST_CASE("config errors name the offending key") {
  try {
    parse_config("[algo]\ngama = 0.9\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("gama") != std::string::npos);
    CHECK(msg.find("gamma") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("[nonsense]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[algo]\ngamma = 0.9\ngamma = 0.8\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[algo]\nepisodes = many\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[algo]\nkind = sarsa\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[algo]\nomega = 0.4\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_config("[reward]\nc1 = 1\n"), ConfigError);
}

TEST_CASE("config text round trip") {
  for (const char* name : {"example1-pi.cfg", "example1-ql.cfg", "example1-ddqn.cfg", "example2-ddqn-desk.cfg"}) {
    const ExperimentConfig c = load_config(config_dir() / name);
    CHECK_NOTHROW(c.validate());
    CHECK(fs::exists(c.model_path));
    const std::string text = config_text(c);
    CHECK(config_text(parse_config(text)) == text);
  }
}

TEST_CASE("scale classification") {
  CHECK(classify_scale(3, 1) == Scale::kSmall);
  CHECK(classify_scale(28, 3) == Scale::kLarge);
  CHECK(classify_scale(3, 1, 0.0) == Scale::kLarge);
  Scale prev = Scale::kSmall;
  for (int n = 1; n < 40; ++n) {
    const Scale s = classify_scale(n, 2);
    if (prev == Scale::kLarge) CHECK(s == Scale::kLarge);
    prev = s;
  }
  CHECK(classify_scale(20, 2, 1.0) == Scale::kSmall);
  CHECK(classify_scale(30, 2, 1.0) == Scale::kLarge);
}

TEST_CASE("moving average") {
  const std::vector<double> flat(7, 2.5);
  for (int w : {1, 2, 3, 10}) {
    for (double v : average_series(flat, w)) CHECK(v == doctest::Approx(2.5));
  }
  const std::vector<double> x{3.0, -1.0, 4.0};
  CHECK(average_series(x, 1) == x);

  std::vector<double> alt(10);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = static_cast<double>(i % 2);
  const std::vector<double> s = average_series(alt, 2);
  REQUIRE(s.size() == 10);
  for (std::size_t i = 0; i + 1 < s.size(); ++i) CHECK(s[i] == doctest::Approx(0.5));
  CHECK(s[9] == 1.0);

  // Centred window of 3 clipped at both ends.
  const std::vector<double> ramp{0.0, 3.0, 6.0, 9.0};
  const std::vector<double> r = average_series(ramp, 3);
  CHECK(r[0] == doctest::Approx(1.5));
  CHECK(r[1] == doctest::Approx(3.0));
  CHECK(r[3] == doctest::Approx(7.5));
  CHECK(average_series(std::vector<double>{}, 5).empty());
  CHECK_THROWS(average_series(x, 0));
}

TEST_CASE("policy evaluation") {
  const PbcnModel m = apoptosis();
  const PolicyFn zero = [](std::span<const std::uint8_t>) { return std::uint64_t{0}; };

  const EvalReport none = evaluate_policy(m, apoptosis_cost(), RewardMap{}, zero, 10, 0, 1);
  CHECK(none.reward.empty());

  const EvalReport a = evaluate_policy(m, apoptosis_cost(), RewardMap{}, zero, 400, 15, 3, 1);
  const EvalReport b = evaluate_policy(m, apoptosis_cost(), RewardMap{}, zero, 400, 15, 3, 4);
  CHECK(a.reward == b.reward);
  CHECK(a.baseline_reward == b.baseline_reward);
  CHECK(a.node_mean == b.node_mean);
  REQUIRE(a.reward.size() == 15);
  CHECK(a.nodes == std::vector<int>{2});
  CHECK(a.inputs == std::vector<int>{1});
  for (double u : a.input_mean[0]) CHECK(u == 0.0);

  const double se = std::sqrt(0.25 / 400);
  for (double u : a.baseline_input_mean[0]) CHECK(std::abs(u - 0.5) <= 4 * se);
  // Both arms start from the same states.
  CHECK(a.node_mean[0][0] == a.baseline_node_mean[0][0]);

  const std::vector<std::uint64_t> pol = kApoptosisPolicy;
  const PolicyFn opt = [&](std::span<const std::uint8_t> x) { return pol[to_decimal(x)]; };
  const EvalReport o = evaluate_policy(m, apoptosis_cost(), RewardMap{}, opt, 400, 15, 3);
  double mean_opt = 0.0, mean_base = 0.0;
  for (int t = 0; t < 15; ++t) {
    mean_opt += o.reward[static_cast<std::size_t>(t)] / 15;
    mean_base += o.baseline_reward[static_cast<std::size_t>(t)] / 15;
  }
  CHECK(mean_opt > mean_base);
}

TEST_CASE("csv round trips") {
  TempDir dir;
  Eigen::MatrixXd q(4, 2);
  q << 0.1, 1.0 / 3.0, -2.0, 5.0, 1e-17, 7.25, 0.0, -0.5;
  write_q_csv(dir.path / "q.csv", q);
  CHECK(read_q_csv(dir.path / "q.csv", 4, 2) == q);
  CHECK_THROWS(read_q_csv(dir.path / "q.csv", 8, 2));

  const std::vector<std::uint64_t> pol{1, 0, 3, 2};
  write_policy_csv(dir.path / "p.csv", pol);
  CHECK(read_policy_csv(dir.path / "p.csv") == pol);
  CHECK(slurp(dir.path / "p.csv").rfind("state_dec,action_dec\n", 0) == 0);

  {
    std::ofstream dup(dir.path / "dup.csv");
    dup << "state_dec,action_dec,q\n0,0,1\n0,0,2\n";
  }
  CHECK_THROWS(read_q_csv(dir.path / "dup.csv", 1, 1));

  const std::vector<double> rewards{0.0, 1.0, 0.0, 1.0};
  write_rewards_csv(dir.path / "r.csv", rewards, 2);
  CHECK(slurp(dir.path / "r.csv").rfind("episode,reward,smoothed\n", 0) == 0);

  std::ostringstream dist;
  write_distribution_csv(dist, apoptosis());
  CHECK(dist.str().find("0,1,5,0.8") != std::string::npos);

  std::ostringstream bad;
  CsvWriter w(bad, {"a", "b"});
  CHECK_THROWS(w.row({"1"}));
}

TEST_CASE("policy iteration run writes the optimal policy") {
  TempDir dir;
  ExperimentConfig c = load_config(config_dir() / "example1-pi.cfg");
  c.output = dir.path / "pi";
  c.eval_reps = 50;
  const RunSummary s = run_experiment(c);
  for (const char* f : {"q_star.csv", "v_star.csv", "policy.csv", "eval.csv", "manifest.cfg"}) {
    CHECK(fs::exists(c.output / f));
  }
  CHECK(read_policy_csv(c.output / "policy.csv") == kApoptosisPolicy);
}

TEST_CASE("a run can be repeated from its manifest") {
  TempDir dir;
  ExperimentConfig c = parse_config(kQlConfig, model_dir());
  c.output = dir.path / "first";
  const RunSummary s = run_experiment(c);
  REQUIRE(s.final_error_q.has_value());

  ExperimentConfig again = load_config(c.output / "manifest.cfg");
  again.output = dir.path / "second";
  run_experiment(again);
  CHECK(slurp(c.output / "qtable.csv") == slurp(again.output / "qtable.csv"));
  CHECK(slurp(c.output / "metrics.csv") == slurp(again.output / "metrics.csv"));
}

TEST_CASE("exact solving a large model is refused") {
  ExperimentConfig c = load_config(config_dir() / "example2-ddqn-desk.cfg");
  c.algorithm = Algorithm::kPi;
  c.output = fs::temp_directory_path() / "pbcn-never-written";
  CHECK_THROWS_AS(run_experiment(c), ConfigError);
}
