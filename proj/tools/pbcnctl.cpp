#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "pbcn/config.hpp"
#include "pbcn/ddqn.hpp"
#include "pbcn/errors.hpp"
#include "pbcn/exact.hpp"
#include "pbcn/format.hpp"
#include "pbcn/harness.hpp"
#include "pbcn/parser.hpp"
#include "pbcn/scale.hpp"

namespace fs = std::filesystem;
using namespace pbcn;

namespace {

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool oracle = false;
  std::string out;
  std::string init;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_init) {
  cmd->add_option("--config", f.config, "experiment config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "override the config seed");
  cmd->add_flag("--oracle", f.oracle, "attach ErrorQ/Errorpi series (small models)");
  cmd->add_option("--out", f.out, "output directory (overrides the config)");
  if (with_init) {
    cmd->add_option("--init", f.init, "parameter initialisation")->check(CLI::IsMember({"default", "paper"}));
  }
}

ExperimentConfig apply(const RunFlags& f) {
  ExperimentConfig c = load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.oracle) c.oracle = true;
  if (!f.out.empty()) c.output = f.out;
  if (f.init == "paper") c.init = InitMode::kUnit;
  if (f.init == "default") c.init = InitMode::kScaled;
  return c;
}

void report(const RunSummary& s) {
  std::cout << "output: " << s.output.string() << '\n';
  for (const auto& a : s.artifacts) std::cout << "  " << a << '\n';
  std::cout << "train_seconds: " << format_double(s.train_seconds) << '\n';
  if (s.eval_seconds > 0) std::cout << "eval_seconds: " << format_double(s.eval_seconds) << '\n';
  if (s.final_avg_reward) std::cout << "final avg_reward: " << format_double(*s.final_avg_reward) << '\n';
  if (s.final_error_q) std::cout << "final error_q: " << format_double(*s.final_error_q) << '\n';
  if (s.final_error_pi) std::cout << "final error_pi: " << format_double(*s.final_error_pi) << '\n';
}

std::size_t data_rows(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t n = 0;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (!trim(line).empty()) ++n;
  }
  return n;
}

// First of the candidate tables present in `dir`.
fs::path find_q_file(const fs::path& dir) {
  for (const char* name : {"q_star.csv", "qtable.csv", "qnetwork.csv"}) {
    if (fs::exists(dir / name)) return dir / name;
  }
  throw Error("no q_star.csv, qtable.csv or qnetwork.csv in " + dir.string());
}

int compare(const fs::path& reference, const fs::path& candidate) {
  const auto ref_policy = read_policy_csv(reference / "policy.csv");
  const std::uint64_t states = ref_policy.size();
  const fs::path ref_q_path = find_q_file(reference);
  const std::uint64_t actions = data_rows(ref_q_path) / std::max<std::uint64_t>(states, 1);
  const int inputs = static_cast<int>(std::lround(std::log2(static_cast<double>(actions))));
  if (states == 0 || (std::uint64_t{1} << inputs) != actions) {
    throw Error("reference table is not 2^n x 2^m");
  }

  Solution oracle;
  oracle.q = read_q_csv(ref_q_path, states, actions);
  oracle.policy = ref_policy;
  oracle.value.resize(static_cast<Eigen::Index>(states));
  for (std::uint64_t s = 0; s < states; ++s) {
    oracle.value(static_cast<Eigen::Index>(s)) =
        oracle.q(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(ref_policy[s]));
  }

  const auto cand_policy = read_policy_csv(candidate / "policy.csv");
  if (cand_policy.size() != states) throw Error("candidate policy covers a different state count");
  const Eigen::MatrixXd cand_q = read_q_csv(find_q_file(candidate), states, actions);
  std::cout << "error_q," << format_double(error_q(oracle, cand_q)) << '\n'
            << "error_pi," << format_double(error_pi(oracle, cand_policy, inputs)) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal control of probabilistic Boolean control networks"};
  app.require_subcommand(1);

  std::string model_path;
  auto* validate = app.add_subcommand("validate", "parse a model file and print a summary");
  validate->add_option("model", model_path, "model file")->required()->check(CLI::ExistingFile);

  struct {
    std::string model, config, out;
    std::uint64_t seed = 1;
    int steps = 15;
    std::optional<std::uint64_t> start, action;
    bool distribution = false;
  } sim;
  auto* simulate = app.add_subcommand("simulate", "sample a trajectory or enumerate transitions");
  simulate->add_option("--model", sim.model, "model file")->check(CLI::ExistingFile);
  simulate->add_option("--config", sim.config, "experiment config (model and cost)")->check(CLI::ExistingFile);
  simulate->add_option("--seed", sim.seed, "rng seed");
  simulate->add_option("--steps", sim.steps, "trajectory length")->check(CLI::NonNegativeNumber);
  simulate->add_option("--start", sim.start, "initial state decimal (default: uniform)");
  simulate->add_option("--action", sim.action, "constant action decimal (default: uniform)");
  simulate->add_flag("--distribution", sim.distribution, "emit the exact transition table");
  simulate->add_option("--out", sim.out, "output directory (default: stdout)");

  RunFlags solve_flags, ql_flags, ddqn_flags, run_flags;
  auto* solve = app.add_subcommand("solve", "policy iteration on a small model");
  add_run_flags(solve, solve_flags, false);
  auto* train_ql = app.add_subcommand("train-ql", "tabular Q-learning");
  add_run_flags(train_ql, ql_flags, false);
  auto* train_ddqn = app.add_subcommand("train-ddqn", "double deep Q-network");
  add_run_flags(train_ddqn, ddqn_flags, true);
  auto* run = app.add_subcommand("run", "run the algorithm named by algo.kind");
  add_run_flags(run, run_flags, true);

  struct {
    std::string config, policy, out;
    std::optional<std::uint64_t> seed;
    std::optional<int> reps, horizon;
  } ev;
  auto* evaluate = app.add_subcommand("evaluate", "roll out a saved policy against the random baseline");
  evaluate->add_option("--config", ev.config, "experiment config")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--policy", ev.policy, "policy.csv or a network checkpoint")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--seed", ev.seed, "override the config seed");
  evaluate->add_option("--reps", ev.reps, "rollouts (default: eval.reps, else 1000)");
  evaluate->add_option("--horizon", ev.horizon, "steps per rollout (default: eval.horizon)");
  evaluate->add_option("--out", ev.out, "output directory (default: stdout)");

  std::string reference, candidate;
  auto* cmp = app.add_subcommand("compare", "ErrorQ and Errorpi of a candidate run against a reference run");
  cmp->add_option("reference", reference, "directory with policy.csv and q_star.csv")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("candidate", candidate, "directory with policy.csv and a q table")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      const PbcnModel m = load_pbcn(model_path);
      std::cout << "name: " << m.name() << '\n'
                << "nodes: " << m.nodes() << '\n'
                << "inputs: " << m.inputs() << '\n'
                << "deterministic: " << (m.deterministic() ? "yes" : "no") << '\n'
                << "selection_count: " << m.selection_count() << '\n'
                << "scale: " << to_string(classify_scale(m.nodes(), m.inputs())) << '\n';
      return 0;
    }

    if (*simulate) {
      if (sim.model.empty() == sim.config.empty()) {
        throw ConfigError("simulate needs exactly one of --model and --config");
      }
      std::optional<ExperimentConfig> cfg;
      if (!sim.config.empty()) cfg = load_config(sim.config);
      const PbcnModel m = load_pbcn(cfg ? cfg->model_path : fs::path(sim.model));
      std::ofstream file;
      if (!sim.out.empty()) {
        fs::create_directories(sim.out);
        file.open(fs::path(sim.out) / (sim.distribution ? "distribution.csv" : "trajectory.csv"));
        if (!file) throw Error("cannot write into " + sim.out);
      }
      std::ostream& out = sim.out.empty() ? std::cout : file;
      if (sim.distribution) {
        write_distribution_csv(out, m);
        return 0;
      }
      Environment env(m, cfg ? cfg->cost : CostSpec{}, cfg ? cfg->reward : RewardMap{},
                      derive_rng(sim.seed, 0));
      if (sim.start) {
        env.reset(from_decimal(*sim.start, m.nodes()));
      } else {
        env.reset();
      }
      Rng agent = derive_rng(sim.seed, 1);
      if (sim.action && *sim.action >= m.action_count()) throw ConfigError("--action out of range");
      out << "step,state_dec,action_dec,reward,next_state_dec\n";
      for (int t = 0; t < sim.steps; ++t) {
        const std::uint64_t s = to_decimal(env.state());
        const std::uint64_t a = sim.action ? *sim.action : uniform_index(agent, m.action_count());
        const StepResult r = env.step(a);
        out << t << ',' << s << ',' << a << ',' << format_double(r.reward) << ','
            << to_decimal(r.next_state) << '\n';
      }
      return 0;
    }

    auto launch = [](ExperimentConfig c, std::optional<Algorithm> kind) {
      if (kind) c.algorithm = *kind;
      report(run_experiment(c));
      return 0;
    };
    if (*solve) return launch(apply(solve_flags), Algorithm::kPi);
    if (*train_ql) return launch(apply(ql_flags), Algorithm::kQl);
    if (*train_ddqn) return launch(apply(ddqn_flags), Algorithm::kDdqn);
    if (*run) return launch(apply(run_flags), std::nullopt);

    if (*evaluate) {
      ExperimentConfig c = load_config(ev.config);
      if (ev.seed) c.seed = *ev.seed;
      const int reps = ev.reps.value_or(c.eval_reps > 0 ? c.eval_reps : 1000);
      const int horizon = ev.horizon.value_or(c.eval_horizon);
      const PbcnModel m = load_pbcn(c.model_path);
      PolicyFn policy;
      std::vector<std::uint64_t> table;
      Mlp<double> net;
      if (fs::path(ev.policy).extension() == ".csv") {
        table = read_policy_csv(ev.policy);
        if (table.size() != m.state_count()) throw Error("policy does not cover every state");
        for (std::uint64_t a : table) {
          if (a >= m.action_count()) throw Error("policy action out of range");
        }
        policy = [&table](std::span<const std::uint8_t> x) { return table[to_decimal(x)]; };
      } else {
        net = load_checkpoint(fs::path(ev.policy));
        if (net.inputs() != m.nodes() || static_cast<std::uint64_t>(net.outputs()) != m.action_count()) {
          throw Error("checkpoint shape does not match the model");
        }
        policy = [&net](std::span<const std::uint8_t> x) { return greedy_action(net, x); };
      }
      const EvalReport r = evaluate_policy(m, c.cost, c.reward, policy, reps, horizon, c.seed);
      if (ev.out.empty()) {
        write_eval_csv(std::cout, r);
      } else {
        fs::create_directories(ev.out);
        write_eval_csv(fs::path(ev.out) / "eval.csv", r);
        std::cout << "wrote " << (fs::path(ev.out) / "eval.csv").string() << '\n';
      }
      return 0;
    }

    if (*cmp) return compare(reference, candidate);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
