#include "pbcn/harness.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>
#include <thread>

#include "pbcn/ddqn.hpp"
#include "pbcn/errors.hpp"
#include "pbcn/exact.hpp"
#include "pbcn/format.hpp"
#include "pbcn/parser.hpp"
#include "pbcn/qlearn.hpp"
#include "pbcn/scale.hpp"

namespace pbcn {
namespace {

// Per-rollout sample: values[t * width + k], k = 0 reward, then nodes, then inputs.
struct Rollout {
  std::vector<double> policy;
  std::vector<double> baseline;
};

enum Stream : std::uint64_t { kStart = 10, kPolicyEnv = 11, kBaselineEnv = 12, kBaselineAction = 13 };

void run_rollout(Environment& env, const State& start, int horizon,
                 const std::vector<int>& nodes, const std::vector<int>& inputs,
                 const std::function<std::uint64_t(const State&)>& choose,
                 std::vector<double>& out) {
  const std::size_t width = 1 + nodes.size() + inputs.size();
  out.assign(static_cast<std::size_t>(horizon) * width, 0.0);
  env.reset(start);
  for (int t = 0; t < horizon; ++t) {
    const State x = env.state();
    const Action u = from_decimal(choose(x), env.model().inputs());
    double* row = out.data() + static_cast<std::size_t>(t) * width;
    std::size_t k = 1;
    for (int i : nodes) row[k++] = x[static_cast<std::size_t>(i - 1)];
    for (int j : inputs) row[k++] = u[static_cast<std::size_t>(j - 1)];
    row[0] = env.step(u).reward;
  }
}

std::vector<int> traced(const std::vector<CostTarget>& targets) {
  std::vector<int> out;
  for (const CostTarget& t : targets) {
    if (std::find(out.begin(), out.end(), t.index) == out.end()) out.push_back(t.index);
  }
  return out;
}

std::string cell(double v) { return format_double(v); }
std::string cell(std::uint64_t v) { return std::to_string(v); }
std::string cell(int v) { return std::to_string(v); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

EvalReport evaluate_policy(const PbcnModel& model, const CostSpec& spec,
                           const RewardMap& map, const PolicyFn& policy,
                           int reps, int horizon, std::uint64_t seed,
                           unsigned threads) {
  EvalReport report;
  report.reps = std::max(reps, 0);
  report.horizon = std::max(horizon, 0);
  report.nodes = traced(spec.nodes);
  report.inputs = traced(spec.inputs);
  spec.validate(model.nodes(), model.inputs());

  const std::size_t width = 1 + report.nodes.size() + report.inputs.size();
  std::vector<Rollout> rollouts(static_cast<std::size_t>(report.reps));

  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t k = first; k < rollouts.size(); k += stride) {
      Rng start_rng = derive_rng(seed, kStart, k);
      const State start = from_decimal(uniform_index(start_rng, model.state_count()), model.nodes());

      Environment env(model, spec, map, derive_rng(seed, kPolicyEnv, k));
      run_rollout(env, start, report.horizon, report.nodes, report.inputs,
                  [&](const State& x) { return policy(x); }, rollouts[k].policy);

      Environment base(model, spec, map, derive_rng(seed, kBaselineEnv, k));
      Rng action_rng = derive_rng(seed, kBaselineAction, k);
      run_rollout(base, start, report.horizon, report.nodes, report.inputs,
                  [&](const State&) { return uniform_index(action_rng, model.action_count()); },
                  rollouts[k].baseline);
    }
  };

  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(rollouts.size(), 1)));
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (std::thread& t : pool) t.join();
  }

  // Summed in rollout order so the means are independent of the thread count.
  std::vector<double> sum(static_cast<std::size_t>(report.horizon) * width, 0.0);
  std::vector<double> base_sum(sum.size(), 0.0);
  for (const Rollout& r : rollouts) {
    for (std::size_t i = 0; i < sum.size(); ++i) {
      sum[i] += r.policy[i];
      base_sum[i] += r.baseline[i];
    }
  }
  const double denom = report.reps > 0 ? report.reps : 1.0;
  auto column = [&](const std::vector<double>& s, std::size_t k) {
    std::vector<double> out(static_cast<std::size_t>(report.horizon));
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = s[t * width + k] / denom;
    return out;
  };
  report.reward = column(sum, 0);
  report.baseline_reward = column(base_sum, 0);
  std::size_t k = 1;
  for (std::size_t i = 0; i < report.nodes.size(); ++i, ++k) {
    report.node_mean.push_back(column(sum, k));
    report.baseline_node_mean.push_back(column(base_sum, k));
  }
  for (std::size_t j = 0; j < report.inputs.size(); ++j, ++k) {
    report.input_mean.push_back(column(sum, k));
    report.baseline_input_mean.push_back(column(base_sum, k));
  }
  return report;
}

std::vector<double> average_series(std::span<const double> values, int window) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  const auto n = static_cast<std::ptrdiff_t>(values.size());
  const std::ptrdiff_t behind = (window - 1) / 2;
  const std::ptrdiff_t ahead = window / 2;
  std::vector<double> out(values.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - behind);
    const std::ptrdiff_t hi = std::min(n - 1, i + ahead);
    double total = 0.0;
    for (std::ptrdiff_t j = lo; j <= hi; ++j) total += values[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = total / static_cast<double>(hi - lo + 1);
  }
  return out;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : label_(path.string()), file_(path), out_(&file_), columns_(header.size()) {
  if (!file_) throw Error("cannot write " + label_);
  row(header);
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header)
    : label_("stream"), out_(&out), columns_(header.size()) {
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::logic_error("CSV row width mismatch in " + label_);
  for (std::size_t i = 0; i < cells.size(); ++i) *out_ << (i ? "," : "") << cells[i];
  *out_ << '\n';
  if (!*out_) throw Error("write failed: " + label_);
}

void write_q_csv(const std::filesystem::path& path, const Eigen::MatrixXd& q) {
  CsvWriter csv(path, {"state_dec", "action_dec", "q"});
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    for (Eigen::Index a = 0; a < q.cols(); ++a) {
      csv.row({cell(static_cast<std::uint64_t>(s)), cell(static_cast<std::uint64_t>(a)), cell(q(s, a))});
    }
  }
}

void write_policy_csv(const std::filesystem::path& path, std::span<const std::uint64_t> policy) {
  CsvWriter csv(path, {"state_dec", "action_dec"});
  for (std::size_t s = 0; s < policy.size(); ++s) csv.row({cell(std::uint64_t{s}), cell(policy[s])});
}

void write_values_csv(const std::filesystem::path& path, const Eigen::VectorXd& value) {
  CsvWriter csv(path, {"state_dec", "value"});
  for (Eigen::Index s = 0; s < value.size(); ++s) {
    csv.row({cell(static_cast<std::uint64_t>(s)), cell(value(s))});
  }
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const EpisodeMetric> metrics) {
  CsvWriter csv(path, {"episode", "avg_reward", "error_q", "error_pi"});
  for (const EpisodeMetric& m : metrics) {
    csv.row({cell(m.episode), cell(m.avg_reward), m.error_q ? cell(*m.error_q) : "",
             m.error_pi ? cell(*m.error_pi) : ""});
  }
}

void write_rewards_csv(const std::filesystem::path& path, std::span<const double> rewards,
                       int window, std::span<const double> losses) {
  const bool with_loss = !losses.empty();
  if (with_loss && losses.size() != rewards.size()) {
    throw std::invalid_argument("reward and loss series differ in length");
  }
  std::vector<std::string> header{"episode", "reward", "smoothed"};
  if (with_loss) header.push_back("loss");
  CsvWriter csv(path, header);
  const std::vector<double> smooth = average_series(rewards, window);
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    std::vector<std::string> r{cell(std::uint64_t{i}), cell(rewards[i]), cell(smooth[i])};
    if (with_loss) r.push_back(cell(losses[i]));
    csv.row(r);
  }
}

void write_eval_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_eval_csv(out, report);
}

void write_eval_csv(std::ostream& out, const EvalReport& report) {
  std::vector<std::string> header{"step", "reward", "baseline_reward"};
  for (int i : report.nodes) {
    header.push_back("x" + std::to_string(i));
    header.push_back("baseline_x" + std::to_string(i));
  }
  for (int j : report.inputs) {
    header.push_back("u" + std::to_string(j));
    header.push_back("baseline_u" + std::to_string(j));
  }
  CsvWriter csv(out, header);
  for (int t = 0; t < report.horizon; ++t) {
    const auto ut = static_cast<std::size_t>(t);
    std::vector<std::string> r{cell(t), cell(report.reward[ut]), cell(report.baseline_reward[ut])};
    for (std::size_t i = 0; i < report.nodes.size(); ++i) {
      r.push_back(cell(report.node_mean[i][ut]));
      r.push_back(cell(report.baseline_node_mean[i][ut]));
    }
    for (std::size_t j = 0; j < report.inputs.size(); ++j) {
      r.push_back(cell(report.input_mean[j][ut]));
      r.push_back(cell(report.baseline_input_mean[j][ut]));
    }
    csv.row(r);
  }
}

void write_distribution_csv(std::ostream& out, const PbcnModel& model, std::uint64_t budget) {
  out << "state_dec,action_dec,next_state_dec,prob\n";
  for (std::uint64_t s = 0; s < model.state_count(); ++s) {
    const State x = from_decimal(s, model.nodes());
    for (std::uint64_t a = 0; a < model.action_count(); ++a) {
      const Action u = from_decimal(a, model.inputs());
      for (const auto& [next, p] : transition_distribution(model, x, u, budget)) {
        out << s << ',' << a << ',' << next << ',' << format_double(p) << '\n';
      }
    }
  }
}

namespace {

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path,
                                                const std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::vector<std::vector<std::string>> rows;
  auto split = [](const std::string& text) {
    std::vector<std::string> cells;
    std::stringstream ss(text);
    std::string c;
    while (std::getline(ss, c, ',')) cells.emplace_back(trim(c));
    if (!text.empty() && text.back() == ',') cells.emplace_back();
    return cells;
  };
  if (!std::getline(in, line) || split(line) != header) {
    throw Error(path.string() + ": expected header " + [&] {
      std::string h;
      for (const auto& c : header) h += (h.empty() ? "" : ",") + c;
      return h;
    }());
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size()) {
      throw Error(path.string() + ": line " + std::to_string(line_no) + " has " +
                  std::to_string(cells.size()) + " cells");
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::uint64_t to_index(const std::string& text, const std::filesystem::path& path) {
  const auto v = parse_integer(text);
  if (!v || *v < 0) throw Error(path.string() + ": bad index '" + text + "'");
  return static_cast<std::uint64_t>(*v);
}

}  // namespace

Eigen::MatrixXd read_q_csv(const std::filesystem::path& path, std::uint64_t states,
                           std::uint64_t actions) {
  Eigen::MatrixXd q(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(actions));
  std::vector<bool> filled(states * actions, false);
  for (const auto& r : read_rows(path, {"state_dec", "action_dec", "q"})) {
    const std::uint64_t s = to_index(r[0], path);
    const std::uint64_t a = to_index(r[1], path);
    const auto v = parse_double(r[2]);
    if (s >= states || a >= actions || !v) throw Error(path.string() + ": bad row " + r[0] + "," + r[1]);
    if (filled[s * actions + a]) throw Error(path.string() + ": duplicate cell " + r[0] + "," + r[1]);
    filled[s * actions + a] = true;
    q(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = *v;
  }
  if (std::find(filled.begin(), filled.end(), false) != filled.end()) {
    throw Error(path.string() + ": table is incomplete");
  }
  return q;
}

std::vector<std::uint64_t> read_policy_csv(const std::filesystem::path& path) {
  const auto rows = read_rows(path, {"state_dec", "action_dec"});
  std::vector<std::uint64_t> policy(rows.size());
  std::vector<bool> filled(rows.size(), false);
  for (const auto& r : rows) {
    const std::uint64_t s = to_index(r[0], path);
    if (s >= rows.size() || filled[s]) throw Error(path.string() + ": states must be 0..N-1 once each");
    filled[s] = true;
    policy[s] = to_index(r[1], path);
  }
  return policy;
}

RunSummary run_experiment(const ExperimentConfig& config) {
  config.validate();
  const PbcnModel model = load_pbcn(config.model_path);
  config.cost.validate(model.nodes(), model.inputs());
  const Scale scale = classify_scale(model.nodes(), model.inputs(), config.ram_budget_gb);

  RunSummary summary;
  summary.output = config.output;
  std::filesystem::create_directories(config.output);
  auto out = [&](const std::string& name) {
    summary.artifacts.push_back(name);
    return config.output / name;
  };

  const auto t_train = std::chrono::steady_clock::now();
  std::optional<Solution> oracle;
  if (config.oracle || config.algorithm == Algorithm::kPi) {
    if (scale != Scale::kSmall) {
      throw ConfigError("exact solution needs a small model; " + std::to_string(model.nodes()) +
                        " nodes and " + std::to_string(model.inputs()) + " inputs are large");
    }
    oracle = policy_iteration(build_exact_mdp(model, config.cost, config.reward, config.gamma));
  }
  TrainingOptions options;
  options.metric_every = config.metric_every;
  if (config.oracle) options.oracle = &*oracle;

  PolicyFn policy;
  std::vector<std::uint64_t> table_policy;
  std::optional<Mlp<double>> network;
  std::vector<EpisodeMetric> metrics;

  switch (config.algorithm) {
    case Algorithm::kPi: {
      summary.train_seconds = seconds_since(t_train);
      write_q_csv(out("q_star.csv"), oracle->q);
      write_values_csv(out("v_star.csv"), oracle->value);
      write_policy_csv(out("policy.csv"), oracle->policy);
      table_policy = oracle->policy;
      break;
    }
    case Algorithm::kQl: {
      QlResult r = train_ql(model, config.cost, config.reward, config.ql_schedule(), config.seed,
                            options, config.ram_budget_gb);
      summary.train_seconds = seconds_since(t_train);
      write_q_csv(out("qtable.csv"), r.table.values());
      write_policy_csv(out("policy.csv"), r.policy);
      write_metrics_csv(out("metrics.csv"), r.metrics);
      write_rewards_csv(out("rewards.csv"), r.episode_rewards, config.smooth_window);
      table_policy = std::move(r.policy);
      metrics = std::move(r.metrics);
      break;
    }
    case Algorithm::kDdqn: {
      DdqnResult r = train_ddqn(model, config.cost, config.reward, config.ddqn_params(),
                                config.seed, options);
      summary.train_seconds = seconds_since(t_train);
      save_checkpoint(r.network, out("network.ckpt"));
      save_checkpoint(r.target, out("target.ckpt"));
      write_metrics_csv(out("metrics.csv"), r.metrics);
      write_rewards_csv(out("rewards.csv"), r.episode_rewards, config.smooth_window,
                        r.episode_losses);
      if (model.nodes() <= kDefaultExactMaxNodes) {
        write_q_csv(out("qnetwork.csv"), network_q_table(r.network, model.nodes()));
        write_policy_csv(out("policy.csv"), network_policy(r.network, model.nodes()));
      }
      network = std::move(r.network);
      metrics = std::move(r.metrics);
      break;
    }
  }

  if (network) {
    policy = [&net = *network](std::span<const std::uint8_t> x) { return greedy_action(net, x); };
  } else {
    policy = [&table_policy](std::span<const std::uint8_t> x) { return table_policy[to_decimal(x)]; };
  }

  if (!metrics.empty()) {
    summary.final_avg_reward = metrics.back().avg_reward;
    summary.final_error_q = metrics.back().error_q;
    summary.final_error_pi = metrics.back().error_pi;
  }

  if (config.eval_reps > 0 && config.eval_horizon > 0) {
    const auto t_eval = std::chrono::steady_clock::now();
    const EvalReport report = evaluate_policy(model, config.cost, config.reward, policy,
                                              config.eval_reps, config.eval_horizon, config.seed);
    summary.eval_seconds = seconds_since(t_eval);
    write_eval_csv(out("eval.csv"), report);
  }

  std::ofstream manifest(out("manifest.cfg"));
  if (!manifest) throw Error("cannot write manifest in " + config.output.string());
  ExperimentConfig echo = config;
  echo.model_path = std::filesystem::absolute(config.model_path);
  manifest << "# run manifest; re-run with: pbcnctl run --config manifest.cfg\n"
           << "# train_seconds = " << format_double(summary.train_seconds) << '\n'
           << "# eval_seconds = " << format_double(summary.eval_seconds) << "\n\n"
           << config_text(echo);
  return summary;
}

}  // namespace pbcn
