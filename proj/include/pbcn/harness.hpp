#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pbcn/config.hpp"
#include "pbcn/env.hpp"
#include "pbcn/model.hpp"

namespace pbcn {

using PolicyFn = std::function<std::uint64_t(std::span<const std::uint8_t>)>;

// Per-step means over all rollouts. Step t averages r(x_t, u_t), x_t(i) and
// u_t(j); `nodes`/`inputs` list the traced 1-based indices (the cost targets).
struct EvalReport {
  int reps = 0;
  int horizon = 0;
  std::vector<double> reward;
  std::vector<double> baseline_reward;
  std::vector<int> nodes;
  std::vector<int> inputs;
  std::vector<std::vector<double>> node_mean;  // [trace][t]
  std::vector<std::vector<double>> input_mean;
  std::vector<std::vector<double>> baseline_node_mean;
  std::vector<std::vector<double>> baseline_input_mean;
};

// Runs `reps` rollouts of `horizon` steps under `policy` and under uniformly
// random actions. Rollout k of both starts from the same uniform initial
// state; dynamics and random actions draw from separate streams derived from
// (seed, k), so results do not depend on `threads` (0 = hardware default).
// `policy` must be safe to call concurrently.
EvalReport evaluate_policy(const PbcnModel& model, const CostSpec& spec,
                           const RewardMap& map, const PolicyFn& policy,
                           int reps, int horizon, std::uint64_t seed,
                           unsigned threads = 0);

// Mean over [i - (window-1)/2, i + window/2], clipped to the series.
std::vector<double> average_series(std::span<const double> values, int window);

// Comma-separated rows with a mandatory header; the width is fixed by the header.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);

 private:
  std::string label_;
  std::ofstream file_;
  std::ostream* out_;
  std::size_t columns_;
};

void write_q_csv(const std::filesystem::path& path, const Eigen::MatrixXd& q);
void write_policy_csv(const std::filesystem::path& path, std::span<const std::uint64_t> policy);
void write_values_csv(const std::filesystem::path& path, const Eigen::VectorXd& value);
void write_metrics_csv(const std::filesystem::path& path, std::span<const EpisodeMetric> metrics);
// episode, reward, smoothed[, loss]
void write_rewards_csv(const std::filesystem::path& path, std::span<const double> rewards,
                       int window, std::span<const double> losses = {});
void write_eval_csv(const std::filesystem::path& path, const EvalReport& report);
void write_eval_csv(std::ostream& out, const EvalReport& report);
// state_dec, action_dec, next_state_dec, prob over every (state, action).
void write_distribution_csv(std::ostream& out, const PbcnModel& model,
                            std::uint64_t budget = kDefaultEnumerationBudget);

// Readers for the files above. The q reader requires every cell of the
// states x actions table exactly once.
Eigen::MatrixXd read_q_csv(const std::filesystem::path& path, std::uint64_t states,
                           std::uint64_t actions);
std::vector<std::uint64_t> read_policy_csv(const std::filesystem::path& path);

struct RunSummary {
  std::filesystem::path output;
  std::vector<std::string> artifacts;
  double train_seconds = 0.0;
  double eval_seconds = 0.0;
  std::optional<double> final_error_q;
  std::optional<double> final_error_pi;
  std::optional<double> final_avg_reward;
};

// Loads the model, trains or solves, writes the artifacts and a manifest
// (`manifest.cfg`, a re-runnable config with timings as comments) into
// config.output. Training metrics get ErrorQ/Errorpi when config.oracle is
// set; that needs a small model.
RunSummary run_experiment(const ExperimentConfig& config);

}  // namespace pbcn
