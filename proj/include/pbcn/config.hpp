#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "pbcn/ddqn.hpp"
#include "pbcn/env.hpp"
#include "pbcn/qlearn.hpp"
#include "pbcn/scale.hpp"

namespace pbcn {

enum class Algorithm { kQl, kDdqn, kPi };

const char* to_string(Algorithm a);

// Experiment file grammar. One `key = value` per line; `#` starts a comment;
// `[section]` switches the current section. A key may also be written
// `section.key` anywhere. Keys before the first header are top-level.
//
//   seed = <uint>                 output = <dir>
//   [model]  path = <file>        ram_budget_gb = <real>
//   [cost]   node = <i> <target> <weight>      (repeatable)
//            input = <i> <target> <weight>     (repeatable)
//   [reward] c1 = <real < 0>      c2 = <real>
//   [algo]   kind = ql | ddqn | pi
//            gamma episodes steps omega delta batch capacity hidden
//            hidden_layers lr tau init (default | paper)
//            metric_every oracle (true | false) smooth_window
//   [eval]   reps = <int>         horizon = <int>
//
// A relative model path is resolved against the directory of the file.
struct ExperimentConfig {
  std::filesystem::path model_path;
  double ram_budget_gb = kDefaultRamBudgetGb;
  CostSpec cost;
  RewardMap reward;

  Algorithm algorithm = Algorithm::kQl;
  double gamma = 0.9;
  int episodes = 20000;
  int steps = 15;
  double omega = 0.6;
  double delta = 8e-6;
  int batch = 128;
  int capacity = 50000;
  int hidden = 2;
  int hidden_layers = 1;
  double lr = 0.05;
  double tau = 0.999;
  InitMode init = InitMode::kScaled;

  std::uint64_t seed = 1;
  int metric_every = 100;
  bool oracle = false;
  int smooth_window = 1000;

  int eval_reps = 0;
  int eval_horizon = 15;

  std::filesystem::path output = "out";

  QlSchedule ql_schedule() const;
  DdqnParams ddqn_params() const;

  // Range checks shared by every algorithm; throws ConfigError.
  void validate() const;
};

// Throws ConfigError ("line L: ...") for unknown keys, bad values and
// repeated scalar keys.
ExperimentConfig parse_config(std::string_view text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical text accepted by parse_config; the model path is written as given
// (absolute after loading from a file).
std::string config_text(const ExperimentConfig& config);

}  // namespace pbcn
