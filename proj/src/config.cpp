#include "pbcn/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "pbcn/errors.hpp"
#include "pbcn/format.hpp"

namespace pbcn {

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kQl: return "ql";
    case Algorithm::kDdqn: return "ddqn";
    case Algorithm::kPi: return "pi";
  }
  return "?";
}

QlSchedule ExperimentConfig::ql_schedule() const {
  QlSchedule s;
  s.gamma = gamma;
  s.omega = omega;
  s.delta = delta;
  s.episodes = episodes;
  s.steps = steps;
  return s;
}

DdqnParams ExperimentConfig::ddqn_params() const {
  DdqnParams p;
  p.gamma = gamma;
  p.episodes = episodes;
  p.steps = steps;
  p.batch = batch;
  p.capacity = capacity;
  p.hidden = hidden;
  p.hidden_layers = hidden_layers;
  p.lr = lr;
  p.tau = tau;
  p.delta = delta;
  p.init = init;
  return p;
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(!model_path.empty(), "model.path is required");
  require(ram_budget_gb >= 0.0, "model.ram_budget_gb must be >= 0");
  require(gamma >= 0.0 && gamma < 1.0, "algo.gamma must lie in [0, 1)");
  require(episodes >= 1, "algo.episodes must be >= 1");
  require(steps >= 1, "algo.steps must be >= 1");
  require(omega > 0.5 && omega <= 1.0, "algo.omega must lie in (0.5, 1]");
  require(delta >= 0.0 && delta <= 1.0, "algo.delta must lie in [0, 1]");
  require(batch >= 1, "algo.batch must be >= 1");
  require(capacity >= batch, "algo.capacity must be >= algo.batch");
  require(hidden >= 1, "algo.hidden must be >= 1");
  require(hidden_layers >= 0, "algo.hidden_layers must be >= 0");
  require(lr > 0.0 && lr <= 1.0, "algo.lr must lie in (0, 1]");
  require(tau >= 0.0 && tau <= 1.0, "algo.tau must lie in [0, 1]");
  require(metric_every >= 1, "algo.metric_every must be >= 1");
  require(smooth_window >= 1, "algo.smooth_window must be >= 1");
  require(eval_reps >= 0, "eval.reps must be >= 0");
  require(eval_horizon >= 0, "eval.horizon must be >= 0");
}

namespace {

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

struct KeySpec {
  Setter set;
  bool repeatable = false;
};

double to_real(const std::string& v) {
  const auto d = parse_double(v);
  if (!d) throw ConfigError("expected a number, found '" + v + "'");
  return *d;
}

long long to_int(const std::string& v) {
  const auto i = parse_integer(v);
  if (!i) throw ConfigError("expected an integer, found '" + v + "'");
  return *i;
}

int to_small_int(const std::string& v) {
  const long long i = to_int(v);
  if (i < -2147483647LL || i > 2147483647LL) throw ConfigError("integer out of range: " + v);
  return static_cast<int>(i);
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected true or false, found '" + v + "'");
}

CostTarget to_target(const std::string& v) {
  std::istringstream in(v);
  std::string index, target, weight, extra;
  if (!(in >> index >> target >> weight) || (in >> extra)) {
    throw ConfigError("expected '<index> <target> <weight>', found '" + v + "'");
  }
  const long long t = to_int(target);
  if (t != 0 && t != 1) throw ConfigError("target must be 0 or 1, found '" + target + "'");
  return {to_small_int(index), static_cast<std::uint8_t>(t), to_real(weight)};
}

const std::map<std::string, KeySpec>& key_table() {
  static const std::map<std::string, KeySpec> table = {
      {"seed", {[](ExperimentConfig& c, const std::string& v) {
         const long long s = to_int(v);
         if (s < 0) throw ConfigError("seed must be >= 0");
         c.seed = static_cast<std::uint64_t>(s);
       }}},
      {"output", {[](ExperimentConfig& c, const std::string& v) { c.output = v; }}},
      {"model.path", {[](ExperimentConfig& c, const std::string& v) { c.model_path = v; }}},
      {"model.ram_budget_gb", {[](ExperimentConfig& c, const std::string& v) { c.ram_budget_gb = to_real(v); }}},
      {"cost.node", {[](ExperimentConfig& c, const std::string& v) { c.cost.nodes.push_back(to_target(v)); }, true}},
      {"cost.input", {[](ExperimentConfig& c, const std::string& v) { c.cost.inputs.push_back(to_target(v)); }, true}},
      {"reward.c1", {[](ExperimentConfig& c, const std::string& v) { c.reward = RewardMap(to_real(v), c.reward.c2()); }}},
      {"reward.c2", {[](ExperimentConfig& c, const std::string& v) { c.reward = RewardMap(c.reward.c1(), to_real(v)); }}},
      {"algo.kind", {[](ExperimentConfig& c, const std::string& v) {
         if (v == "ql") c.algorithm = Algorithm::kQl;
         else if (v == "ddqn") c.algorithm = Algorithm::kDdqn;
         else if (v == "pi") c.algorithm = Algorithm::kPi;
         else throw ConfigError("algo.kind must be ql, ddqn or pi, found '" + v + "'");
       }}},
      {"algo.gamma", {[](ExperimentConfig& c, const std::string& v) { c.gamma = to_real(v); }}},
      {"algo.episodes", {[](ExperimentConfig& c, const std::string& v) { c.episodes = to_small_int(v); }}},
      {"algo.steps", {[](ExperimentConfig& c, const std::string& v) { c.steps = to_small_int(v); }}},
      {"algo.omega", {[](ExperimentConfig& c, const std::string& v) { c.omega = to_real(v); }}},
      {"algo.delta", {[](ExperimentConfig& c, const std::string& v) { c.delta = to_real(v); }}},
      {"algo.batch", {[](ExperimentConfig& c, const std::string& v) { c.batch = to_small_int(v); }}},
      {"algo.capacity", {[](ExperimentConfig& c, const std::string& v) { c.capacity = to_small_int(v); }}},
      {"algo.hidden", {[](ExperimentConfig& c, const std::string& v) { c.hidden = to_small_int(v); }}},
      {"algo.hidden_layers", {[](ExperimentConfig& c, const std::string& v) { c.hidden_layers = to_small_int(v); }}},
      {"algo.lr", {[](ExperimentConfig& c, const std::string& v) { c.lr = to_real(v); }}},
      {"algo.tau", {[](ExperimentConfig& c, const std::string& v) { c.tau = to_real(v); }}},
      {"algo.init", {[](ExperimentConfig& c, const std::string& v) {
         if (v == "default") c.init = InitMode::kScaled;
         else if (v == "paper") c.init = InitMode::kUnit;
         else throw ConfigError("algo.init must be default or paper, found '" + v + "'");
       }}},
      {"algo.metric_every", {[](ExperimentConfig& c, const std::string& v) { c.metric_every = to_small_int(v); }}},
      {"algo.oracle", {[](ExperimentConfig& c, const std::string& v) { c.oracle = to_bool(v); }}},
      {"algo.smooth_window", {[](ExperimentConfig& c, const std::string& v) { c.smooth_window = to_small_int(v); }}},
      {"eval.reps", {[](ExperimentConfig& c, const std::string& v) { c.eval_reps = to_small_int(v); }}},
      {"eval.horizon", {[](ExperimentConfig& c, const std::string& v) { c.eval_horizon = to_small_int(v); }}},
  };
  return table;
}

std::string accepted_keys() {
  std::string out;
  for (const auto& [key, spec] : key_table()) {
    if (!out.empty()) out += ", ";
    out += key;
  }
  return out;
}

const std::set<std::string> kSections = {"model", "cost", "reward", "algo", "eval"};

}  // namespace

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  ExperimentConfig config;
  std::string section;
  std::set<std::string> seen;
  std::istringstream lines{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(lines, raw)) {
    ++line_no;
    const std::string prefix = "line " + std::to_string(line_no) + ": ";
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(prefix + "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!kSections.count(section)) {
        throw ConfigError(prefix + "unknown section [" + section +
                          "]; accepted sections: model, cost, reward, algo, eval");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(prefix + "expected 'key = value'");
    std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.find('.') == std::string::npos && !section.empty()) key = section + "." + key;

    const auto it = key_table().find(key);
    if (it == key_table().end()) {
      throw ConfigError(prefix + "unknown key '" + key + "'; accepted keys: " + accepted_keys());
    }
    if (value.empty()) throw ConfigError(prefix + "missing value for '" + key + "'");
    if (!it->second.repeatable && !seen.insert(key).second) {
      throw ConfigError(prefix + "duplicate key '" + key + "'");
    }
    try {
      it->second.set(config, value);
    } catch (const Error& e) {
      throw ConfigError(prefix + key + ": " + e.what());
    }
  }

  if (!config.model_path.empty() && config.model_path.is_relative() && !base_dir.empty()) {
    config.model_path = (base_dir / config.model_path).lexically_normal();
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_config(text.str(), std::filesystem::absolute(path).parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string config_text(const ExperimentConfig& c) {
  std::ostringstream out;
  auto target = [&](const char* key, const CostTarget& t) {
    out << key << " = " << t.index << ' ' << int{t.target} << ' ' << format_double(t.weight) << '\n';
  };
  out << "seed = " << c.seed << '\n'
      << "output = " << c.output.string() << "\n\n"
      << "[model]\n"
      << "path = " << c.model_path.string() << '\n'
      << "ram_budget_gb = " << format_double(c.ram_budget_gb) << "\n\n"
      << "[cost]\n";
  for (const CostTarget& t : c.cost.nodes) target("node", t);
  for (const CostTarget& t : c.cost.inputs) target("input", t);
  out << "\n[reward]\n"
      << "c1 = " << format_double(c.reward.c1()) << '\n'
      << "c2 = " << format_double(c.reward.c2()) << "\n\n"
      << "[algo]\n"
      << "kind = " << to_string(c.algorithm) << '\n'
      << "gamma = " << format_double(c.gamma) << '\n'
      << "episodes = " << c.episodes << '\n'
      << "steps = " << c.steps << '\n'
      << "omega = " << format_double(c.omega) << '\n'
      << "delta = " << format_double(c.delta) << '\n'
      << "batch = " << c.batch << '\n'
      << "capacity = " << c.capacity << '\n'
      << "hidden = " << c.hidden << '\n'
      << "hidden_layers = " << c.hidden_layers << '\n'
      << "lr = " << format_double(c.lr) << '\n'
      << "tau = " << format_double(c.tau) << '\n'
      << "init = " << (c.init == InitMode::kUnit ? "paper" : "default") << '\n'
      << "metric_every = " << c.metric_every << '\n'
      << "oracle = " << (c.oracle ? "true" : "false") << '\n'
      << "smooth_window = " << c.smooth_window << "\n\n"
      << "[eval]\n"
      << "reps = " << c.eval_reps << '\n'
      << "horizon = " << c.eval_horizon << '\n';
  return out.str();
}

}  // namespace pbcn
