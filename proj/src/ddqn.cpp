#include "pbcn/ddqn.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>

#include "pbcn/errors.hpp"
#include "pbcn/format.hpp"

namespace pbcn {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::push(const Experience& e) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(e);
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count, Rng& rng) const {
  const std::size_t n = items_.size();
  if (count > n) throw std::invalid_argument("cannot sample more records than stored");
  // Floyd's algorithm: one draw per selected index.
  std::unordered_set<std::size_t> picked;
  picked.reserve(count * 2);
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t j = n - count; j < n; ++j) {
    const std::size_t t = static_cast<std::size_t>(uniform_index(rng, j + 1));
    const std::size_t chosen = picked.insert(t).second ? t : j;
    if (chosen == j) picked.insert(j);
    out.push_back(chosen);
  }
  return out;
}

void DdqnParams::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (episodes < 0 || steps < 1) throw ConfigError("episodes must be >= 0 and steps >= 1");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (capacity < batch) throw ConfigError("replay capacity must be at least the batch size");
  if (hidden < 1 || hidden_layers < 0) throw ConfigError("hidden must be >= 1 and hidden_layers >= 0");
  if (!(lr > 0.0 && lr <= 1.0)) throw ConfigError("lr must lie in (0, 1]");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in [0, 1]");
}

std::vector<int> ddqn_layer_sizes(const PbcnModel& model, const DdqnParams& params) {
  std::vector<int> sizes{model.nodes()};
  for (int l = 0; l < params.hidden_layers; ++l) sizes.push_back(params.hidden);
  sizes.push_back(static_cast<int>(model.action_count()));
  return sizes;
}

std::uint64_t greedy_action(const Mlp<double>& net, std::span<const std::uint8_t> state) {
  return static_cast<std::uint64_t>(argmax(forward(net, state)));
}

namespace {

Eigen::MatrixXd all_states(int nodes) {
  const auto count = static_cast<Eigen::Index>(space_size(nodes));
  Eigen::MatrixXd x(nodes, count);
  for (Eigen::Index s = 0; s < count; ++s) {
    const Bits bits = from_decimal(static_cast<std::uint64_t>(s), nodes);
    for (int i = 0; i < nodes; ++i) x(i, s) = bits[static_cast<std::size_t>(i)];
  }
  return x;
}

void decode_into(std::uint64_t d, int nodes, Eigen::MatrixXd& batch, Eigen::Index col) {
  for (int i = nodes - 1; i >= 0; --i) {
    batch(i, col) = static_cast<double>(d & 1u);
    d >>= 1;
  }
}

}  // namespace

Eigen::MatrixXd network_q_table(const Mlp<double>& net, int nodes) {
  return net.forward(all_states(nodes)).transpose();
}

std::vector<std::uint64_t> network_policy(const Mlp<double>& net, int nodes) {
  const Eigen::MatrixXd q = network_q_table(net, nodes);
  std::vector<std::uint64_t> policy(static_cast<std::size_t>(q.rows()));
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    policy[static_cast<std::size_t>(s)] = static_cast<std::uint64_t>(argmax(q.row(s)));
  }
  return policy;
}

DdqnResult train_ddqn(const PbcnModel& model, const CostSpec& spec,
                      const RewardMap& map, const DdqnParams& params,
                      std::uint64_t seed, const TrainingOptions& options) {
  params.validate();
  Environment env(model, spec, map, derive_rng(seed, 0));
  Rng agent_rng = derive_rng(seed, 1);
  Rng init_rng = derive_rng(seed, 2);
  Rng replay_rng = derive_rng(seed, 3);

  DdqnResult result;
  result.network = Mlp<double>::random(ddqn_layer_sizes(model, params), params.init, init_rng);
  result.target = result.network;
  Mlp<double>& main = result.network;
  Mlp<double>& target = result.target;
  ReplayBuffer replay(static_cast<std::size_t>(params.capacity));

  const int n = model.nodes();
  const auto batch = static_cast<Eigen::Index>(params.batch);
  Eigen::MatrixXd states(n, batch);
  Eigen::MatrixXd next_states(n, batch);
  Eigen::VectorXd rewards(batch);
  std::vector<std::uint64_t> actions(static_cast<std::size_t>(batch));

  std::uint64_t global_step = 0;
  double window_sum = 0.0;
  int window_count = 0;
  for (int ep = 0; ep < params.episodes; ++ep) {
    State x = env.reset();
    double total_reward = 0.0;
    double total_loss = 0.0;
    int updates = 0;
    for (int t = 0; t < params.steps; ++t, ++global_step) {
      const double epsilon = std::pow(1.0 - params.delta, static_cast<double>(global_step));
      const std::uint64_t a = uniform01(agent_rng) < epsilon
                                  ? uniform_index(agent_rng, model.action_count())
                                  : greedy_action(main, x);
      StepResult out = env.step(a);
      replay.push({to_decimal(x), a, to_decimal(out.next_state), out.reward});
      total_reward += out.reward;
      x = std::move(out.next_state);

      if (replay.size() >= static_cast<std::size_t>(params.batch)) {
        const auto picks = replay.sample_indices(static_cast<std::size_t>(params.batch), replay_rng);
        for (Eigen::Index i = 0; i < batch; ++i) {
          const Experience& e = replay[picks[static_cast<std::size_t>(i)]];
          decode_into(e.state, n, states, i);
          decode_into(e.next_state, n, next_states, i);
          rewards(i) = e.reward;
          actions[static_cast<std::size_t>(i)] = e.action;
        }
        const Eigen::VectorXd y = td_targets(main, target, next_states, rewards, params.gamma);
        const auto [loss, grad] = loss_and_gradient(main, states, actions, y);
        sgd_step(main, grad, params.lr);
        total_loss += loss;
        ++updates;
      }
      polyak_update(target, main, params.tau);
    }
    const double mean = total_reward / params.steps;
    result.episode_rewards.push_back(mean);
    result.episode_losses.push_back(updates ? total_loss / updates : 0.0);
    window_sum += mean;
    ++window_count;

    if (is_checkpoint(ep, params.episodes, options.metric_every)) {
      EpisodeMetric m{ep, window_sum / window_count, std::nullopt, std::nullopt};
      if (options.oracle) {
        m.error_q = error_q(*options.oracle, network_q_table(main, n));
        m.error_pi = error_pi(*options.oracle, network_policy(main, n), model.inputs());
      }
      result.metrics.push_back(m);
      window_sum = 0.0;
      window_count = 0;
    }
  }
  return result;
}

void save_checkpoint(const Mlp<double>& net, std::ostream& out) {
  const auto& sizes = net.sizes();
  out << "pbcn-mlp 1\nsizes " << sizes.size();
  for (int s : sizes) out << ' ' << s;
  out << '\n';
  for (const auto& layer : net.layers()) {
    out << "weight " << layer.weight.rows() << ' ' << layer.weight.cols() << '\n';
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        out << (c ? " " : "") << format_double(layer.weight(r, c));
      }
      out << '\n';
    }
    out << "bias " << layer.bias.size() << '\n';
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      out << (r ? " " : "") << format_double(layer.bias(r));
    }
    out << '\n';
  }
}

void save_checkpoint(const Mlp<double>& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  save_checkpoint(net, out);
}

namespace {

std::string next_word(std::istream& in, const char* what) {
  std::string w;
  if (!(in >> w)) throw Error(std::string("checkpoint truncated: expected ") + what);
  return w;
}

long long next_int(std::istream& in, const char* what) {
  const auto v = parse_integer(next_word(in, what));
  if (!v) throw Error(std::string("checkpoint: bad integer for ") + what);
  return *v;
}

void expect_word(std::istream& in, const char* word) {
  if (next_word(in, word) != word) throw Error(std::string("checkpoint: expected '") + word + "'");
}

}  // namespace

Mlp<double> load_checkpoint(std::istream& in) {
  expect_word(in, "pbcn-mlp");
  if (next_int(in, "version") != 1) throw Error("checkpoint: unsupported version");
  expect_word(in, "sizes");
  const auto count = next_int(in, "layer count");
  if (count < 2 || count > 64) throw Error("checkpoint: bad layer count");
  std::vector<int> sizes;
  for (long long i = 0; i < count; ++i) sizes.push_back(static_cast<int>(next_int(in, "layer size")));
  Mlp<double> net(sizes);
  for (auto& layer : net.layers()) {
    expect_word(in, "weight");
    if (next_int(in, "rows") != layer.weight.rows() || next_int(in, "cols") != layer.weight.cols()) {
      throw Error("checkpoint: weight shape does not match sizes");
    }
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        const auto v = parse_double(next_word(in, "weight value"));
        if (!v) throw Error("checkpoint: bad weight value");
        layer.weight(r, c) = *v;
      }
    }
    expect_word(in, "bias");
    if (next_int(in, "bias length") != layer.bias.size()) {
      throw Error("checkpoint: bias length does not match sizes");
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      const auto v = parse_double(next_word(in, "bias value"));
      if (!v) throw Error("checkpoint: bad bias value");
      layer.bias(r) = *v;
    }
  }
  return net;
}

Mlp<double> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

}  // namespace pbcn
