#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "pbcn/env.hpp"
#include "pbcn/mlp.hpp"
#include "pbcn/model.hpp"
#include "pbcn/training.hpp"

namespace pbcn {

// Double-Q targets y_i = r_i + gamma * Q_target(x'_i, argmax_u Q_main(x'_i, u)).
// The main network selects, the target network evaluates. No terminal masking.
template <typename Scalar>
typename Mlp<Scalar>::Vector td_targets(const Mlp<Scalar>& main, const Mlp<Scalar>& target,
                                        const typename Mlp<Scalar>::Matrix& next_states,
                                        const typename Mlp<Scalar>::Vector& rewards,
                                        Scalar gamma) {
  const auto chooser = main.forward(next_states);
  const auto judge = target.forward(next_states);
  typename Mlp<Scalar>::Vector y(rewards.size());
  for (Eigen::Index i = 0; i < rewards.size(); ++i) {
    y(i) = rewards(i) + gamma * judge(argmax(chooser.col(i)), i);
  }
  return y;
}

struct Experience {
  std::uint64_t state;
  std::uint64_t action;
  std::uint64_t next_state;
  double reward;
};

/// FIFO store of the most recent `capacity` experiences.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  // Appends at the rear, evicting the oldest record when full.
  void push(const Experience& e);

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  // 0 is the oldest record.
  const Experience& operator[](std::size_t i) const { return items_[i]; }

  // `count` distinct positions, uniformly without replacement.
  std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Experience> items_;
};

struct DdqnParams {
  double gamma = 0.9;
  int episodes = 20000;
  int steps = 15;
  int batch = 128;
  int capacity = 50000;
  int hidden = 2;
  int hidden_layers = 1;
  double lr = 0.01;      // gradient step size
  double tau = 0.999;    // target keeps tau of itself per step
  double delta = 8e-6;   // epsilon = (1 - delta)^t'
  InitMode init = InitMode::kScaled;

  void validate() const;
};

struct DdqnResult {
  Mlp<double> network;
  Mlp<double> target;
  std::vector<double> episode_rewards;  // mean per-step reward of each episode
  std::vector<double> episode_losses;   // mean loss over the episode's updates (0 if none)
  std::vector<EpisodeMetric> metrics;
};

// Layer sizes {n, hidden x hidden_layers, 2^m}.
std::vector<int> ddqn_layer_sizes(const PbcnModel& model, const DdqnParams& params);

// Smallest action decimal maximising the network output at `state`.
std::uint64_t greedy_action(const Mlp<double>& net, std::span<const std::uint8_t> state);

// Network outputs for every state, 2^n x 2^m. Small models only.
Eigen::MatrixXd network_q_table(const Mlp<double>& net, int nodes);
std::vector<std::uint64_t> network_policy(const Mlp<double>& net, int nodes);

DdqnResult train_ddqn(const PbcnModel& model, const CostSpec& spec,
                      const RewardMap& map, const DdqnParams& params,
                      std::uint64_t seed, const TrainingOptions& options = {});

// Text checkpoint:
//   pbcn-mlp 1
//   sizes <k> <s_0> ... <s_{k-1}>
//   then per layer: "weight <rows> <cols>" + rows of values, "bias <len>" + values.
// Values use shortest round-trip formatting, so load(save(net)) == net.
void save_checkpoint(const Mlp<double>& net, std::ostream& out);
void save_checkpoint(const Mlp<double>& net, const std::filesystem::path& path);
Mlp<double> load_checkpoint(std::istream& in);
Mlp<double> load_checkpoint(const std::filesystem::path& path);

}  // namespace pbcn
