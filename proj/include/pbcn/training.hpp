#pragma once

#include <optional>
#include <vector>

#include "pbcn/exact.hpp"

namespace pbcn {

struct EpisodeMetric {
  int episode;  // 0-based index of the last episode in the window
  double avg_reward;  // mean per-step reward since the previous checkpoint
  std::optional<double> error_q;
  std::optional<double> error_pi;
};

struct TrainingOptions {
  // Reference solution for the error series; small models only.
  const Solution* oracle = nullptr;
  int metric_every = 100;
};

// Checkpoints fall after episodes metric_every-1, 2*metric_every-1, ... and
// after the final episode.
inline bool is_checkpoint(int episode, int episodes, int metric_every) {
  return (episode + 1) % metric_every == 0 || episode + 1 == episodes;
}

}  // namespace pbcn
