#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "moesac/errors.hpp"
#include "moesac/rng.hpp"
#include "moesac/scenario.hpp"

namespace moesac {

// Synthetic content-quality score in [0, 10].
struct QualityScore {
  double value = 0.0;
};

enum class Placement { Local, Edge };

enum class GatingMode { Uniform, SizeProportional };

// Per-subtask output weights; sums to 1.
struct GatingWeights {
  std::vector<double> weights;
};

// Scores one subtask under one expert. Local placement adds the jointly
// trained bonus. sigma > 0 requires an rng; sigma == 0 draws nothing, which
// keeps noise-free paths replay-identical and rng-free.
inline QualityScore subtask_quality(const ExpertProfile& expert,
                                    const Subtask& subtask, Placement where,
                                    double local_bonus, double sigma,
                                    SeededRng* rng) {
  double base =
      (subtask.topic == expert.specialty) ? expert.q_match : expert.q_off;
  if (where == Placement::Local) base += local_bonus;
  if (sigma > 0.0) {
    if (rng == nullptr)
      throw std::invalid_argument("subtask_quality: sigma > 0 needs an rng");
    base += rng->normal(0.0, sigma);
  }
  return QualityScore{std::clamp(base, 0.0, 10.0)};
}

inline GatingWeights gating_weights(const Task& task, GatingMode mode) {
  if (task.subtasks.empty())
    throw ShapeError("gating_weights: task has no subtasks");
  GatingWeights gw;
  gw.weights.resize(task.subtasks.size());
  if (mode == GatingMode::Uniform) {
    const double w = 1.0 / static_cast<double>(task.subtasks.size());
    std::fill(gw.weights.begin(), gw.weights.end(), w);
  } else {
    double total = 0.0;
    for (const Subtask& s : task.subtasks)
      total += static_cast<double>(s.output_bits);
    for (std::size_t i = 0; i < task.subtasks.size(); ++i)
      gw.weights[i] =
          static_cast<double>(task.subtasks[i].output_bits) / total;
  }
  return gw;
}

// scale * sum_i w_i * score_i. Weights are NOT renormalized by callers that
// zero out a dropped subtask; the missing contribution is the penalty.
inline double aggregate_quality(std::span<const QualityScore> scores,
                                const GatingWeights& weights, double scale) {
  if (scores.size() != weights.weights.size())
    throw ShapeError("aggregate_quality: scores/weights length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    total += weights.weights[i] * scores[i].value;
  return scale * total;
}

}  // namespace moesac
