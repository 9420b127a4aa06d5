#pragma once

#include <cstddef>
#include <utility>

#include "moesac/env.hpp"
#include "moesac/errors.hpp"
#include "moesac/quality.hpp"
#include "moesac/rng.hpp"
#include "moesac/scenario.hpp"

namespace moesac {

enum class PolicyKind { Sac, Random, Benchmark, UpperBound, Oracle };

inline const char* policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Sac: return "sac";
    case PolicyKind::Random: return "random";
    case PolicyKind::Benchmark: return "benchmark";
    case PolicyKind::UpperBound: return "upper_bound";
    case PolicyKind::Oracle: return "oracle";
  }
  return "unknown";
}

inline constexpr PolicyKind kAllPolicies[] = {
    PolicyKind::Sac, PolicyKind::Random, PolicyKind::Benchmark,
    PolicyKind::UpperBound, PolicyKind::Oracle};

// Uniform device choice, state-independent.
inline Action random_policy(int device_count, SeededRng& rng) {
  return Action{static_cast<int>(rng.uniform_int(0, device_count - 1))};
}

// Resource-starved reference: every offload-designated subtask is abandoned
// (its weight stays in the gating but contributes zero), the rest run
// locally. No transfer happens, so communication energy is zero.
inline RewardBreakdown benchmark_reward(const Task& task,
                                        const Scenario& scenario,
                                        const RewardParams& params,
                                        SeededRng* rng = nullptr) {
  const GatingWeights weights = gating_weights(task, params.gating);
  RewardBreakdown b;
  for (std::size_t j = 0; j < task.subtasks.size(); ++j) {
    if (task.is_offloaded(static_cast<int>(j))) continue;
    const Subtask& sub = task.subtasks[j];
    const QualityScore q = subtask_quality(
        detail::local_expert_for(scenario, sub.topic), sub, Placement::Local,
        scenario.user.local_q_bonus, params.sigma, rng);
    b.quality_total += params.quality_scale * weights.weights[j] * q.value;
    b.compute_cost += params.kappa_c * params.local_compute_multiplier *
                      static_cast<double>(sub.output_bits);
  }
  detail::finish_breakdown(b, params);
  return b;
}

// Resource-rich reference: every subtask runs locally with the joint-training
// bonus; zero communication energy.
inline RewardBreakdown upper_bound_reward(const Task& task,
                                          const Scenario& scenario,
                                          const RewardParams& params,
                                          SeededRng* rng = nullptr) {
  const GatingWeights weights = gating_weights(task, params.gating);
  RewardBreakdown b;
  for (std::size_t j = 0; j < task.subtasks.size(); ++j) {
    const Subtask& sub = task.subtasks[j];
    const QualityScore q = subtask_quality(
        detail::local_expert_for(scenario, sub.topic), sub, Placement::Local,
        scenario.user.local_q_bonus, params.sigma, rng);
    b.quality_total += params.quality_scale * weights.weights[j] * q.value;
    b.compute_cost += params.kappa_c * params.local_compute_multiplier *
                      static_cast<double>(sub.output_bits);
  }
  detail::finish_breakdown(b, params);
  return b;
}

// Exhaustive per-state optimum: evaluates the noise-free outcome of every
// device for the given decision and returns the argmax, lowest index on ties.
// The yardstick for selection quality, so noise is always disabled.
inline std::pair<Action, RewardBreakdown> oracle_select(
    const Task& task, const Scenario& scenario, const RewardParams& params,
    std::size_t decision_index = 0) {
  const RewardParams quiet = params.noise_free();
  Action best{0};
  RewardBreakdown best_outcome =
      offload_outcome(task, scenario, 0, quiet, nullptr, decision_index);
  for (int d = 1; d < scenario.device_count(); ++d) {
    const RewardBreakdown outcome =
        offload_outcome(task, scenario, d, quiet, nullptr, decision_index);
    if (outcome.reward > best_outcome.reward) {
      best = Action{d};
      best_outcome = outcome;
    }
  }
  return {best, best_outcome};
}

}  // namespace moesac
