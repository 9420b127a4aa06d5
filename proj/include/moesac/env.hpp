#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "moesac/cost.hpp"
#include "moesac/errors.hpp"
#include "moesac/quality.hpp"
#include "moesac/rng.hpp"
#include "moesac/scenario.hpp"

namespace moesac {

using StateVector = std::vector<double>;

// Which edge device receives the current offload subtask.
struct Action {
  int device_index = 0;
};

struct Transition {
  StateVector state;
  Action action;
  double reward = 0.0;
  StateVector next_state;
  bool done = false;
};

// Reward terms of one decision. The identity
//   reward == quality_total - lambda_energy*comm_energy_j - lambda_compute*compute_cost
// holds exactly (same expression, same order).
struct RewardBreakdown {
  double quality_total = 0.0;
  double comm_energy_j = 0.0;
  double compute_cost = 0.0;
  double reward = 0.0;
};

// Reward-shaping knobs; everything else comes from the scenario config.
struct RewardParams {
  double sigma = 0.5;          // stddev of the quality noise
  double quality_scale = 5.0;  // maps the weighted [0,10] mean to reward units
  GatingMode gating = GatingMode::Uniform;
  double lambda_energy = 1.0;
  double lambda_compute = 1.0;
  double kappa_c = 2.5e-5;  // compute cost per generated bit
  double edge_compute_multiplier = 1.0;
  double local_compute_multiplier = 1.0;

  RewardParams noise_free() const {
    RewardParams p = *this;
    p.sigma = 0.0;
    return p;
  }
};

namespace detail {

inline double safe_unit(double x, double lo, double hi) {
  if (hi <= lo) return 0.0;
  return std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
}

// SNR expressed in the domain it was drawn in (dB or linear), for
// normalization against the configured range.
inline double snr_drawn_domain(const ChannelState& ch,
                               const ScenarioConfig& cfg) {
  return cfg.snr_in_db ? 10.0 * std::log10(ch.snr_linear) : ch.snr_linear;
}

// The user device hosts the full expert set, so local execution always uses
// an expert matching the subtask topic.
inline ExpertProfile local_expert_for(const Scenario& scenario,
                                      TopicId topic) {
  ExpertProfile p;
  p.specialty = topic;
  p.q_match = scenario.config.q_match;
  p.q_off = scenario.config.q_off;
  return p;
}

inline void finish_breakdown(RewardBreakdown& b, const RewardParams& p) {
  b.reward = b.quality_total - p.lambda_energy * b.comm_energy_j -
             p.lambda_compute * b.compute_cost;
}

}  // namespace detail

// Flattened, min-max normalized observation: a 3-entry user block for the
// current offload subtask followed by 5 entries per device. Ranges come from
// the scenario config, so the encoding is stateless.
inline StateVector encode_state(const Task& task, const Scenario& scenario,
                                std::size_t decision_index = 0) {
  const ScenarioConfig& cfg = scenario.config;
  const Subtask& sub =
      task.subtasks[static_cast<std::size_t>(task.offload_order[decision_index])];

  const double topic_denom =
      cfg.n_topics > 1 ? static_cast<double>(cfg.n_topics - 1) : 0.0;
  const double compute_lo = cfg.kappa_u * static_cast<double>(cfg.output_bits_min);
  const double compute_hi = cfg.kappa_u * static_cast<double>(cfg.output_bits_max);

  StateVector s;
  s.reserve(3 + 5 * static_cast<std::size_t>(scenario.device_count()));

  // User block.
  s.push_back(detail::safe_unit(sub.compute_units, compute_lo, compute_hi));
  s.push_back(topic_denom > 0.0 ? sub.topic.value / topic_denom : 0.0);
  // Prompt transfer cost at a fixed reference channel, normalized by the
  // max-payload cost on the same channel; the rate cancels to a bits ratio.
  s.push_back(static_cast<double>(sub.prompt_bits) /
              static_cast<double>(cfg.prompt_bits_max));

  // Round-trip energy normalization range over all reachable channels and
  // payloads: cheapest is the smallest payload on the best channel, dearest
  // the largest payload on the worst channel.
  ChannelState best{cfg.snr_linear_at(cfg.snr_max), cfg.bandwidth_hz,
                    cfg.tx_power_w};
  ChannelState worst{cfg.snr_linear_at(cfg.snr_min), cfg.bandwidth_hz,
                     cfg.tx_power_w};
  const double e_lo =
      transfer_energy(best, cfg.prompt_bits_min + cfg.output_bits_min).energy_j;
  const double e_hi =
      transfer_energy(worst, cfg.prompt_bits_max + cfg.output_bits_max).energy_j;

  for (const EdgeDevice& dev : scenario.devices) {
    s.push_back(detail::safe_unit(dev.avail_compute_units,
                                  cfg.avail_compute_min, cfg.avail_compute_max));
    s.push_back(topic_denom > 0.0 ? dev.expert.specialty.value / topic_denom
                                  : 0.0);
    s.push_back(dev.expert.specialty == sub.topic ? 1.0 : 0.0);
    s.push_back(detail::safe_unit(detail::snr_drawn_domain(dev.channel, cfg),
                                  cfg.snr_min, cfg.snr_max));
    s.push_back(detail::safe_unit(round_trip_energy(dev.channel, sub).energy_j,
                                  e_lo, e_hi));
  }
  return s;
}

// Shared outcome arithmetic for one offload decision; pure given its inputs.
// The chosen device scores the designated subtask as an Edge placement; on
// the final decision of the episode the never-offloaded subtasks are scored
// locally (with the +delta bonus) and their compute is charged. A device
// without enough compute produces nothing: the subtask scores 0 (weights not
// renormalized), only the prompt transfer is paid, and no edge compute is
// charged. Noise draws happen in subtask-index order, edge subtask first.
inline RewardBreakdown offload_outcome(const Task& task,
                                       const Scenario& scenario,
                                       int device_index,
                                       const RewardParams& params,
                                       SeededRng* rng,
                                       std::size_t decision_index = 0) {
  if (device_index < 0 || device_index >= scenario.device_count())
    throw InvalidAction("offload_outcome: device index out of range");

  const EdgeDevice& dev =
      scenario.devices[static_cast<std::size_t>(device_index)];
  const int sub_index = task.offload_order[decision_index];
  const Subtask& sub = task.subtasks[static_cast<std::size_t>(sub_index)];
  const GatingWeights weights = gating_weights(task, params.gating);
  const bool last_decision = decision_index + 1 == task.offload_order.size();

  RewardBreakdown b;
  const bool feasible = dev.avail_compute_units >= sub.compute_units;
  if (feasible) {
    const QualityScore q = subtask_quality(dev.expert, sub, Placement::Edge,
                                           scenario.user.local_q_bonus,
                                           params.sigma, rng);
    b.quality_total += params.quality_scale *
                       weights.weights[static_cast<std::size_t>(sub_index)] *
                       q.value;
    b.comm_energy_j = round_trip_energy(dev.channel, sub).energy_j;
    b.compute_cost += params.kappa_c * params.edge_compute_multiplier *
                      static_cast<double>(sub.output_bits);
  } else {
    // Failed generation: zero score, prompt energy only, no generated bits.
    b.comm_energy_j = transfer_energy(dev.channel, sub.prompt_bits).energy_j;
  }

  if (last_decision) {
    for (std::size_t j = 0; j < task.subtasks.size(); ++j) {
      if (task.is_offloaded(static_cast<int>(j))) continue;
      const Subtask& local_sub = task.subtasks[j];
      const QualityScore q = subtask_quality(
          detail::local_expert_for(scenario, local_sub.topic), local_sub,
          Placement::Local, scenario.user.local_q_bonus, params.sigma, rng);
      b.quality_total += params.quality_scale * weights.weights[j] * q.value;
      b.compute_cost += params.kappa_c * params.local_compute_multiplier *
                        static_cast<double>(local_sub.output_bits);
    }
  }

  detail::finish_breakdown(b, params);
  return b;
}

// The MDP. One episode handles one sampled task: k_offload decisions, each
// placing one designated subtask on an edge device.
class OffloadEnv {
 public:
  struct StepResult {
    RewardBreakdown breakdown;
    StateVector next_state;
    bool done = false;
  };

  OffloadEnv(Scenario scenario, RewardParams params)
      : scenario_(std::move(scenario)), params_(params) {
    ChannelState worst{scenario_.config.snr_linear_at(scenario_.config.snr_min),
                       scenario_.config.bandwidth_hz,
                       scenario_.config.tx_power_w};
    if (transmission_rate(worst) <= 0.0)
      throw ConfigError(
          "snr: snr_min must give a positive rate for state normalization");
  }

  int state_dim() const { return 3 + 5 * scenario_.device_count(); }
  int action_count() const { return scenario_.device_count(); }
  const Scenario& scenario() const { return scenario_; }
  const Task& task() const { return task_; }
  const RewardParams& params() const { return params_; }
  int decisions_made() const { return decision_; }
  bool done() const { return !active_; }

  // Samples a task, then redraws every channel; both from the caller's rng.
  StateVector reset(SeededRng& rng) {
    task_ = sample_task(scenario_, rng);
    scenario_ = resample_channels(std::move(scenario_), rng);
    decision_ = 0;
    active_ = true;
    return encode_state(task_, scenario_, 0);
  }

  StepResult step(const Action& action, SeededRng& rng) {
    if (!active_) throw EpisodeOver("step: episode is over; call reset");
    if (action.device_index < 0 ||
        action.device_index >= scenario_.device_count())
      throw InvalidAction("step: device index out of range");

    StepResult result;
    result.breakdown = offload_outcome(task_, scenario_, action.device_index,
                                       params_, &rng,
                                       static_cast<std::size_t>(decision_));
    ++decision_;
    result.done = decision_ >= static_cast<int>(task_.offload_order.size());
    if (result.done) active_ = false;
    // Terminal next_state repeats the last decision's encoding; SAC masks the
    // bootstrap with done, so the value is never used.
    const std::size_t next_index = result.done
                                       ? task_.offload_order.size() - 1
                                       : static_cast<std::size_t>(decision_);
    result.next_state = encode_state(task_, scenario_, next_index);
    return result;
  }

 private:
  Scenario scenario_;
  RewardParams params_;
  Task task_;
  int decision_ = 0;
  bool active_ = false;
};

// Sum of rewards of one completed episode.
inline double episode_reward(std::span<const Transition> transitions) {
  if (transitions.empty())
    throw std::invalid_argument("episode_reward: empty transition list");
  if (!transitions.back().done)
    throw std::invalid_argument("episode_reward: episode does not end done");
  double total = 0.0;
  for (const Transition& t : transitions) total += t.reward;
  return total;
}

}  // namespace moesac
