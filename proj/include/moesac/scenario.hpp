#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "moesac/errors.hpp"
#include "moesac/rng.hpp"

namespace moesac {

// Index into the topic catalog of a scenario.
struct TopicId {
  int value = 0;
  friend bool operator==(TopicId a, TopicId b) { return a.value == b.value; }
  friend bool operator!=(TopicId a, TopicId b) { return a.value != b.value; }
};

// One unit of a decomposed generation request. Payloads are in bits,
// compute demand in abstract units.
struct Subtask {
  int id = 0;
  TopicId topic;
  std::int64_t prompt_bits = 1;
  std::int64_t output_bits = 1;
  double compute_units = 0.0;
};

// A decomposed request. offload_order lists the subtask indices designated
// for offloading, in decision order; by default it holds exactly one entry.
struct Task {
  std::vector<Subtask> subtasks;
  std::vector<int> offload_order;

  int offload_index() const { return offload_order.front(); }
  std::size_t size() const { return subtasks.size(); }
  bool is_offloaded(int subtask_index) const {
    for (int k : offload_order)
      if (k == subtask_index) return true;
    return false;
  }
};

struct ExpertProfile {
  TopicId specialty;
  double q_match = 8.0;  // quality when the subtask topic matches
  double q_off = 4.0;    // quality off-specialty, < q_match
};

// Wireless link of one edge device. snr_linear is a dimensionless linear
// ratio regardless of which domain the scenario drew it in.
struct ChannelState {
  double snr_linear = 5.0;
  double bandwidth_hz = 1000.0;
  double tx_power_w = 0.1;
};

struct EdgeDevice {
  int id = 0;
  ExpertProfile expert;
  double avail_compute_units = 0.0;
  ChannelState channel;
};

struct UserDevice {
  double local_q_bonus = 1.0;  // delta: quality edge of the jointly trained local experts
  double local_compute_budget = 0.0;
};

// Everything needed to (re)generate a world and its task distribution.
struct ScenarioConfig {
  int n_devices = 30;
  int n_topics = 6;

  double snr_min = 5.0;
  double snr_max = 20.0;
  bool snr_in_db = false;  // when true, [snr_min, snr_max] is a dB range
  double bandwidth_hz = 1000.0;
  double tx_power_w = 0.1;

  double q_match = 8.0;
  double q_off = 4.0;
  double local_quality_bonus = 1.0;
  double local_compute_budget = 0.0;

  double avail_compute_min = 0.0;
  double avail_compute_max = 3.0;

  int k_total = 4;
  int k_offload = 1;
  std::int64_t prompt_bits_min = 2000;
  std::int64_t prompt_bits_max = 8000;
  std::int64_t output_bits_min = 20000;
  std::int64_t output_bits_max = 60000;
  double kappa_u = 2.5e-5;  // compute demand per generated bit

  double snr_linear_at(double drawn) const {
    return snr_in_db ? std::pow(10.0, drawn / 10.0) : drawn;
  }

  void validate() const {
    if (n_devices < 1) throw ConfigError("n_devices: must be >= 1");
    if (n_topics < 1) throw ConfigError("n_topics: must be >= 1");
    if (snr_min > snr_max) throw ConfigError("snr: snr_min > snr_max");
    if (!snr_in_db && snr_min < 0.0)
      throw ConfigError("snr: linear snr_min must be >= 0");
    if (bandwidth_hz <= 0.0) throw ConfigError("bandwidth_hz: must be > 0");
    if (tx_power_w <= 0.0) throw ConfigError("tx_power_w: must be > 0");
    if (!(0.0 <= q_off && q_off < q_match && q_match <= 10.0))
      throw ConfigError("quality: need 0 <= q_off < q_match <= 10");
    if (local_quality_bonus < 0.0)
      throw ConfigError("local_quality_bonus: must be >= 0");
    if (local_compute_budget < 0.0)
      throw ConfigError("local_compute_budget: must be >= 0");
    if (avail_compute_min < 0.0 || avail_compute_min > avail_compute_max)
      throw ConfigError("avail_compute: need 0 <= min <= max");
    if (k_total < 1) throw ConfigError("k_total: must be >= 1");
    if (k_offload < 1 || k_offload > k_total)
      throw ConfigError("k_offload: need 1 <= k_offload <= k_total");
    if (prompt_bits_min < 1 || prompt_bits_min > prompt_bits_max)
      throw ConfigError("prompt_bits: need 1 <= min <= max");
    if (output_bits_min < 1 || output_bits_min > output_bits_max)
      throw ConfigError("output_bits: need 1 <= min <= max");
    if (kappa_u <= 0.0) throw ConfigError("kappa_u: must be > 0");
  }
};

// Immutable world description. Copies are cheap enough to treat by value.
struct Scenario {
  UserDevice user;
  std::vector<EdgeDevice> devices;
  ScenarioConfig config;
  std::uint64_t seed = 0;

  int device_count() const { return static_cast<int>(devices.size()); }
  int topic_count() const { return config.n_topics; }
};

// Catalog labels; indices past the named ones fall back to a generic label.
inline std::string topic_label(TopicId t) {
  static constexpr std::array<const char*, 6> kNames = {
      "character appearance", "landscapes", "weather",
      "dialogue",             "architecture", "cuisine"};
  if (t.value >= 0 && t.value < static_cast<int>(kNames.size()))
    return kNames[static_cast<std::size_t>(t.value)];
  return "topic_" + std::to_string(t.value);
}

// Builds the world. Identical (config, seed) pairs yield identical scenarios;
// per device the draw order is specialty, avail_compute, snr.
inline Scenario build_scenario(const ScenarioConfig& config,
                               std::uint64_t seed) {
  config.validate();
  Scenario scenario;
  scenario.config = config;
  scenario.seed = seed;
  scenario.user.local_q_bonus = config.local_quality_bonus;
  scenario.user.local_compute_budget = config.local_compute_budget;

  SeededRng rng(seed);
  scenario.devices.reserve(static_cast<std::size_t>(config.n_devices));
  for (int i = 0; i < config.n_devices; ++i) {
    EdgeDevice dev;
    dev.id = i;
    dev.expert.specialty =
        TopicId{static_cast<int>(rng.uniform_int(0, config.n_topics - 1))};
    dev.expert.q_match = config.q_match;
    dev.expert.q_off = config.q_off;
    dev.avail_compute_units =
        rng.uniform_real(config.avail_compute_min, config.avail_compute_max);
    dev.channel.snr_linear =
        config.snr_linear_at(rng.uniform_real(config.snr_min, config.snr_max));
    dev.channel.bandwidth_hz = config.bandwidth_hz;
    dev.channel.tx_power_w = config.tx_power_w;
    scenario.devices.push_back(dev);
  }
  return scenario;
}

// Draws a fresh task. Per subtask the draw order is topic, prompt_bits,
// output_bits; the offload designation is drawn last.
inline Task sample_task(const Scenario& scenario, SeededRng& rng) {
  const ScenarioConfig& cfg = scenario.config;
  Task task;
  task.subtasks.reserve(static_cast<std::size_t>(cfg.k_total));
  for (int i = 0; i < cfg.k_total; ++i) {
    Subtask sub;
    sub.id = i;
    sub.topic = TopicId{static_cast<int>(rng.uniform_int(0, cfg.n_topics - 1))};
    sub.prompt_bits = rng.uniform_int(cfg.prompt_bits_min, cfg.prompt_bits_max);
    sub.output_bits = rng.uniform_int(cfg.output_bits_min, cfg.output_bits_max);
    sub.compute_units = cfg.kappa_u * static_cast<double>(sub.output_bits);
    task.subtasks.push_back(sub);
  }
  // Partial Fisher-Yates: k_offload distinct indices, uniform over subsets.
  std::vector<int> pool(static_cast<std::size_t>(cfg.k_total));
  for (int i = 0; i < cfg.k_total; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (int d = 0; d < cfg.k_offload; ++d) {
    const auto j =
        static_cast<std::size_t>(rng.uniform_int(d, cfg.k_total - 1));
    std::swap(pool[static_cast<std::size_t>(d)], pool[j]);
    task.offload_order.push_back(pool[static_cast<std::size_t>(d)]);
  }
  return task;
}

// Redraws every device's SNR; all other fields are untouched.
inline Scenario resample_channels(Scenario scenario, SeededRng& rng) {
  const ScenarioConfig& cfg = scenario.config;
  for (EdgeDevice& dev : scenario.devices) {
    dev.channel.snr_linear =
        cfg.snr_linear_at(rng.uniform_real(cfg.snr_min, cfg.snr_max));
  }
  return scenario;
}

}  // namespace moesac
