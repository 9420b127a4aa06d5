#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "moesac/cost.hpp"
#include "moesac/env.hpp"
#include "moesac/errors.hpp"
#include "moesac/sac.hpp"
#include "moesac/scenario.hpp"

namespace moesac {

// Full experiment description. Defaults reproduce the reference case study:
// 30 devices, 6 topics, SNR 5-20, 1 kHz, 0.1 W, one offloaded subtask out of
// four, 200 epochs of 50 episodes.
struct RunConfig {
  ScenarioConfig scenario;
  RewardParams reward;          // training-time noise in reward.sigma
  double eval_sigma = 0.0;      // quality noise during evaluation
  SacHyperparams sac;

  int epochs = 200;
  int episodes_per_epoch = 50;
  int eval_episodes = 1000;
  double final_window_frac = 0.1;
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  void validate() const {
    scenario.validate();
    sac.validate();
    {
      // state normalization needs a finite worst-case transfer energy
      const ChannelState worst{scenario.snr_linear_at(scenario.snr_min),
                               scenario.bandwidth_hz, scenario.tx_power_w};
      if (transmission_rate(worst) <= 0.0)
        throw ConfigError("snr_min: must yield a positive transmission rate");
    }
    if (reward.sigma < 0.0) throw ConfigError("quality_sigma: must be >= 0");
    if (eval_sigma < 0.0) throw ConfigError("eval_sigma: must be >= 0");
    if (reward.quality_scale <= 0.0)
      throw ConfigError("quality_scale: must be > 0");
    if (reward.lambda_energy < 0.0)
      throw ConfigError("lambda_energy: must be >= 0");
    if (reward.lambda_compute < 0.0)
      throw ConfigError("lambda_compute: must be >= 0");
    if (reward.kappa_c <= 0.0) throw ConfigError("kappa_c: must be > 0");
    if (reward.edge_compute_multiplier < 0.0)
      throw ConfigError("edge_compute_multiplier: must be >= 0");
    if (reward.local_compute_multiplier < 0.0)
      throw ConfigError("local_compute_multiplier: must be >= 0");
    if (epochs < 1) throw ConfigError("epochs: must be >= 1");
    if (episodes_per_epoch < 1)
      throw ConfigError("episodes_per_epoch: must be >= 1");
    if (eval_episodes < 1) throw ConfigError("eval_episodes: must be >= 1");
    if (!(final_window_frac > 0.0 && final_window_frac <= 1.0))
      throw ConfigError("final_window_frac: must be in (0, 1]");
    if (out_dir.empty()) throw ConfigError("out_dir: must not be empty");
  }
};

namespace detail {

template <typename T>
T get_number(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number())
    throw ConfigError("config key '" + key + "': expected a number");
  return v.get<T>();
}

inline bool get_bool(const nlohmann::json& v, const std::string& key) {
  if (!v.is_boolean())
    throw ConfigError("config key '" + key + "': expected true/false");
  return v.get<bool>();
}

inline std::string get_string(const nlohmann::json& v, const std::string& key) {
  if (!v.is_string())
    throw ConfigError("config key '" + key + "': expected a string");
  return v.get<std::string>();
}

}  // namespace detail

// Strict flat-key parse: every key must be known, every omitted key keeps its
// documented default.
inline RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  RunConfig cfg;
  for (const auto& [key, value] : j.items()) {
    using detail::get_bool;
    using detail::get_number;
    using detail::get_string;
    // scenario / task distribution
    if (key == "n_devices") cfg.scenario.n_devices = get_number<int>(value, key);
    else if (key == "n_topics") cfg.scenario.n_topics = get_number<int>(value, key);
    else if (key == "snr_min") cfg.scenario.snr_min = get_number<double>(value, key);
    else if (key == "snr_max") cfg.scenario.snr_max = get_number<double>(value, key);
    else if (key == "snr_in_db") cfg.scenario.snr_in_db = get_bool(value, key);
    else if (key == "bandwidth_hz") cfg.scenario.bandwidth_hz = get_number<double>(value, key);
    else if (key == "tx_power_w") cfg.scenario.tx_power_w = get_number<double>(value, key);
    else if (key == "q_match") cfg.scenario.q_match = get_number<double>(value, key);
    else if (key == "q_off") cfg.scenario.q_off = get_number<double>(value, key);
    else if (key == "local_quality_bonus") cfg.scenario.local_quality_bonus = get_number<double>(value, key);
    else if (key == "local_compute_budget") cfg.scenario.local_compute_budget = get_number<double>(value, key);
    else if (key == "avail_compute_min") cfg.scenario.avail_compute_min = get_number<double>(value, key);
    else if (key == "avail_compute_max") cfg.scenario.avail_compute_max = get_number<double>(value, key);
    else if (key == "k_total") cfg.scenario.k_total = get_number<int>(value, key);
    else if (key == "k_offload") cfg.scenario.k_offload = get_number<int>(value, key);
    else if (key == "prompt_bits_min") cfg.scenario.prompt_bits_min = get_number<std::int64_t>(value, key);
    else if (key == "prompt_bits_max") cfg.scenario.prompt_bits_max = get_number<std::int64_t>(value, key);
    else if (key == "output_bits_min") cfg.scenario.output_bits_min = get_number<std::int64_t>(value, key);
    else if (key == "output_bits_max") cfg.scenario.output_bits_max = get_number<std::int64_t>(value, key);
    else if (key == "kappa_u") cfg.scenario.kappa_u = get_number<double>(value, key);
    // reward
    else if (key == "quality_sigma") cfg.reward.sigma = get_number<double>(value, key);
    else if (key == "quality_scale") cfg.reward.quality_scale = get_number<double>(value, key);
    else if (key == "gating_mode") {
      const std::string mode = get_string(value, key);
      if (mode == "uniform") cfg.reward.gating = GatingMode::Uniform;
      else if (mode == "size_proportional") cfg.reward.gating = GatingMode::SizeProportional;
      else throw ConfigError("gating_mode: expected 'uniform' or 'size_proportional'");
    }
    else if (key == "lambda_energy") cfg.reward.lambda_energy = get_number<double>(value, key);
    else if (key == "lambda_compute") cfg.reward.lambda_compute = get_number<double>(value, key);
    else if (key == "kappa_c") cfg.reward.kappa_c = get_number<double>(value, key);
    else if (key == "edge_compute_multiplier") cfg.reward.edge_compute_multiplier = get_number<double>(value, key);
    else if (key == "local_compute_multiplier") cfg.reward.local_compute_multiplier = get_number<double>(value, key);
    // sac
    else if (key == "hidden_sizes") {
      if (!value.is_array() || value.empty())
        throw ConfigError("hidden_sizes: expected a nonempty array");
      cfg.sac.hidden_sizes.clear();
      for (const auto& h : value)
        cfg.sac.hidden_sizes.push_back(detail::get_number<int>(h, key));
    }
    else if (key == "gamma") cfg.sac.gamma = get_number<double>(value, key);
    else if (key == "tau") cfg.sac.tau = get_number<double>(value, key);
    else if (key == "lr_actor") cfg.sac.lr_actor = get_number<double>(value, key);
    else if (key == "lr_critic") cfg.sac.lr_critic = get_number<double>(value, key);
    else if (key == "lr_alpha") cfg.sac.lr_alpha = get_number<double>(value, key);
    else if (key == "batch_size") cfg.sac.batch_size = get_number<int>(value, key);
    else if (key == "buffer_capacity") cfg.sac.buffer_capacity = get_number<std::size_t>(value, key);
    else if (key == "target_entropy_factor") cfg.sac.target_entropy_factor = get_number<double>(value, key);
    else if (key == "init_alpha") cfg.sac.init_alpha = get_number<double>(value, key);
    else if (key == "optimizer") {
      const std::string opt = get_string(value, key);
      if (opt == "sgd") cfg.sac.optimizer = OptimizerKind::Sgd;
      else if (opt == "adam") cfg.sac.optimizer = OptimizerKind::Adam;
      else throw ConfigError("optimizer: expected 'sgd' or 'adam'");
    }
    // run
    else if (key == "epochs") cfg.epochs = get_number<int>(value, key);
    else if (key == "episodes_per_epoch") cfg.episodes_per_epoch = get_number<int>(value, key);
    else if (key == "eval_episodes") cfg.eval_episodes = get_number<int>(value, key);
    else if (key == "eval_sigma") cfg.eval_sigma = get_number<double>(value, key);
    else if (key == "final_window_frac") cfg.final_window_frac = get_number<double>(value, key);
    else if (key == "seed") cfg.seed = get_number<std::uint64_t>(value, key);
    else if (key == "out_dir") cfg.out_dir = get_string(value, key);
    else throw ConfigError("config: unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

// Reads a JSON config ('//' comments allowed). A file with no content means
// all defaults.
inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  const std::string text = buf.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    RunConfig cfg;
    cfg.validate();
    return cfg;
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace moesac
