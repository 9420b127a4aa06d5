#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "moesac/baselines.hpp"
#include "moesac/config.hpp"
#include "moesac/env.hpp"
#include "moesac/errors.hpp"
#include "moesac/replay.hpp"
#include "moesac/sac.hpp"

namespace moesac {

inline constexpr const char* kMetricsHeader =
    "epoch,mean_reward,mean_quality,mean_comm_energy_j,mean_compute_cost,"
    "critic1_loss,critic2_loss,actor_loss,alpha_loss,alpha,"
    "ref_upper,ref_benchmark,ref_random";

inline constexpr const char* kMetricsFileName = "metrics.csv";
inline constexpr const char* kCheckpointFileName = "checkpoint.moesac";
inline constexpr const char* kEvalReportFileName = "eval_report.csv";
inline constexpr const char* kRewardSeriesFileName = "reward_vs_epoch.csv";
inline constexpr const char* kRewardBarsFileName = "reward_bars.csv";
inline constexpr const char* kSweepSummaryFileName = "sweep_summary.csv";

// Named sub-streams of the run seed. Values are arbitrary but frozen:
// changing them changes every seeded trajectory.
namespace stream {
inline constexpr std::uint64_t kEnv = 1;        // tasks, channels, train noise
inline constexpr std::uint64_t kAction = 2;     // policy sampling
inline constexpr std::uint64_t kAgentInit = 3;  // network initialization
inline constexpr std::uint64_t kReplay = 4;     // batch sampling
inline constexpr std::uint64_t kRefRandom = 5;  // random reference line
inline constexpr std::uint64_t kEvalWorld = 6;  // eval task/channel draws
inline constexpr std::uint64_t kEvalNoise = 7;  // eval quality noise, per policy
inline constexpr std::uint64_t kEvalRandom = 8; // eval random-policy draws
}  // namespace stream

// One row of the training metrics CSV.
struct MetricsRecord {
  int epoch = 0;
  double mean_reward = 0.0;
  double mean_quality = 0.0;
  double mean_comm_energy = 0.0;
  double mean_compute_cost = 0.0;
  double critic1_loss = 0.0;
  double critic2_loss = 0.0;
  double actor_loss = 0.0;
  double alpha_loss = 0.0;
  double alpha = 0.0;
  double ref_upper = 0.0;
  double ref_benchmark = 0.0;
  double ref_random = 0.0;
};

namespace detail {

// Shortest round-trip decimal form; keeps CSV output byte-stable.
inline std::string format_double(double v) {
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw IoError(where + ": cannot parse number '" + s + "'");
  return v;
}

inline std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " +
                        ec.message());
}

inline void require_finite(double v, const std::string& what, int epoch) {
  if (!std::isfinite(v))
    throw NumericalError("non-finite " + what + " at epoch " +
                         std::to_string(epoch));
}

// Episode reward of the uniform-random policy on a frozen (task, channels)
// pair, noise-free.
inline double random_episode_reward(const Task& task, const Scenario& sc,
                                    const RewardParams& quiet,
                                    SeededRng& rng) {
  double total = 0.0;
  for (std::size_t d = 0; d < task.offload_order.size(); ++d)
    total += offload_outcome(task, sc,
                             random_policy(sc.device_count(), rng).device_index,
                             quiet, nullptr, d)
                 .reward;
  return total;
}

}  // namespace detail

inline std::string metrics_row(const MetricsRecord& r) {
  using detail::format_double;
  std::string row = std::to_string(r.epoch);
  for (double v : {r.mean_reward, r.mean_quality, r.mean_comm_energy,
                   r.mean_compute_cost, r.critic1_loss, r.critic2_loss,
                   r.actor_loss, r.alpha_loss, r.alpha, r.ref_upper,
                   r.ref_benchmark, r.ref_random}) {
    row += ',';
    row += format_double(v);
  }
  return row;
}

inline std::vector<MetricsRecord> read_metrics_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open metrics file: " + path);
  std::string line;
  if (!std::getline(f, line))
    throw IoError(path + " row 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsHeader)
    throw IoError(path + " row 1: unexpected header");
  std::vector<MetricsRecord> records;
  int row = 1;
  while (std::getline(f, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path + " row " + std::to_string(row);
    const auto fields = detail::split_csv_row(line);
    if (fields.size() != 13)
      throw IoError(where + ": expected 13 fields, got " +
                    std::to_string(fields.size()));
    MetricsRecord r;
    r.epoch = static_cast<int>(detail::parse_double(fields[0], where));
    r.mean_reward = detail::parse_double(fields[1], where);
    r.mean_quality = detail::parse_double(fields[2], where);
    r.mean_comm_energy = detail::parse_double(fields[3], where);
    r.mean_compute_cost = detail::parse_double(fields[4], where);
    r.critic1_loss = detail::parse_double(fields[5], where);
    r.critic2_loss = detail::parse_double(fields[6], where);
    r.actor_loss = detail::parse_double(fields[7], where);
    r.alpha_loss = detail::parse_double(fields[8], where);
    r.alpha = detail::parse_double(fields[9], where);
    r.ref_upper = detail::parse_double(fields[10], where);
    r.ref_benchmark = detail::parse_double(fields[11], where);
    r.ref_random = detail::parse_double(fields[12], where);
    records.push_back(r);
  }
  return records;
}

struct TrainResult {
  std::vector<MetricsRecord> metrics;
  std::string metrics_path;
  std::string checkpoint_path;
};

// Seeded training run: epochs x episodes of interaction with one SAC update
// per step once the buffer can fill a batch. Everything that reaches the
// filesystem is reproducible from (config, seed).
inline TrainResult train(const RunConfig& cfg) {
  cfg.validate();
  detail::ensure_dir(cfg.out_dir);

  SeededRng root(cfg.seed);
  SeededRng env_rng = root.derive(stream::kEnv);
  SeededRng action_rng = root.derive(stream::kAction);
  SeededRng init_rng = root.derive(stream::kAgentInit);
  SeededRng replay_rng = root.derive(stream::kReplay);
  SeededRng ref_rng = root.derive(stream::kRefRandom);

  OffloadEnv env(build_scenario(cfg.scenario, cfg.seed), cfg.reward);
  SacAgent agent(env.state_dim(), env.action_count(), cfg.sac, init_rng);
  ReplayBuffer buffer(cfg.sac.buffer_capacity);
  const RewardParams quiet = cfg.reward.noise_free();

  TrainResult result;
  result.metrics_path =
      (std::filesystem::path(cfg.out_dir) / kMetricsFileName).string();
  result.checkpoint_path =
      (std::filesystem::path(cfg.out_dir) / kCheckpointFileName).string();

  std::ofstream csv(result.metrics_path, std::ios::trunc);
  if (!csv) throw IoError("cannot open for writing: " + result.metrics_path);
  csv << kMetricsHeader << '\n';

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double sum_reward = 0.0, sum_quality = 0.0, sum_comm = 0.0, sum_comp = 0.0;
    double sum_up = 0.0, sum_bm = 0.0, sum_rnd = 0.0;
    double sum_l1 = 0.0, sum_l2 = 0.0, sum_la = 0.0, sum_lalpha = 0.0;
    long updates = 0;

    for (int episode = 0; episode < cfg.episodes_per_epoch; ++episode) {
      StateVector state = env.reset(env_rng);
      sum_up += upper_bound_reward(env.task(), env.scenario(), quiet).reward;
      sum_bm += benchmark_reward(env.task(), env.scenario(), quiet).reward;
      sum_rnd += detail::random_episode_reward(env.task(), env.scenario(),
                                               quiet, ref_rng);
      while (true) {
        const Action action =
            agent.select_action(state, ActionMode::Sample, action_rng);
        OffloadEnv::StepResult sr = env.step(action, env_rng);
        sum_reward += sr.breakdown.reward;
        sum_quality += sr.breakdown.quality_total;
        sum_comm += sr.breakdown.comm_energy_j;
        sum_comp += sr.breakdown.compute_cost;
        buffer.push(Transition{std::move(state), action, sr.breakdown.reward,
                               sr.next_state, sr.done});
        if (buffer.size() >= static_cast<std::size_t>(cfg.sac.batch_size)) {
          const LossReport lr = agent.update(buffer, replay_rng);
          sum_l1 += lr.critic1_loss;
          sum_l2 += lr.critic2_loss;
          sum_la += lr.actor_loss;
          sum_lalpha += lr.alpha_loss;
          ++updates;
        }
        if (sr.done) break;
        state = std::move(sr.next_state);
      }
    }

    const double n = static_cast<double>(cfg.episodes_per_epoch);
    const double u = updates > 0 ? static_cast<double>(updates) : 1.0;
    MetricsRecord rec;
    rec.epoch = epoch;
    rec.mean_reward = sum_reward / n;
    rec.mean_quality = sum_quality / n;
    rec.mean_comm_energy = sum_comm / n;
    rec.mean_compute_cost = sum_comp / n;
    rec.critic1_loss = sum_l1 / u;
    rec.critic2_loss = sum_l2 / u;
    rec.actor_loss = sum_la / u;
    rec.alpha_loss = sum_lalpha / u;
    rec.alpha = agent.alpha();
    rec.ref_upper = sum_up / n;
    rec.ref_benchmark = sum_bm / n;
    rec.ref_random = sum_rnd / n;

    detail::require_finite(rec.mean_reward, "mean_reward", epoch);
    detail::require_finite(rec.mean_quality, "mean_quality", epoch);
    detail::require_finite(rec.mean_comm_energy, "mean_comm_energy_j", epoch);
    detail::require_finite(rec.mean_compute_cost, "mean_compute_cost", epoch);
    detail::require_finite(rec.critic1_loss, "critic1_loss", epoch);
    detail::require_finite(rec.critic2_loss, "critic2_loss", epoch);
    detail::require_finite(rec.actor_loss, "actor_loss", epoch);
    detail::require_finite(rec.alpha_loss, "alpha_loss", epoch);
    detail::require_finite(rec.alpha, "alpha", epoch);
    detail::require_finite(rec.ref_upper, "ref_upper", epoch);
    detail::require_finite(rec.ref_benchmark, "ref_benchmark", epoch);
    detail::require_finite(rec.ref_random, "ref_random", epoch);

    csv << metrics_row(rec) << '\n';
    csv.flush();
    if (!csv) throw IoError("write failed: " + result.metrics_path);
    result.metrics.push_back(rec);
  }

  agent.save(result.checkpoint_path);
  return result;
}

struct PolicyEval {
  double mean = 0.0;
  double final_window = 0.0;
};

struct EvalReport {
  std::array<PolicyEval, 5> by_policy;  // indexed by PolicyKind order
  int episodes = 0;

  const PolicyEval& operator[](PolicyKind k) const {
    return by_policy[static_cast<std::size_t>(k)];
  }
};

// Greedy evaluation of a trained agent against the four references, all five
// policies facing identical task and channel draws per episode (common
// random numbers). Quality noise uses eval_sigma (the oracle is always
// noise-free by contract).
inline EvalReport evaluate(const SacAgent& agent, const RunConfig& cfg) {
  cfg.validate();
  const Scenario base = build_scenario(cfg.scenario, cfg.seed);
  if (agent.state_dim() != 3 + 5 * base.device_count() ||
      agent.action_count() != base.device_count())
    throw CheckpointMismatch(
        "checkpoint dimensions do not match the configured scenario");

  RewardParams eval_params = cfg.reward;
  eval_params.sigma = cfg.eval_sigma;
  const RewardParams quiet = cfg.reward.noise_free();

  SeededRng root(cfg.seed);
  SeededRng greedy_dummy = root.derive(0xD00D);  // Greedy never draws from it

  const int n_policies = 5;
  std::array<double, 5> total{};
  std::array<double, 5> window_total{};
  const int window =
      std::max(1, static_cast<int>(std::ceil(cfg.final_window_frac *
                                             cfg.eval_episodes)));
  const int window_start = cfg.eval_episodes - window;

  for (int ep = 0; ep < cfg.eval_episodes; ++ep) {
    SeededRng world =
        root.derive(stream::kEvalWorld).derive(static_cast<std::uint64_t>(ep));
    // Mirrors env.reset: task first, then channels.
    const Task task = sample_task(base, world);
    const Scenario sc = resample_channels(base, world);
    SeededRng rnd_rng = root.derive(stream::kEvalRandom)
                            .derive(static_cast<std::uint64_t>(ep));

    std::array<double, 5> episode{};
    for (int p = 0; p < n_policies; ++p) {
      const PolicyKind kind = kAllPolicies[p];
      SeededRng noise = root.derive(stream::kEvalNoise)
                            .derive(static_cast<std::uint64_t>(ep))
                            .derive(static_cast<std::uint64_t>(p));
      double reward = 0.0;
      switch (kind) {
        case PolicyKind::Sac:
          for (std::size_t d = 0; d < task.offload_order.size(); ++d) {
            const StateVector s = encode_state(task, sc, d);
            const Action a =
                agent.select_action(s, ActionMode::Greedy, greedy_dummy);
            reward += offload_outcome(task, sc, a.device_index, eval_params,
                                      &noise, d)
                          .reward;
          }
          break;
        case PolicyKind::Random:
          for (std::size_t d = 0; d < task.offload_order.size(); ++d) {
            const Action a = random_policy(sc.device_count(), rnd_rng);
            reward += offload_outcome(task, sc, a.device_index, eval_params,
                                      &noise, d)
                          .reward;
          }
          break;
        case PolicyKind::Benchmark:
          reward = benchmark_reward(task, sc, eval_params, &noise).reward;
          break;
        case PolicyKind::UpperBound:
          reward = upper_bound_reward(task, sc, eval_params, &noise).reward;
          break;
        case PolicyKind::Oracle:
          for (std::size_t d = 0; d < task.offload_order.size(); ++d)
            reward += oracle_select(task, sc, quiet, d).second.reward;
          break;
      }
      episode[static_cast<std::size_t>(p)] = reward;
    }
    for (int p = 0; p < n_policies; ++p) {
      total[static_cast<std::size_t>(p)] += episode[static_cast<std::size_t>(p)];
      if (ep >= window_start)
        window_total[static_cast<std::size_t>(p)] +=
            episode[static_cast<std::size_t>(p)];
    }
  }

  EvalReport report;
  report.episodes = cfg.eval_episodes;
  for (int p = 0; p < n_policies; ++p) {
    report.by_policy[static_cast<std::size_t>(p)].mean =
        total[static_cast<std::size_t>(p)] / cfg.eval_episodes;
    report.by_policy[static_cast<std::size_t>(p)].final_window =
        window_total[static_cast<std::size_t>(p)] / window;
  }
  return report;
}

inline EvalReport evaluate(const std::string& checkpoint_path,
                           const RunConfig& cfg) {
  const SacAgent agent = SacAgent::load(checkpoint_path);
  return evaluate(agent, cfg);
}

inline void write_eval_report(const EvalReport& report,
                              const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << "policy,mean_reward,final_window_reward\n";
  for (PolicyKind kind : kAllPolicies)
    f << policy_name(kind) << ','
      << detail::format_double(report[kind].mean) << ','
      << detail::format_double(report[kind].final_window) << '\n';
  if (!f) throw IoError("write failed: " + path);
}

inline EvalReport read_eval_report(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open eval report: " + path);
  std::string line;
  if (!std::getline(f, line) ||
      (line != "policy,mean_reward,final_window_reward" &&
       line != "policy,mean_reward,final_window_reward\r"))
    throw IoError(path + " row 1: unexpected header");
  EvalReport report;
  int row = 1;
  int seen = 0;
  while (std::getline(f, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path + " row " + std::to_string(row);
    const auto fields = detail::split_csv_row(line);
    if (fields.size() != 3) throw IoError(where + ": expected 3 fields");
    bool matched = false;
    for (std::size_t p = 0; p < 5; ++p) {
      if (fields[0] == policy_name(kAllPolicies[p])) {
        report.by_policy[p].mean = detail::parse_double(fields[1], where);
        report.by_policy[p].final_window =
            detail::parse_double(fields[2], where);
        matched = true;
        ++seen;
        break;
      }
    }
    if (!matched) throw IoError(where + ": unknown policy '" + fields[0] + "'");
  }
  if (seen != 5) throw IoError(path + ": expected 5 policy rows");
  return report;
}

// Plot-ready series: (a) reward vs epoch with the three reference lines,
// (b) the average/final bar table. The oracle has no per-epoch line in the
// metrics CSV, so its bar-table row comes from an eval report; without one
// the table carries the four curve-backed policies.
inline void emit_plot_data(const std::string& metrics_path,
                           const std::string& out_dir,
                           const std::string& eval_report_path = "",
                           double final_window_frac = 0.1) {
  const std::vector<MetricsRecord> records = read_metrics_csv(metrics_path);
  if (records.empty()) throw IoError(metrics_path + ": no data rows");
  detail::ensure_dir(out_dir);

  const std::string series_path =
      (std::filesystem::path(out_dir) / kRewardSeriesFileName).string();
  std::ofstream series(series_path, std::ios::trunc);
  if (!series) throw IoError("cannot open for writing: " + series_path);
  series << "epoch,sac,upper_bound,benchmark,random\n";
  for (const MetricsRecord& r : records)
    series << r.epoch << ',' << detail::format_double(r.mean_reward) << ','
           << detail::format_double(r.ref_upper) << ','
           << detail::format_double(r.ref_benchmark) << ','
           << detail::format_double(r.ref_random) << '\n';
  if (!series) throw IoError("write failed: " + series_path);

  const int window = std::max(
      1, static_cast<int>(std::ceil(final_window_frac *
                                    static_cast<double>(records.size()))));
  const std::size_t start = records.size() - static_cast<std::size_t>(window);
  auto avg_of = [&](auto field) {
    double all = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      all += field(records[i]);
      if (i >= start) tail += field(records[i]);
    }
    return std::pair<double, double>{all / static_cast<double>(records.size()),
                                     tail / static_cast<double>(window)};
  };

  const std::string bars_path =
      (std::filesystem::path(out_dir) / kRewardBarsFileName).string();
  std::ofstream bars(bars_path, std::ios::trunc);
  if (!bars) throw IoError("cannot open for writing: " + bars_path);
  bars << "policy,average_reward,final_reward\n";
  const auto [sac_avg, sac_fin] =
      avg_of([](const MetricsRecord& r) { return r.mean_reward; });
  const auto [up_avg, up_fin] =
      avg_of([](const MetricsRecord& r) { return r.ref_upper; });
  const auto [bm_avg, bm_fin] =
      avg_of([](const MetricsRecord& r) { return r.ref_benchmark; });
  const auto [rnd_avg, rnd_fin] =
      avg_of([](const MetricsRecord& r) { return r.ref_random; });
  bars << "sac," << detail::format_double(sac_avg) << ','
       << detail::format_double(sac_fin) << '\n';
  bars << "random," << detail::format_double(rnd_avg) << ','
       << detail::format_double(rnd_fin) << '\n';
  bars << "benchmark," << detail::format_double(bm_avg) << ','
       << detail::format_double(bm_fin) << '\n';
  bars << "upper_bound," << detail::format_double(up_avg) << ','
       << detail::format_double(up_fin) << '\n';
  if (!eval_report_path.empty()) {
    const EvalReport ev = read_eval_report(eval_report_path);
    bars << "oracle,"
         << detail::format_double(ev[PolicyKind::Oracle].mean) << ','
         << detail::format_double(ev[PolicyKind::Oracle].final_window) << '\n';
  }
  if (!bars) throw IoError("write failed: " + bars_path);
}

struct SweepRow {
  std::uint64_t seed = 0;
  EvalReport report;
};

// Independent runs on consecutive seeds; each run trains, evaluates, and
// leaves its artifacts in out_dir/seed_<s>/.
inline std::vector<SweepRow> sweep(const RunConfig& base, int seeds) {
  if (seeds < 1) throw ConfigError("seeds: must be >= 1");
  base.validate();
  detail::ensure_dir(base.out_dir);
  std::vector<SweepRow> rows;
  for (int i = 0; i < seeds; ++i) {
    RunConfig cfg = base;
    cfg.seed = base.seed + static_cast<std::uint64_t>(i);
    cfg.out_dir = (std::filesystem::path(base.out_dir) /
                   ("seed_" + std::to_string(cfg.seed)))
                      .string();
    const TrainResult tr = train(cfg);
    const EvalReport report = evaluate(tr.checkpoint_path, cfg);
    write_eval_report(report,
                      (std::filesystem::path(cfg.out_dir) / kEvalReportFileName)
                          .string());
    rows.push_back(SweepRow{cfg.seed, report});
  }
  const std::string summary_path =
      (std::filesystem::path(base.out_dir) / kSweepSummaryFileName).string();
  std::ofstream f(summary_path, std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + summary_path);
  f << "seed,sac_mean,random_mean,benchmark_mean,upper_bound_mean,oracle_mean\n";
  for (const SweepRow& row : rows)
    f << row.seed << ','
      << detail::format_double(row.report[PolicyKind::Sac].mean) << ','
      << detail::format_double(row.report[PolicyKind::Random].mean) << ','
      << detail::format_double(row.report[PolicyKind::Benchmark].mean) << ','
      << detail::format_double(row.report[PolicyKind::UpperBound].mean) << ','
      << detail::format_double(row.report[PolicyKind::Oracle].mean) << '\n';
  if (!f) throw IoError("write failed: " + summary_path);
  return rows;
}

}  // namespace moesac
