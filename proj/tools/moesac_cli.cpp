// Command-line front end: train / eval / sweep / plot-data.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "moesac/config.hpp"
#include "moesac/errors.hpp"
#include "moesac/harness.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"MoE edge-offloading simulator with a discrete soft actor-critic"};
  app.require_subcommand(1);

  std::string config_path, out_dir, checkpoint_path, metrics_path, eval_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int sweep_seeds = 5;
  double final_window = 0.1;

  CLI::App* train_cmd = app.add_subcommand("train", "train the agent");
  train_cmd->add_option("--config", config_path, "config file (JSON)")
      ->required();
  train_cmd->add_option("--seed", seed, "seed override")
      ->each([&](const std::string&) { seed_set = true; });
  train_cmd->add_option("--out", out_dir, "output directory override");

  CLI::App* eval_cmd =
      app.add_subcommand("eval", "evaluate a checkpoint against the baselines");
  eval_cmd->add_option("--checkpoint", checkpoint_path, "MOESAC1 checkpoint")
      ->required();
  eval_cmd->add_option("--config", config_path, "config file (JSON)")
      ->required();
  eval_cmd->add_option("--out", out_dir, "output directory override");

  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "train+eval over consecutive seeds");
  sweep_cmd->add_option("--config", config_path, "config file (JSON)")
      ->required();
  sweep_cmd->add_option("--seeds", sweep_seeds, "number of seeds")
      ->check(CLI::PositiveNumber);

  CLI::App* plot_cmd = app.add_subcommand(
      "plot-data", "emit plot-ready series from a metrics CSV");
  plot_cmd->add_option("--metrics", metrics_path, "metrics.csv from train")
      ->required();
  plot_cmd->add_option("--out", out_dir, "output directory")->required();
  plot_cmd->add_option("--eval", eval_path,
                       "eval_report.csv; fills the oracle bar-table row");
  plot_cmd->add_option("--final-window", final_window,
                       "fraction of trailing epochs in the 'final' column");

  app.parse(argc, argv);

  if (train_cmd->parsed()) {
    moesac::RunConfig cfg = moesac::load_config(config_path);
    if (seed_set) cfg.seed = seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    cfg.validate();
    const moesac::TrainResult result = moesac::train(cfg);
    std::cout << "trained " << cfg.epochs << " epochs\n"
              << "metrics:    " << result.metrics_path << '\n'
              << "checkpoint: " << result.checkpoint_path << '\n';
    return moesac::exit_code::kOk;
  }

  if (eval_cmd->parsed()) {
    moesac::RunConfig cfg = moesac::load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    cfg.validate();
    const moesac::EvalReport report =
        moesac::evaluate(checkpoint_path, cfg);
    moesac::detail::ensure_dir(cfg.out_dir);
    const std::string report_path =
        (std::filesystem::path(cfg.out_dir) / moesac::kEvalReportFileName)
            .string();
    moesac::write_eval_report(report, report_path);
    for (moesac::PolicyKind kind : moesac::kAllPolicies)
      std::cout << moesac::policy_name(kind) << ": mean "
                << report[kind].mean << ", final window "
                << report[kind].final_window << '\n';
    std::cout << "report: " << report_path << '\n';
    return moesac::exit_code::kOk;
  }

  if (sweep_cmd->parsed()) {
    const moesac::RunConfig cfg = moesac::load_config(config_path);
    const auto rows = moesac::sweep(cfg, sweep_seeds);
    for (const moesac::SweepRow& row : rows)
      std::cout << "seed " << row.seed << ": sac "
                << row.report[moesac::PolicyKind::Sac].mean << ", random "
                << row.report[moesac::PolicyKind::Random].mean << ", benchmark "
                << row.report[moesac::PolicyKind::Benchmark].mean << '\n';
    std::cout << "summary: "
              << (std::filesystem::path(cfg.out_dir) /
                  moesac::kSweepSummaryFileName)
                     .string()
              << '\n';
    return moesac::exit_code::kOk;
  }

  moesac::emit_plot_data(metrics_path, out_dir, eval_path, final_window);
  std::cout << "wrote " << moesac::kRewardSeriesFileName << " and "
            << moesac::kRewardBarsFileName << " under " << out_dir << '\n';
  return moesac::exit_code::kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::ParseError& e) {
    CLI::App dummy;
    return dummy.exit(e);
  } catch (const moesac::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return moesac::exit_code::kConfig;
  } catch (const moesac::CheckpointMismatch& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return moesac::exit_code::kConfig;
  } catch (const moesac::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return moesac::exit_code::kIo;
  } catch (const moesac::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return moesac::exit_code::kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return moesac::exit_code::kFailure;
  }
}
