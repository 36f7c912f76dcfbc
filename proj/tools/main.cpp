#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rpslab/analysis.hpp"
#include "rpslab/harness.hpp"

namespace {

struct TrainArgs {
  std::string config_path;
  std::string mode;
  std::vector<double> lrs;
  int episodes = -1;
  int steps = -1;
  int runs = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string scale;
  bool fair_random = false;
  std::string out_dir;
  bool dry_run = false;
  int jobs = 1;
};

rpslab::ExperimentConfig resolve_train_config(const TrainArgs& args) {
  using rpslab::ExperimentConfig;
  using rpslab::KeyValues;
  using rpslab::Mode;
  using rpslab::Scale;

  KeyValues kv;
  if (!args.config_path.empty()) kv = KeyValues::parse_file(args.config_path);

  Scale scale = Scale::Desk;
  if (const auto s = kv.find("experiment.scale")) scale = rpslab::scale_from_name(*s);
  if (!args.scale.empty()) scale = rpslab::scale_from_name(args.scale);

  ExperimentConfig cfg = ExperimentConfig::preset(scale);
  cfg.apply(kv);

  if (!args.mode.empty()) {
    if (args.mode == "fair") cfg.mode.kind = Mode::Kind::Fair;
    else if (args.mode == "explicit") cfg.mode.kind = Mode::Kind::ExplicitComm;
    else if (args.mode == "implicit") cfg.mode.kind = Mode::Kind::ImplicitReward;
    else throw CLI::ValidationError("--mode", "expected fair, explicit or implicit");
  }
  if (args.fair_random) cfg.mode.fair_is_random = true;
  if (!args.lrs.empty()) cfg.learning_rates = args.lrs;
  if (args.episodes >= 0) cfg.episodes = args.episodes;
  if (args.steps >= 0) cfg.steps_per_episode = args.steps;
  if (args.seed_set) cfg.base_seed = args.seed;
  if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;

  if (args.runs >= 0) {
    cfg.runs_per_lr = args.runs;
  } else if (cfg.mode.fair_is_random && scale == Scale::PaperReplication &&
             !kv.contains("experiment.runs_per_lr")) {
    // Control campaigns at replication scale run 5 seeds per learning rate.
    cfg.runs_per_lr = cfg.control_runs_per_lr;
  }

  cfg.validate();
  return cfg;
}

int cmd_train(const TrainArgs& args) {
  const rpslab::ExperimentConfig cfg = resolve_train_config(args);
  if (args.dry_run) {
    std::cout << cfg.echo() << "\n"
              << rpslab::accounting_echo(rpslab::campaign_accounting(cfg));
    return 0;
  }
  const std::vector<rpslab::RunResult> results = rpslab::run_campaign(cfg, args.jobs);
  int failed = 0;
  for (const rpslab::RunResult& res : results) {
    if (!res.completed) {
      ++failed;
      std::cerr << "run " << res.run_id << " failed: " << res.error << "\n";
    }
  }
  std::cout << "completed " << (results.size() - static_cast<std::size_t>(failed)) << "/"
            << results.size() << " runs into " << cfg.output_dir << "\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-player rock-paper-scissors collusion lab"};
  app.require_subcommand(1);

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Run a seeded training campaign");
  train->add_option("--config", train_args.config_path, "Config file (key = value sections)");
  train->add_option("--mode", train_args.mode, "Regime: fair, explicit or implicit");
  train->add_option("--lr", train_args.lrs, "Learning rate(s), overriding the preset list");
  train->add_option("--episodes", train_args.episodes, "Episodes per run");
  train->add_option("--steps", train_args.steps, "Steps per episode");
  train->add_option("--runs", train_args.runs, "Runs per learning rate");
  train->add_option("--seed", train_args.seed, "Base seed")
      ->each([&](const std::string&) { train_args.seed_set = true; });
  train->add_option("--scale", train_args.scale, "Preset: desk or paper");
  train->add_flag("--fair-random", train_args.fair_random,
                  "Replace the fair seat with a uniform-random control");
  train->add_option("--out", train_args.out_dir, "Output directory for logs and manifest");
  train->add_flag("--dry-run", train_args.dry_run, "Echo config and accounting, no training");
  train->add_option("--jobs", train_args.jobs, "Parallel run workers")
      ->check(CLI::PositiveNumber);

  rpslab::AnalysisOptions an;
  CLI::App* analyze = app.add_subcommand("analyze", "Analyze a directory of run logs");
  analyze->add_option("--input", an.input_dir, "Directory holding run_*.csv")->required();
  analyze->add_option("--report", an.report_path, "Stage report output path")->required();
  analyze->add_option("--plot-data", an.plot_dir, "Directory for plot-ready CSVs")->required();
  analyze->add_option("--max-period", an.max_period, "Largest period to probe")
      ->check(CLI::PositiveNumber);
  analyze->add_flag("--shaped", an.use_shaped, "Analyze shaped instead of raw rewards");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(train_args);
    if (analyze->parsed()) return rpslab::run_analysis(an, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
