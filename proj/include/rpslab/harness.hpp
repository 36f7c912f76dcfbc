#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "rpslab/agent.hpp"
#include "rpslab/config.hpp"
#include "rpslab/modes.hpp"
#include "rpslab/step_log.hpp"

namespace rpslab {

enum class Scale { Desk, PaperReplication };
const char* scale_name(Scale scale);
Scale scale_from_name(const std::string& name);

// One campaign: runs_per_lr independent runs per learning rate, each a fresh
// set of agents trained for episodes x steps_per_episode games. `agent` is
// the template every seat starts from; learning_rate and role are assigned
// per run.
struct ExperimentConfig {
  Mode mode;
  Scale scale = Scale::Desk;
  int runs_per_lr = 2;
  int control_runs_per_lr = 5;
  std::vector<double> learning_rates{0.005};
  int episodes = 20;
  int steps_per_episode = 100;
  AgentConfig agent;
  std::uint64_t base_seed = 1;
  std::string output_dir = "logs";

  static ExperimentConfig desk();
  static ExperimentConfig paper_replication();
  static ExperimentConfig preset(Scale scale);

  // Applies "[experiment]"/"[agent]" keys from a parsed config file. The
  // scale key must be resolved into a preset by the caller beforehand;
  // unknown keys are an error.
  void apply(const KeyValues& kv);

  void validate() const;  // throws std::invalid_argument

  // Config echo in the file format itself, reusable as a config file.
  std::string echo() const;
};

// Builds a config from a parsed file: the scale key (default desk) picks the
// preset, then the remaining keys override it. Validates before returning.
ExperimentConfig load_experiment_config(const KeyValues& kv);

struct CampaignAccounting {
  int runs = 0;            // runs_per_lr x |learning_rates|
  long long games = 0;     // runs x episodes x steps_per_episode
  int control_runs = 0;    // control_runs_per_lr x |learning_rates|
};
CampaignAccounting campaign_accounting(const ExperimentConfig& cfg);
std::string accounting_echo(const CampaignAccounting& acc);

// Seeds for one seat, derived from (base_seed, lr index, run index, agent
// index, stream purpose).
struct AgentSeeds {
  std::uint64_t init = 0, explore = 0, sample = 0, policy = 0;
};
AgentSeeds agent_seeds(const ExperimentConfig& cfg, int lr_index, int run_index,
                       int agent_index);

// Fresh players for one run. The fair seat becomes a random control when
// mode.fair_is_random; in ExplicitComm the sender/receiver seats get their
// message roles; every other seat is a plain learner.
std::vector<std::unique_ptr<Player>> make_players(const ExperimentConfig& cfg, int lr_index,
                                                  int run_index);

// Plays steps_per_episode games: per step, agents select in plan order (the
// sender's committed action travels to the receiver), raw rewards follow the
// payoff table, shaped rewards follow the mode, the history advances, and
// every agent observes its shaped reward (terminal on the last step).
// History carries across episodes within a run.
std::vector<StepRecord> play_episode(const Mode& mode,
                                     std::vector<std::unique_ptr<Player>>& players,
                                     GameHistory& history, int run_id, double learning_rate,
                                     int episode_index, int steps);

struct RunResult {
  int run_id = 0;
  int lr_index = 0;
  int run_index = 0;
  bool completed = false;
  std::string error;     // diagnostic when not completed
  std::string log_path;  // relative to output_dir
};

// Executes one run end to end and writes its log file.
RunResult run_single(const ExperimentConfig& cfg, int lr_index, int run_index);

// All runs of the campaign (optionally across parallel workers), then the
// manifest. Returns the per-run results in run_id order.
std::vector<RunResult> run_campaign(const ExperimentConfig& cfg, int jobs = 1);

// GameHistory depth such that the oldest stacked frame still sees a full
// window: window + frames - 1.
int history_capacity(const AgentConfig& agent);

}  // namespace rpslab
