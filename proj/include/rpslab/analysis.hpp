#pragma once

#include <array>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rpslab/modes.hpp"
#include "rpslab/step_log.hpp"

namespace rpslab {

// Normative segmentation thresholds (also documented in the README table).
// All overridable; the defaults are what the stage oracle tests pin down.
struct StageThresholds {
  double stage1_epsilon = 0.5;         // exploration dominates above this
  double stage1_entropy_slack = 0.15;  // bits below log2(3) that still count as random
  double stage2_lead = 0.1;            // one agent's mean ahead of the rest
  double stage2_repetition = 0.6;
  double stage3_mean_bound = 0.1;      // all |mean| below -> near-zero play
  int stage3_min_run = 3;              // consecutive near-zero episodes required
  double stage3a_repetition = 0.8;     // segment-mean repetition above -> 3a
  int min_segment = 3;                 // run-length smoothing floor
  double period_match = 0.9;           // lag-match fraction declaring a period
};

struct EpisodeStats {
  int run_id = 0;
  double learning_rate = 0.0;
  int episode = 0;
  std::string mode_tag;
  std::array<double, kNumAgents> mean_reward{};
  std::array<double, kNumAgents> repetition_rate{};
  std::array<double, kNumAgents> entropy_bits{};
  std::array<int, kNumAgents> big_win_count{};  // steps with reward exactly 2
  std::array<double, kNumAgents> epsilon{};
  std::array<std::optional<int>, kNumAgents> dominant_period{};
  double displacement_index = 0.0;  // mean cheater reward minus fair; 0 in fair mode
};

// Stats over one episode's records (same run and episode, steps strictly
// increasing; throws otherwise). Periods are only probed when the episode has
// at least 3 x max_period steps. use_shaped switches every reward-derived
// field to the shaped column.
EpisodeStats episode_stats(std::span<const StepRecord> records, int max_period,
                           double period_match = 0.9, bool use_shaped = false);

// Per-episode stats for one whole run; episodes must be contiguous from 0.
std::vector<EpisodeStats> run_episode_stats(std::span<const StepRecord> records,
                                            int max_period, double period_match = 0.9,
                                            bool use_shaped = false);

// Smallest p <= max_period with seq[t] == seq[t-p] for at least
// match_threshold of the valid t; nullopt when none qualifies.
// Throws std::invalid_argument when seq is shorter than 3 x max_period.
std::optional<int> detect_period(std::span<const Action> seq, int max_period,
                                 double match_threshold = 0.9);

enum class Stage { Stage1, Stage2, Stage3a, Stage3b };
const char* stage_name(Stage stage);  // "1", "2", "3a", "3b"

struct StageSegment {
  Stage stage = Stage::Stage2;
  int first_episode = 0;
  int last_episode = 0;

  bool operator==(const StageSegment&) const = default;
};

// Per-episode classification, then run-length smoothing (segments shorter
// than min_segment merge into their neighbor). Stage 1 wins while
// exploration dominates (low-entropy evidence absent); a near-zero stretch of
// stage3_min_run episodes or more becomes Stage 3 (3a when some agent's
// segment-mean repetition exceeds the 3a threshold, 3b otherwise); everything
// else is Stage 2. Segments partition the episode axis contiguously.
std::vector<StageSegment> label_stages(const std::vector<EpisodeStats>& series,
                                       const StageThresholds& th = {});

struct Quartiles {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};
// Five-number summary with linear-interpolation quantiles; throws on empty.
Quartiles quartiles(std::vector<double> values);

struct AnalysisOptions {
  std::string input_dir;
  std::string report_path;
  std::string plot_dir;
  int max_period = 6;
  bool use_shaped = false;
  StageThresholds thresholds;
};

// Full offline pass: reads every run_*.csv under input_dir, writes the text
// report, stages.csv, one reward-distribution CSV per learning rate and the
// displacement/big-win series. Returns 0 on success, nonzero after printing
// row-level diagnostics. Output bytes depend only on the input logs.
int run_analysis(const AnalysisOptions& opt, std::ostream& diagnostics);

}  // namespace rpslab
