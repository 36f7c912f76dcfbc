#pragma once

#include <array>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "rpslab/rps_env.hpp"

namespace rpslab {

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

// Exact halves from a reward string ("-1" -> -2, "0.5" -> 1, "2" -> 4).
int parse_halves(const std::string& s);

inline constexpr char kStepLogHeader[] =
    "run_id,lr,episode,step,a0,a1,a2,r0,r1,r2,sr0,sr1,sr2,eps0,eps1,eps2,msg,mode";

// One logged game. Raw rewards are re-derivable from the actions; shaped
// rewards are what the agents trained on. `message` is set only when a
// message actually travelled that step.
struct StepRecord {
  int run_id = 0;
  double learning_rate = 0.0;
  int episode = 0;
  int step = 0;
  JointAction actions{Action::Rock, Action::Rock, Action::Rock};
  RewardVector raw;
  RewardVector shaped;
  std::array<double, kNumAgents> epsilon{0.0, 0.0, 0.0};
  std::optional<Action> message;
  std::string mode_tag;

  bool operator==(const StepRecord&) const = default;
};

std::string to_csv_row(const StepRecord& rec);
StepRecord parse_csv_row(const std::string& line);  // throws std::runtime_error

// Streaming per-run writer; emits the header on open, one row per append,
// '\n' endings throughout.
class StepLogWriter {
 public:
  explicit StepLogWriter(const std::string& path);

  void append(const StepRecord& rec);
  void close();  // flushes; throws std::runtime_error on a write failure

 private:
  std::string path_;
  std::ofstream out_;
};

void write_step_log(const std::string& path, const std::vector<StepRecord>& records);

// Reads a whole log back, validating the header and every row; errors carry
// "path:line" positions.
std::vector<StepRecord> read_step_log(const std::string& path);

}  // namespace rpslab
