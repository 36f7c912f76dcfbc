#pragma once

#include <array>
#include <deque>
#include <optional>
#include <string>

namespace rpslab {

constexpr int kNumAgents = 3;
constexpr int kNumActions = 3;

// Canonical action codes, fixed in the logs and on the wire:
// 0 = Rock, 1 = Paper, 2 = Scissors.
enum class Action : int { Rock = 0, Paper = 1, Scissors = 2 };

constexpr int action_code(Action a) { return static_cast<int>(a); }
Action action_from_code(int code);  // throws std::invalid_argument outside {0,1,2}
const char* action_name(Action a);

// Dominance: Paper > Rock, Rock > Scissors, Scissors > Paper.
constexpr bool beats(Action a, Action b) {
  return (3 + action_code(a) - action_code(b)) % 3 == 1;
}

// One move per agent per step; the entire environment state.
using JointAction = std::array<Action, kNumAgents>;

// The four payoff regimes of the three-player table. `agent` is the
// odd-one-out index for SingleWinner/SingleLoser, -1 otherwise.
struct Outcome {
  enum class Kind { AllSame, AllDistinct, SingleWinner, SingleLoser };
  Kind kind = Kind::AllSame;
  int agent = -1;

  bool operator==(const Outcome&) const = default;
};

// Per-step payoff triple stored as exact halves (value = halves / 2), so
// zero-sum and payoff-table checks are integer arithmetic. Converted to
// floating point only at the network boundary.
class RewardVector {
 public:
  RewardVector() = default;
  static RewardVector from_halves(const std::array<int, kNumAgents>& halves);

  int halves(int agent) const { return halves_[agent]; }
  double value(int agent) const { return halves_[agent] / 2.0; }
  int sum_halves() const { return halves_[0] + halves_[1] + halves_[2]; }

  // Exact decimal rendering for the logs: "-1", "0", "0.5", "2", ...
  std::string decimal(int agent) const;

  bool operator==(const RewardVector&) const = default;

 private:
  std::array<int, kNumAgents> halves_{0, 0, 0};
};

// Total over all 27 joint actions.
Outcome classify_outcome(const JointAction& joint);

// Payoff rule: AllSame/AllDistinct pay nothing; a lone winner takes 2 from
// the pair (-1 each); a lone loser pays 1, split between the pair (+0.5
// each). Every vector sums to zero.
RewardVector reward(const JointAction& joint);

// Rolling FIFO window of past joint actions. Oldest entries evict first;
// slots beyond fill_count read out as "no action yet" (all-zero one-hot).
class GameHistory {
 public:
  explicit GameHistory(int capacity);  // throws std::invalid_argument if < 1

  void push(const JointAction& joint);

  int capacity() const { return capacity_; }
  int fill_count() const { return static_cast<int>(window_.size()); }

  // age 0 is the newest entry; nullopt once age >= fill_count.
  std::optional<JointAction> at_age(int age) const;

 private:
  std::deque<JointAction> window_;
  int capacity_;
};

}  // namespace rpslab
