#pragma once

#include <array>
#include <optional>
#include <string>

#include "rpslab/rng.hpp"
#include "rpslab/rps_env.hpp"

namespace rpslab {

// Experimental regime for one campaign. The cheating pair and the fair agent
// partition {0,1,2}; the designated roles are immutable for the life of a
// run and echoed into every log row via tag().
struct Mode {
  enum class Kind { Fair, ExplicitComm, ImplicitReward };

  // ImplicitReward only. Denoised: cheaters get +1 when the fair agent loses
  // or ties, -1 when it wins. NegatedFair: cheaters get exactly -r_fair
  // (ablation variant).
  enum class Shaping { Denoised, NegatedFair };

  Kind kind = Kind::Fair;
  int fair_index = 0;
  std::array<int, 2> cheaters{1, 2};
  int sender = 1;    // ExplicitComm only
  int receiver = 2;  // ExplicitComm only
  bool fair_is_random = false;
  Shaping shaping = Shaping::Denoised;

  void validate() const;  // throws std::invalid_argument

  bool has_cheaters() const { return kind != Kind::Fair; }
  bool is_cheater(int agent) const {
    return has_cheaters() && (agent == cheaters[0] || agent == cheaters[1]);
  }

  // Compact token for the log's mode column, e.g. "fair",
  // "explicit-f0-s1-r2", "implicit-f0-c12-rand". Round-trips via parse_mode_tag.
  std::string tag() const;

  bool operator==(const Mode&) const = default;
};

Mode parse_mode_tag(const std::string& tag);  // throws std::invalid_argument

// Per-step agent evaluation plan. In ExplicitComm the sender selects first,
// its committed action travels to the receiver as a message, and the fair
// agent selects independently; all actions are revealed to the environment
// simultaneously.
struct StepPlan {
  std::array<int, kNumAgents> order{0, 1, 2};
  std::optional<int> sender;
  std::optional<int> receiver;
  bool shaped = false;
};

StepPlan step_order(const Mode& mode);

// Fair/ExplicitComm: identity. ImplicitReward: the fair agent keeps its raw
// reward; each cheater's reward is replaced per Mode::Shaping. Training
// consumes shaped values; logs keep both raw and shaped.
RewardVector shape_rewards(const Mode& mode, const RewardVector& raw);

// Uniform draw from the control agent's dedicated stream.
Action random_policy(Rng& rng);

}  // namespace rpslab
