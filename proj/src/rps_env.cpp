#include "rpslab/rps_env.hpp"

#include <cstdlib>
#include <stdexcept>

namespace rpslab {

Action action_from_code(int code) {
  if (code < 0 || code >= kNumActions) {
    throw std::invalid_argument("action code out of range: " + std::to_string(code));
  }
  return static_cast<Action>(code);
}

const char* action_name(Action a) {
  switch (a) {
    case Action::Rock: return "Rock";
    case Action::Paper: return "Paper";
    case Action::Scissors: return "Scissors";
  }
  return "?";
}

RewardVector RewardVector::from_halves(const std::array<int, kNumAgents>& halves) {
  RewardVector r;
  r.halves_ = halves;
  return r;
}

std::string RewardVector::decimal(int agent) const {
  const int h = halves_[agent];
  const int a = std::abs(h);
  std::string s = h < 0 ? "-" : "";
  s += std::to_string(a / 2);
  if (a % 2) s += ".5";
  return s;
}

Outcome classify_outcome(const JointAction& joint) {
  const Action a = joint[0], b = joint[1], c = joint[2];
  if (a == b && b == c) return {Outcome::Kind::AllSame, -1};
  if (a != b && b != c && a != c) return {Outcome::Kind::AllDistinct, -1};

  // Exactly two agree; find the odd one out.
  int lone = a == b ? 2 : (a == c ? 1 : 0);
  const Action lone_action = joint[lone];
  const Action pair_action = joint[(lone + 1) % kNumAgents];
  if (beats(lone_action, pair_action)) return {Outcome::Kind::SingleWinner, lone};
  return {Outcome::Kind::SingleLoser, lone};
}

RewardVector reward(const JointAction& joint) {
  const Outcome out = classify_outcome(joint);
  std::array<int, kNumAgents> halves{0, 0, 0};
  switch (out.kind) {
    case Outcome::Kind::AllSame:
    case Outcome::Kind::AllDistinct:
      break;
    case Outcome::Kind::SingleWinner:  // winner +2, the pair -1 each
      halves = {-2, -2, -2};
      halves[out.agent] = 4;
      break;
    case Outcome::Kind::SingleLoser:  // loser -1, the pair +0.5 each
      halves = {1, 1, 1};
      halves[out.agent] = -2;
      break;
  }
  return RewardVector::from_halves(halves);
}

GameHistory::GameHistory(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("history capacity must be >= 1");
}

void GameHistory::push(const JointAction& joint) {
  if (fill_count() == capacity_) window_.pop_front();
  window_.push_back(joint);
}

std::optional<JointAction> GameHistory::at_age(int age) const {
  if (age < 0 || age >= fill_count()) return std::nullopt;
  return window_[window_.size() - 1 - static_cast<std::size_t>(age)];
}

}  // namespace rpslab
