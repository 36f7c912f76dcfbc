#include "rpslab/modes.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace rpslab {

namespace {

bool valid_agent(int i) { return i >= 0 && i < kNumAgents; }

}  // namespace

void Mode::validate() const {
  if (kind == Kind::Fair) {
    if (fair_is_random) {
      throw std::invalid_argument("fair mode has no cheaters; control runs need mode 1 or 2");
    }
    return;
  }
  if (!valid_agent(fair_index) || !valid_agent(cheaters[0]) || !valid_agent(cheaters[1])) {
    throw std::invalid_argument("agent indices must be in {0,1,2}");
  }
  std::array<int, 3> all{fair_index, cheaters[0], cheaters[1]};
  std::sort(all.begin(), all.end());
  if (all != std::array<int, 3>{0, 1, 2}) {
    throw std::invalid_argument("fair agent and cheating pair must partition {0,1,2}");
  }
  if (kind == Kind::ExplicitComm) {
    if (sender == receiver || !is_cheater(sender) || !is_cheater(receiver)) {
      throw std::invalid_argument("sender/receiver must be the two distinct cheaters");
    }
  }
}

std::string Mode::tag() const {
  std::string t;
  switch (kind) {
    case Kind::Fair:
      return "fair";
    case Kind::ExplicitComm:
      t = "explicit-f" + std::to_string(fair_index) + "-s" + std::to_string(sender) +
          "-r" + std::to_string(receiver);
      break;
    case Kind::ImplicitReward:
      t = "implicit-f" + std::to_string(fair_index) + "-c" + std::to_string(cheaters[0]) +
          std::to_string(cheaters[1]);
      if (shaping == Shaping::NegatedFair) t += "-neg";
      break;
  }
  if (fair_is_random) t += "-rand";
  return t;
}

Mode parse_mode_tag(const std::string& tag) {
  auto fail = [&] { throw std::invalid_argument("bad mode tag: " + tag); };

  Mode m;
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos <= tag.size()) {
    const std::size_t dash = tag.find('-', pos);
    parts.push_back(tag.substr(pos, dash == std::string::npos ? dash : dash - pos));
    if (dash == std::string::npos) break;
    pos = dash + 1;
  }
  if (parts.empty()) fail();

  auto digit = [&](const std::string& s, std::size_t i) {
    if (i >= s.size() || s[i] < '0' || s[i] > '2') fail();
    return s[i] - '0';
  };

  std::size_t next = 1;
  if (parts[0] == "fair") {
    m.kind = Mode::Kind::Fair;
  } else if (parts[0] == "explicit") {
    m.kind = Mode::Kind::ExplicitComm;
    if (parts.size() < 4) fail();
    if (parts[1].size() != 2 || parts[1][0] != 'f') fail();
    m.fair_index = digit(parts[1], 1);
    if (parts[2].size() != 2 || parts[2][0] != 's') fail();
    m.sender = digit(parts[2], 1);
    if (parts[3].size() != 2 || parts[3][0] != 'r') fail();
    m.receiver = digit(parts[3], 1);
    m.cheaters = {std::min(m.sender, m.receiver), std::max(m.sender, m.receiver)};
    next = 4;
  } else if (parts[0] == "implicit") {
    m.kind = Mode::Kind::ImplicitReward;
    if (parts.size() < 3) fail();
    if (parts[1].size() != 2 || parts[1][0] != 'f') fail();
    m.fair_index = digit(parts[1], 1);
    if (parts[2].size() != 3 || parts[2][0] != 'c') fail();
    m.cheaters = {digit(parts[2], 1), digit(parts[2], 2)};
    next = 3;
  } else {
    fail();
  }

  for (; next < parts.size(); ++next) {
    if (parts[next] == "rand") {
      m.fair_is_random = true;
    } else if (parts[next] == "neg" && m.kind == Mode::Kind::ImplicitReward) {
      m.shaping = Mode::Shaping::NegatedFair;
    } else {
      fail();
    }
  }
  m.validate();
  return m;
}

StepPlan step_order(const Mode& mode) {
  mode.validate();
  StepPlan plan;
  switch (mode.kind) {
    case Mode::Kind::Fair:
      break;
    case Mode::Kind::ExplicitComm:
      plan.order = {mode.sender, mode.receiver, mode.fair_index};
      plan.sender = mode.sender;
      plan.receiver = mode.receiver;
      break;
    case Mode::Kind::ImplicitReward:
      plan.shaped = true;
      break;
  }
  return plan;
}

RewardVector shape_rewards(const Mode& mode, const RewardVector& raw) {
  if (mode.kind != Mode::Kind::ImplicitReward) return raw;

  const int fair_halves = raw.halves(mode.fair_index);
  int cheater_halves;
  if (mode.shaping == Mode::Shaping::Denoised) {
    cheater_halves = fair_halves <= 0 ? 2 : -2;  // +1 on a fair loss or tie, -1 on a win
  } else {
    cheater_halves = -fair_halves;
  }
  std::array<int, kNumAgents> shaped{};
  shaped[mode.fair_index] = fair_halves;
  shaped[mode.cheaters[0]] = cheater_halves;
  shaped[mode.cheaters[1]] = cheater_halves;
  return RewardVector::from_halves(shaped);
}

Action random_policy(Rng& rng) { return static_cast<Action>(rng.uniform_index(kNumActions)); }

}  // namespace rpslab
