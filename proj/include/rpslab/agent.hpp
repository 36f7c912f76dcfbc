#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rpslab/modes.hpp"
#include "rpslab/net.hpp"
#include "rpslab/rng.hpp"
#include "rpslab/rps_env.hpp"

namespace rpslab {

enum class Role { Fair, CheatSender, CheatReceiver, Random };
const char* role_name(Role role);
Role role_from_name(const std::string& name);

struct AgentConfig {
  double learning_rate = 0.005;
  double gamma = 1.0;  // undiscounted return, bounded by the episode cutoff
  double epsilon_start = 1.0;
  double epsilon_min = 0.01;
  double epsilon_decay = 0.95;  // per episode
  int batch_size = 32;
  int buffer_capacity = 10000;
  int target_sync_every = 300;  // environment steps
  int frames = 3;
  int window = 20;
  std::vector<int> hidden{128, 9};
  Optimizer::Kind optimizer = Optimizer::Kind::Adam;
  Role role = Role::Fair;

  int base_input_dim() const { return frames * window * kNumAgents * kNumActions; }
  int input_dim() const { return base_input_dim() + (role == Role::CheatReceiver ? 1 : 0); }
  std::vector<int> layer_dims() const;  // {input, hidden..., 3}

  void validate() const;  // throws std::invalid_argument
};

using Observation = std::vector<double>;

struct Transition {
  Observation obs;
  Action action = Action::Rock;
  double reward = 0.0;  // post-shaping
  Observation next_obs;
  bool terminal = false;
};

// FIFO transition store; sampling is uniform with replacement over the
// current contents and independent of insertion order.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void remember(Transition t);
  const Transition& sample(Rng& rng) const;

  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return storage_[i]; }

 private:
  std::deque<Transition> storage_;
  std::size_t capacity_;
};

// Message action code scaled onto the extra input neuron: {0, 0.5, 1}.
inline double message_signal(Action message) { return action_code(message) / 2.0; }

// One-hot rendering of the history window, frame-stacked newest-first:
// frame k (k = 0..frames-1) is the window as it stood k steps ago, so frame k
// slot j holds the joint action (k + j) steps back. Slots with no action yet
// read all-zero. The message signal, when provided, is appended last.
Observation encode_observation(const GameHistory& history, int frames, int window,
                               std::optional<Action> message = std::nullopt);

// Epsilon-greedy over the net's Q-values; argmax ties break toward the
// lowest action code so replays are deterministic.
Action select_action(const QNetwork& net, std::span<const double> obs, double epsilon,
                     Rng& rng);

// epsilon = max(epsilon_min, epsilon_start * epsilon_decay^episode_index)
double decay_epsilon(const AgentConfig& cfg, int episode_index);

// Clones the online net into the target every target_sync_every steps.
bool maybe_sync_target(long step_counter, const AgentConfig& cfg, const QNetwork& net,
                       QNetwork& target);

// One learning update: samples batch_size transitions uniformly, regresses
// the taken action's Q-value toward r (+ gamma * max_a' target(next) when
// not terminal). Returns nullopt while the buffer holds fewer than
// batch_size transitions.
std::optional<double> replay_update(QNetwork& net, const QNetwork& target, Optimizer& opt,
                                    const ReplayBuffer& buffer, const AgentConfig& cfg,
                                    Rng& rng);

// One seat at the table, as driven by the harness step loop. Per step the
// harness calls act() for every player (in plan order) and then observe()
// once the joint rewards are known and the history advanced.
class Player {
 public:
  virtual ~Player() = default;
  virtual void begin_episode(int episode_index) = 0;
  virtual Action act(const GameHistory& history, std::optional<Action> message) = 0;
  virtual void observe(double shaped_reward, bool terminal, const GameHistory& after) = 0;
  virtual double epsilon() const = 0;
  virtual Role role() const = 0;
};

// Learning player. A transition's next_obs must be exactly what the agent
// sees at the next step (for a message receiver that includes the next
// message), so the pending transition is completed at the next act() and the
// replay update runs just before action selection. On a terminal step the
// transition completes immediately; its next_obs never enters a target.
class DqnAgent final : public Player {
 public:
  DqnAgent(AgentConfig cfg, std::uint64_t init_seed, std::uint64_t explore_seed,
           std::uint64_t sample_seed);

  void begin_episode(int episode_index) override;
  Action act(const GameHistory& history, std::optional<Action> message) override;
  void observe(double shaped_reward, bool terminal, const GameHistory& after) override;
  double epsilon() const override { return epsilon_; }
  Role role() const override { return cfg_.role; }

  const AgentConfig& config() const { return cfg_; }
  const QNetwork& net() const { return net_; }
  const QNetwork& target_net() const { return target_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  long step_counter() const { return step_counter_; }
  std::optional<double> last_loss() const { return last_loss_; }

 private:
  Observation encode(const GameHistory& history, std::optional<Action> message) const;
  void finish_pending(const Observation& next_obs);

  AgentConfig cfg_;
  QNetwork net_, target_;
  Optimizer opt_;
  ReplayBuffer buffer_;
  Rng explore_rng_, sample_rng_;
  double epsilon_;
  long step_counter_ = 0;
  std::optional<double> last_loss_;

  struct Pending {
    Observation obs;
    Action action;
    double reward;
  };
  std::optional<Pending> pending_;
  Observation current_obs_;
  Action current_action_ = Action::Rock;
};

// Control player; ignores history and messages entirely.
class RandomAgent final : public Player {
 public:
  explicit RandomAgent(std::uint64_t policy_seed) : rng_(policy_seed) {}

  void begin_episode(int) override {}
  Action act(const GameHistory&, std::optional<Action>) override { return random_policy(rng_); }
  void observe(double, bool, const GameHistory&) override {}
  double epsilon() const override { return 1.0; }
  Role role() const override { return Role::Random; }

 private:
  Rng rng_;
};

// Agent checkpoint: human-readable "[agent]" key=value section followed by
// the binary network checkpoint.
void save_agent_checkpoint(const AgentConfig& cfg, const QNetwork& net,
                           const std::string& path);
std::pair<AgentConfig, QNetwork> load_agent_checkpoint(const std::string& path);

}  // namespace rpslab
