#include "rpslab/agent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace rpslab {

const char* role_name(Role role) {
  switch (role) {
    case Role::Fair: return "fair";
    case Role::CheatSender: return "cheat_sender";
    case Role::CheatReceiver: return "cheat_receiver";
    case Role::Random: return "random";
  }
  return "?";
}

Role role_from_name(const std::string& name) {
  if (name == "fair") return Role::Fair;
  if (name == "cheat_sender") return Role::CheatSender;
  if (name == "cheat_receiver") return Role::CheatReceiver;
  if (name == "random") return Role::Random;
  throw std::invalid_argument("unknown role: " + name);
}

std::vector<int> AgentConfig::layer_dims() const {
  std::vector<int> dims;
  dims.push_back(input_dim());
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(kNumActions);
  return dims;
}

void AgentConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("gamma must be in [0,1]");
  if (!(0.0 <= epsilon_min && epsilon_min <= epsilon_start && epsilon_start <= 1.0)) {
    throw std::invalid_argument("need 0 <= epsilon_min <= epsilon_start <= 1");
  }
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) {
    throw std::invalid_argument("epsilon_decay must be in (0,1]");
  }
  if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  if (buffer_capacity < 1) throw std::invalid_argument("buffer_capacity must be positive");
  if (target_sync_every < 1) throw std::invalid_argument("target_sync_every must be positive");
  if (frames < 1 || window < 1) throw std::invalid_argument("frames and window must be >= 1");
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("hidden widths must be positive");
  }
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::remember(Transition t) {
  if (storage_.size() == capacity_) storage_.pop_front();
  storage_.push_back(std::move(t));
}

const Transition& ReplayBuffer::sample(Rng& rng) const {
  if (storage_.empty()) throw std::logic_error("sampling from an empty replay buffer");
  return storage_[static_cast<std::size_t>(rng.uniform_index(static_cast<int>(storage_.size())))];
}

Observation encode_observation(const GameHistory& history, int frames, int window,
                               std::optional<Action> message) {
  if (frames < 1 || window < 1) throw std::invalid_argument("frames and window must be >= 1");
  const int slot_width = kNumAgents * kNumActions;
  Observation obs(static_cast<std::size_t>(frames) * window * slot_width + (message ? 1 : 0),
                  0.0);
  for (int k = 0; k < frames; ++k) {
    for (int j = 0; j < window; ++j) {
      const auto joint = history.at_age(k + j);
      if (!joint) continue;  // no action yet: leave the slot all-zero
      const std::size_t base =
          (static_cast<std::size_t>(k) * window + j) * slot_width;
      for (int p = 0; p < kNumAgents; ++p) {
        obs[base + p * kNumActions + action_code((*joint)[p])] = 1.0;
      }
    }
  }
  if (message) obs.back() = message_signal(*message);
  return obs;
}

Action select_action(const QNetwork& net, std::span<const double> obs, double epsilon,
                     Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("epsilon must be in [0,1]");
  if (epsilon > 0.0 && rng.uniform() < epsilon) {
    return static_cast<Action>(rng.uniform_index(kNumActions));
  }
  const std::vector<double> q = net.forward(obs);
  int best = 0;
  for (int a = 1; a < kNumActions; ++a) {
    if (q[a] > q[best]) best = a;  // strict: ties keep the lowest code
  }
  return static_cast<Action>(best);
}

double decay_epsilon(const AgentConfig& cfg, int episode_index) {
  if (episode_index < 0) throw std::invalid_argument("episode index must be >= 0");
  const double eps =
      cfg.epsilon_start * std::pow(cfg.epsilon_decay, static_cast<double>(episode_index));
  return std::max(cfg.epsilon_min, eps);
}

bool maybe_sync_target(long step_counter, const AgentConfig& cfg, const QNetwork& net,
                       QNetwork& target) {
  if (step_counter % cfg.target_sync_every != 0) return false;
  clone_into_target(net, target);
  return true;
}

std::optional<double> replay_update(QNetwork& net, const QNetwork& target, Optimizer& opt,
                                    const ReplayBuffer& buffer, const AgentConfig& cfg,
                                    Rng& rng) {
  if (buffer.size() < static_cast<std::size_t>(cfg.batch_size)) return std::nullopt;

  TrainBatch batch;
  batch.inputs.reserve(cfg.batch_size);
  batch.target_q.reserve(cfg.batch_size);
  batch.action_mask.reserve(cfg.batch_size);
  for (int b = 0; b < cfg.batch_size; ++b) {
    const Transition& t = buffer.sample(rng);
    double y = t.reward;
    if (!t.terminal && cfg.gamma != 0.0) {
      const std::vector<double> q_next = target.forward(t.next_obs);
      y += cfg.gamma * *std::max_element(q_next.begin(), q_next.end());
    }
    std::vector<double> target_q(kNumActions, 0.0);
    target_q[action_code(t.action)] = y;
    batch.inputs.push_back(t.obs);
    batch.target_q.push_back(std::move(target_q));
    batch.action_mask.push_back(action_code(t.action));
  }
  return train_batch(net, opt, batch);
}

DqnAgent::DqnAgent(AgentConfig cfg, std::uint64_t init_seed, std::uint64_t explore_seed,
                   std::uint64_t sample_seed)
    : cfg_(std::move(cfg)),
      net_(cfg_.layer_dims(), Activation::Relu),
      target_(cfg_.layer_dims(), Activation::Relu),
      opt_(cfg_.optimizer, cfg_.learning_rate, net_.parameters().size()),
      buffer_(static_cast<std::size_t>(cfg_.buffer_capacity)),
      explore_rng_(explore_seed),
      sample_rng_(sample_seed),
      epsilon_(cfg_.epsilon_start) {
  cfg_.validate();
  if (cfg_.role == Role::Random) {
    throw std::invalid_argument("random role is served by RandomAgent, not DqnAgent");
  }
  Rng init_rng(init_seed);
  net_.init_uniform(init_rng);
  clone_into_target(net_, target_);
}

void DqnAgent::begin_episode(int episode_index) {
  epsilon_ = decay_epsilon(cfg_, episode_index);
}

Observation DqnAgent::encode(const GameHistory& history,
                             std::optional<Action> message) const {
  if (cfg_.role == Role::CheatReceiver) {
    // The message slot always exists for a receiver; absent reads as 0.
    return encode_observation(history, cfg_.frames, cfg_.window,
                              message.value_or(Action::Rock));
  }
  return encode_observation(history, cfg_.frames, cfg_.window);
}

void DqnAgent::finish_pending(const Observation& next_obs) {
  if (!pending_) return;
  buffer_.remember(Transition{std::move(pending_->obs), pending_->action, pending_->reward,
                              next_obs, false});
  pending_.reset();
}

Action DqnAgent::act(const GameHistory& history, std::optional<Action> message) {
  current_obs_ = encode(history, message);

  finish_pending(current_obs_);
  last_loss_ = replay_update(net_, target_, opt_, buffer_, cfg_, sample_rng_);
  ++step_counter_;
  maybe_sync_target(step_counter_, cfg_, net_, target_);

  current_action_ = select_action(net_, current_obs_, epsilon_, explore_rng_);
  return current_action_;
}

void DqnAgent::observe(double shaped_reward, bool terminal, const GameHistory& after) {
  if (!terminal) {
    pending_ = Pending{std::move(current_obs_), current_action_, shaped_reward};
    return;
  }
  // Terminal: next_obs never feeds a bootstrap target; store it directly.
  buffer_.remember(Transition{std::move(current_obs_), current_action_, shaped_reward,
                              encode(after, std::nullopt), true});
  pending_.reset();
}

namespace {

constexpr char kAgentHeader[] = "[agent]";
constexpr char kNetMarker[] = "[network]";

}  // namespace

void save_agent_checkpoint(const AgentConfig& cfg, const QNetwork& net,
                           const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << std::setprecision(17);
  out << kAgentHeader << "\n";
  out << "role = " << role_name(cfg.role) << "\n";
  out << "learning_rate = " << cfg.learning_rate << "\n";
  out << "gamma = " << cfg.gamma << "\n";
  out << "epsilon_start = " << cfg.epsilon_start << "\n";
  out << "epsilon_min = " << cfg.epsilon_min << "\n";
  out << "epsilon_decay = " << cfg.epsilon_decay << "\n";
  out << "batch_size = " << cfg.batch_size << "\n";
  out << "buffer_capacity = " << cfg.buffer_capacity << "\n";
  out << "target_sync_every = " << cfg.target_sync_every << "\n";
  out << "frames = " << cfg.frames << "\n";
  out << "window = " << cfg.window << "\n";
  out << "hidden =";
  for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
    out << (i ? "," : " ") << cfg.hidden[i];
  }
  out << "\n";
  out << "optimizer = " << (cfg.optimizer == Optimizer::Kind::Adam ? "adam" : "sgd") << "\n";
  out << kNetMarker << "\n";
  save_network(net, out);
}

std::pair<AgentConfig, QNetwork> load_agent_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kAgentHeader) {
    throw std::runtime_error(path + ": not an agent checkpoint");
  }
  AgentConfig cfg;
  while (std::getline(in, line)) {
    if (line == kNetMarker) break;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error(path + ": bad checkpoint line: " + line);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "role") cfg.role = role_from_name(value);
    else if (key == "learning_rate") cfg.learning_rate = std::stod(value);
    else if (key == "gamma") cfg.gamma = std::stod(value);
    else if (key == "epsilon_start") cfg.epsilon_start = std::stod(value);
    else if (key == "epsilon_min") cfg.epsilon_min = std::stod(value);
    else if (key == "epsilon_decay") cfg.epsilon_decay = std::stod(value);
    else if (key == "batch_size") cfg.batch_size = std::stoi(value);
    else if (key == "buffer_capacity") cfg.buffer_capacity = std::stoi(value);
    else if (key == "target_sync_every") cfg.target_sync_every = std::stoi(value);
    else if (key == "frames") cfg.frames = std::stoi(value);
    else if (key == "window") cfg.window = std::stoi(value);
    else if (key == "optimizer") {
      cfg.optimizer = value == "adam" ? Optimizer::Kind::Adam : Optimizer::Kind::Sgd;
    } else if (key == "hidden") {
      cfg.hidden.clear();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) cfg.hidden.push_back(std::stoi(item));
    } else {
      throw std::runtime_error(path + ": unknown checkpoint key: " + key);
    }
  }
  cfg.validate();
  QNetwork net = load_network(in);
  if (net.dims() != cfg.layer_dims()) {
    throw std::runtime_error(path + ": checkpoint network does not match its config");
  }
  return {std::move(cfg), std::move(net)};
}

}  // namespace rpslab
