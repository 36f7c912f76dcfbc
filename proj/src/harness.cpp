#include "rpslab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace fs = std::filesystem;

namespace rpslab {

namespace {

constexpr char kToolVersion[] = "1.0.0";

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string run_file_name(int run_id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "run_%03d.csv", run_id);
  return buf;
}

std::array<int, 2> others_of(int fair_index) {
  std::array<int, 2> out{};
  int n = 0;
  for (int i = 0; i < kNumAgents; ++i) {
    if (i != fair_index) out[n++] = i;
  }
  return out;
}

}  // namespace

const char* scale_name(Scale scale) {
  return scale == Scale::Desk ? "desk" : "paper";
}

Scale scale_from_name(const std::string& name) {
  if (name == "desk") return Scale::Desk;
  if (name == "paper") return Scale::PaperReplication;
  throw std::invalid_argument("unknown scale: " + name + " (expected desk or paper)");
}

ExperimentConfig ExperimentConfig::desk() {
  ExperimentConfig cfg;
  cfg.scale = Scale::Desk;
  cfg.runs_per_lr = 2;
  cfg.control_runs_per_lr = 5;
  cfg.learning_rates = {0.005};
  cfg.episodes = 20;
  cfg.steps_per_episode = 100;
  cfg.agent.window = 20;
  cfg.agent.frames = 3;
  cfg.agent.hidden = {128, 9};
  return cfg;
}

ExperimentConfig ExperimentConfig::paper_replication() {
  ExperimentConfig cfg;
  cfg.scale = Scale::PaperReplication;
  cfg.runs_per_lr = 10;
  cfg.control_runs_per_lr = 5;
  cfg.learning_rates = {0.001, 0.005, 0.01};
  cfg.episodes = 100;
  cfg.steps_per_episode = 300;
  cfg.agent.window = 300;
  cfg.agent.frames = 3;
  cfg.agent.hidden = {2700, 9};
  return cfg;
}

ExperimentConfig ExperimentConfig::preset(Scale scale) {
  return scale == Scale::Desk ? desk() : paper_replication();
}

void ExperimentConfig::apply(const KeyValues& kv) {
  for (const auto& [key, value] : kv.entries()) {
    if (key == "experiment.scale") {
      continue;  // resolved into the preset by the caller
    } else if (key == "experiment.mode") {
      if (value == "fair") mode.kind = Mode::Kind::Fair;
      else if (value == "explicit") mode.kind = Mode::Kind::ExplicitComm;
      else if (value == "implicit") mode.kind = Mode::Kind::ImplicitReward;
      else throw std::runtime_error("experiment.mode: expected fair, explicit or implicit");
    } else if (key == "experiment.fair_index") {
      mode.fair_index = kv.get_int(key);
    } else if (key == "experiment.sender") {
      mode.sender = kv.get_int(key);
    } else if (key == "experiment.receiver") {
      mode.receiver = kv.get_int(key);
    } else if (key == "experiment.fair_is_random") {
      mode.fair_is_random = kv.get_bool(key);
    } else if (key == "experiment.shaping") {
      if (value == "denoised") mode.shaping = Mode::Shaping::Denoised;
      else if (value == "negated") mode.shaping = Mode::Shaping::NegatedFair;
      else throw std::runtime_error("experiment.shaping: expected denoised or negated");
    } else if (key == "experiment.runs_per_lr") {
      runs_per_lr = kv.get_int(key);
    } else if (key == "experiment.control_runs_per_lr") {
      control_runs_per_lr = kv.get_int(key);
    } else if (key == "experiment.learning_rates") {
      learning_rates = kv.get_double_list(key);
    } else if (key == "experiment.episodes") {
      episodes = kv.get_int(key);
    } else if (key == "experiment.steps_per_episode") {
      steps_per_episode = kv.get_int(key);
    } else if (key == "experiment.base_seed") {
      base_seed = kv.get_u64(key);
    } else if (key == "experiment.output_dir") {
      output_dir = value;
    } else if (key == "agent.gamma") {
      agent.gamma = kv.get_double(key);
    } else if (key == "agent.epsilon_start") {
      agent.epsilon_start = kv.get_double(key);
    } else if (key == "agent.epsilon_min") {
      agent.epsilon_min = kv.get_double(key);
    } else if (key == "agent.epsilon_decay") {
      agent.epsilon_decay = kv.get_double(key);
    } else if (key == "agent.batch_size") {
      agent.batch_size = kv.get_int(key);
    } else if (key == "agent.buffer_capacity") {
      agent.buffer_capacity = kv.get_int(key);
    } else if (key == "agent.target_sync_every") {
      agent.target_sync_every = kv.get_int(key);
    } else if (key == "agent.frames") {
      agent.frames = kv.get_int(key);
    } else if (key == "agent.window") {
      agent.window = kv.get_int(key);
    } else if (key == "agent.hidden") {
      agent.hidden = kv.get_int_list(key);
    } else if (key == "agent.optimizer") {
      if (value == "adam") agent.optimizer = Optimizer::Kind::Adam;
      else if (value == "sgd") agent.optimizer = Optimizer::Kind::Sgd;
      else throw std::runtime_error("agent.optimizer: expected adam or sgd");
    } else {
      throw std::runtime_error("unknown config key '" + key + "'");
    }
  }
  // Keep the colluding pair consistent with the fair seat; explicit
  // sender/receiver keys win over the recomputed defaults.
  mode.cheaters = others_of(mode.fair_index);
  if (!kv.contains("experiment.sender")) mode.sender = mode.cheaters[0];
  if (!kv.contains("experiment.receiver")) mode.receiver = mode.cheaters[1];
}

ExperimentConfig load_experiment_config(const KeyValues& kv) {
  Scale scale = Scale::Desk;
  if (const auto s = kv.find("experiment.scale")) scale = scale_from_name(*s);
  ExperimentConfig cfg = ExperimentConfig::preset(scale);
  cfg.apply(kv);
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  mode.validate();
  agent.validate();
  if (runs_per_lr < 1) throw std::invalid_argument("runs_per_lr must be positive");
  if (control_runs_per_lr < 0) throw std::invalid_argument("control_runs_per_lr must be >= 0");
  if (learning_rates.empty()) throw std::invalid_argument("need at least one learning rate");
  for (double lr : learning_rates) {
    if (!(lr > 0.0)) throw std::invalid_argument("learning rates must be > 0");
  }
  if (episodes < 1) throw std::invalid_argument("episodes must be positive");
  if (steps_per_episode < 1) throw std::invalid_argument("steps_per_episode must be positive");
  if (output_dir.empty()) throw std::invalid_argument("output_dir must not be empty");
}

std::string ExperimentConfig::echo() const {
  std::ostringstream out;
  out << "[experiment]\n";
  out << "mode = "
      << (mode.kind == Mode::Kind::Fair
              ? "fair"
              : mode.kind == Mode::Kind::ExplicitComm ? "explicit" : "implicit")
      << "\n";
  out << "scale = " << scale_name(scale) << "\n";
  out << "fair_index = " << mode.fair_index << "\n";
  out << "sender = " << mode.sender << "\n";
  out << "receiver = " << mode.receiver << "\n";
  out << "fair_is_random = " << (mode.fair_is_random ? "true" : "false") << "\n";
  out << "shaping = " << (mode.shaping == Mode::Shaping::Denoised ? "denoised" : "negated")
      << "\n";
  out << "runs_per_lr = " << runs_per_lr << "\n";
  out << "control_runs_per_lr = " << control_runs_per_lr << "\n";
  out << "learning_rates =";
  for (std::size_t i = 0; i < learning_rates.size(); ++i) {
    out << (i ? "," : " ") << format_double(learning_rates[i]);
  }
  out << "\n";
  out << "episodes = " << episodes << "\n";
  out << "steps_per_episode = " << steps_per_episode << "\n";
  out << "base_seed = " << base_seed << "\n";
  out << "output_dir = " << output_dir << "\n";
  out << "\n[agent]\n";
  out << "gamma = " << format_double(agent.gamma) << "\n";
  out << "epsilon_start = " << format_double(agent.epsilon_start) << "\n";
  out << "epsilon_min = " << format_double(agent.epsilon_min) << "\n";
  out << "epsilon_decay = " << format_double(agent.epsilon_decay) << "\n";
  out << "batch_size = " << agent.batch_size << "\n";
  out << "buffer_capacity = " << agent.buffer_capacity << "\n";
  out << "target_sync_every = " << agent.target_sync_every << "\n";
  out << "frames = " << agent.frames << "\n";
  out << "window = " << agent.window << "\n";
  out << "hidden =";
  for (std::size_t i = 0; i < agent.hidden.size(); ++i) {
    out << (i ? "," : " ") << agent.hidden[i];
  }
  out << "\n";
  out << "optimizer = " << (agent.optimizer == Optimizer::Kind::Adam ? "adam" : "sgd") << "\n";
  return out.str();
}

CampaignAccounting campaign_accounting(const ExperimentConfig& cfg) {
  CampaignAccounting acc;
  const int n_lr = static_cast<int>(cfg.learning_rates.size());
  acc.runs = cfg.runs_per_lr * n_lr;
  acc.games = static_cast<long long>(acc.runs) * cfg.episodes * cfg.steps_per_episode;
  acc.control_runs = cfg.control_runs_per_lr * n_lr;
  return acc;
}

std::string accounting_echo(const CampaignAccounting& acc) {
  std::ostringstream out;
  out << "[accounting]\n";
  out << "runs = " << acc.runs << "\n";
  out << "games = " << acc.games << "\n";
  out << "control_runs = " << acc.control_runs << "\n";
  return out.str();
}

AgentSeeds agent_seeds(const ExperimentConfig& cfg, int lr_index, int run_index,
                       int agent_index) {
  AgentSeeds seeds;
  const auto lr = static_cast<std::uint64_t>(lr_index);
  const auto run = static_cast<std::uint64_t>(run_index);
  const auto agent = static_cast<std::uint64_t>(agent_index);
  seeds.init = derive_seed(cfg.base_seed, lr, run, agent, Stream::Init);
  seeds.explore = derive_seed(cfg.base_seed, lr, run, agent, Stream::Explore);
  seeds.sample = derive_seed(cfg.base_seed, lr, run, agent, Stream::Sample);
  seeds.policy = derive_seed(cfg.base_seed, lr, run, agent, Stream::Policy);
  return seeds;
}

std::vector<std::unique_ptr<Player>> make_players(const ExperimentConfig& cfg, int lr_index,
                                                  int run_index) {
  cfg.mode.validate();
  const double lr = cfg.learning_rates.at(static_cast<std::size_t>(lr_index));
  std::vector<std::unique_ptr<Player>> players;
  players.reserve(kNumAgents);
  for (int agent = 0; agent < kNumAgents; ++agent) {
    const AgentSeeds seeds = agent_seeds(cfg, lr_index, run_index, agent);
    if (cfg.mode.fair_is_random && agent == cfg.mode.fair_index) {
      players.push_back(std::make_unique<RandomAgent>(seeds.policy));
      continue;
    }
    AgentConfig acfg = cfg.agent;
    acfg.learning_rate = lr;
    acfg.role = Role::Fair;
    if (cfg.mode.kind == Mode::Kind::ExplicitComm) {
      if (agent == cfg.mode.sender) acfg.role = Role::CheatSender;
      else if (agent == cfg.mode.receiver) acfg.role = Role::CheatReceiver;
    }
    players.push_back(
        std::make_unique<DqnAgent>(std::move(acfg), seeds.init, seeds.explore, seeds.sample));
  }
  return players;
}

int history_capacity(const AgentConfig& agent) { return agent.window + agent.frames - 1; }

std::vector<StepRecord> play_episode(const Mode& mode,
                                     std::vector<std::unique_ptr<Player>>& players,
                                     GameHistory& history, int run_id, double learning_rate,
                                     int episode_index, int steps) {
  if (players.size() != kNumAgents) throw std::invalid_argument("need exactly three players");
  if (steps < 1) throw std::invalid_argument("steps must be positive");
  const StepPlan plan = step_order(mode);
  const std::string tag = mode.tag();
  for (auto& player : players) player->begin_episode(episode_index);

  std::vector<StepRecord> records;
  records.reserve(static_cast<std::size_t>(steps));
  for (int step = 0; step < steps; ++step) {
    JointAction joint{Action::Rock, Action::Rock, Action::Rock};
    std::optional<Action> message;
    for (int agent : plan.order) {
      std::optional<Action> inbox;
      if (plan.receiver && agent == *plan.receiver) inbox = message;
      const Action a = players[static_cast<std::size_t>(agent)]->act(history, inbox);
      joint[static_cast<std::size_t>(agent)] = a;
      if (plan.sender && agent == *plan.sender) message = a;
    }
    const RewardVector raw = reward(joint);
    const RewardVector shaped = shape_rewards(mode, raw);
    history.push(joint);
    const bool terminal = step == steps - 1;

    StepRecord rec;
    rec.run_id = run_id;
    rec.learning_rate = learning_rate;
    rec.episode = episode_index;
    rec.step = step;
    rec.actions = joint;
    rec.raw = raw;
    rec.shaped = shaped;
    for (int i = 0; i < kNumAgents; ++i) {
      rec.epsilon[static_cast<std::size_t>(i)] = players[static_cast<std::size_t>(i)]->epsilon();
    }
    rec.message = message;
    rec.mode_tag = tag;
    records.push_back(std::move(rec));

    for (int i = 0; i < kNumAgents; ++i) {
      players[static_cast<std::size_t>(i)]->observe(shaped.value(i), terminal, history);
    }
  }
  return records;
}

RunResult run_single(const ExperimentConfig& cfg, int lr_index, int run_index) {
  RunResult res;
  res.lr_index = lr_index;
  res.run_index = run_index;
  res.run_id = lr_index * cfg.runs_per_lr + run_index;
  res.log_path = run_file_name(res.run_id);
  const double lr = cfg.learning_rates.at(static_cast<std::size_t>(lr_index));
  try {
    auto players = make_players(cfg, lr_index, run_index);
    GameHistory history(history_capacity(cfg.agent));
    StepLogWriter log((fs::path(cfg.output_dir) / res.log_path).string());
    for (int episode = 0; episode < cfg.episodes; ++episode) {
      for (const StepRecord& rec : play_episode(cfg.mode, players, history, res.run_id, lr,
                                                episode, cfg.steps_per_episode)) {
        log.append(rec);
      }
    }
    log.close();
    res.completed = true;
  } catch (const std::exception& ex) {
    res.error = ex.what();
  }
  return res;
}

namespace {

void write_manifest(const ExperimentConfig& cfg, const std::vector<RunResult>& results,
                    const std::string& started, const std::string& finished) {
  std::ofstream out(fs::path(cfg.output_dir) / "manifest.txt");
  if (!out) throw std::runtime_error("cannot write manifest in " + cfg.output_dir);
  out << "# campaign manifest\n";
  out << "[session]\n";
  out << "tool_version = " << kToolVersion << "\n";
  out << "started_utc = " << started << "\n";
  out << "finished_utc = " << finished << "\n";
  out << "\n" << cfg.echo();
  out << "\n" << accounting_echo(campaign_accounting(cfg));
  out << "\n[runs]\n";
  for (const RunResult& res : results) {
    out << "run_" << res.run_id << " = lr_index=" << res.lr_index
        << " run_index=" << res.run_index
        << " file=" << res.log_path
        << " status=" << (res.completed ? "completed" : "failed");
    if (!res.completed) out << " error=" << res.error;
    out << "\n";
  }
  out << "\n[seeds]\n";
  for (const RunResult& res : results) {
    for (int agent = 0; agent < kNumAgents; ++agent) {
      const AgentSeeds s = agent_seeds(cfg, res.lr_index, res.run_index, agent);
      out << "run_" << res.run_id << ".agent" << agent << " = init:" << s.init
          << " explore:" << s.explore << " sample:" << s.sample << " policy:" << s.policy
          << "\n";
    }
  }
  out.flush();
  if (!out) throw std::runtime_error("write failure on manifest in " + cfg.output_dir);
}

}  // namespace

std::vector<RunResult> run_campaign(const ExperimentConfig& cfg, int jobs) {
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  const std::string started = utc_now();

  const int total = static_cast<int>(cfg.learning_rates.size()) * cfg.runs_per_lr;
  std::vector<RunResult> results(static_cast<std::size_t>(total));
  jobs = std::clamp(jobs, 1, total);

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int id = next.fetch_add(1); id < total; id = next.fetch_add(1)) {
      const int lr_index = id / cfg.runs_per_lr;
      const int run_index = id % cfg.runs_per_lr;
      results[static_cast<std::size_t>(id)] = run_single(cfg, lr_index, run_index);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  write_manifest(cfg, results, started, utc_now());
  return results;
}

}  // namespace rpslab
