#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "rpslab/harness.hpp"

using namespace rpslab;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.runs_per_lr = 2;
  cfg.learning_rates = {0.005};
  cfg.episodes = 3;
  cfg.steps_per_episode = 25;
  cfg.agent.window = 4;
  cfg.agent.frames = 2;
  cfg.agent.hidden = {16};
  cfg.agent.batch_size = 8;
  cfg.agent.buffer_capacity = 200;
  cfg.agent.target_sync_every = 20;
  return cfg;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& stem)
      : path(fs::temp_directory_path() / (stem + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("scale names round-trip") {
  CHECK(scale_from_name("desk") == Scale::Desk);
  CHECK(scale_from_name("paper") == Scale::PaperReplication);
  CHECK(scale_name(Scale::Desk) == std::string("desk"));
  CHECK(scale_name(Scale::PaperReplication) == std::string("paper"));
  CHECK_THROWS_AS(scale_from_name("huge"), std::invalid_argument);
}

TEST_CASE("presets pin the campaign dimensions") {
  const ExperimentConfig desk = ExperimentConfig::desk();
  CHECK(desk.runs_per_lr == 2);
  CHECK(desk.learning_rates == std::vector<double>{0.005});
  CHECK(desk.episodes == 20);
  CHECK(desk.steps_per_episode == 100);
  CHECK(desk.agent.window == 20);
  CHECK(desk.agent.base_input_dim() == 540);

  const ExperimentConfig paper = ExperimentConfig::paper_replication();
  CHECK(paper.runs_per_lr == 10);
  CHECK(paper.control_runs_per_lr == 5);
  CHECK(paper.learning_rates == std::vector<double>{0.001, 0.005, 0.01});
  CHECK(paper.episodes == 100);
  CHECK(paper.steps_per_episode == 300);
  CHECK(paper.agent.window == 300);
  CHECK(paper.agent.hidden == std::vector<int>{2700, 9});
  CHECK(paper.agent.base_input_dim() == 8100);
}

TEST_CASE("campaign accounting multiplies out runs, games and controls") {
  const CampaignAccounting desk = campaign_accounting(ExperimentConfig::desk());
  CHECK(desk.runs == 2);
  CHECK(desk.games == 4000);
  CHECK(desk.control_runs == 5);

  const CampaignAccounting paper = campaign_accounting(ExperimentConfig::paper_replication());
  CHECK(paper.runs == 30);
  CHECK(paper.games == 900000);
  CHECK(paper.control_runs == 15);

  CHECK(accounting_echo(paper) ==
        "[accounting]\nruns = 30\ngames = 900000\ncontrol_runs = 15\n");
}

TEST_CASE("config files select a preset and override its fields") {
  const KeyValues kv = KeyValues::parse_text(
      "[experiment]\n"
      "scale = paper\n"
      "mode = implicit\n"
      "fair_index = 1\n"
      "episodes = 5\n"
      "[agent]\n"
      "gamma = 0.9\n");
  const ExperimentConfig cfg = load_experiment_config(kv);
  CHECK(cfg.scale == Scale::PaperReplication);
  CHECK(cfg.runs_per_lr == 10);
  CHECK(cfg.episodes == 5);
  CHECK(cfg.mode.kind == Mode::Kind::ImplicitReward);
  CHECK(cfg.mode.fair_index == 1);
  CHECK(cfg.mode.cheaters == std::array<int, 2>{0, 2});
  CHECK(cfg.mode.sender == 0);
  CHECK(cfg.mode.receiver == 2);
  CHECK(cfg.agent.gamma == 0.9);
  CHECK(cfg.agent.window == 300);

  CHECK_THROWS_WITH_AS(
      load_experiment_config(KeyValues::parse_text("[experiment]\nwat = 1\n")),
      doctest::Contains("experiment.wat"), std::runtime_error);
  CHECK_THROWS_AS(
      load_experiment_config(KeyValues::parse_text("[experiment]\nmode = sneaky\n")),
      std::runtime_error);
  CHECK_THROWS_AS(
      load_experiment_config(KeyValues::parse_text("[experiment]\nepisodes = 0\n")),
      std::invalid_argument);
}

TEST_CASE("explicit sender and receiver keys win over recomputed defaults") {
  const KeyValues kv = KeyValues::parse_text(
      "[experiment]\nmode = explicit\nfair_index = 0\nsender = 2\nreceiver = 1\n");
  const ExperimentConfig cfg = load_experiment_config(kv);
  CHECK(cfg.mode.sender == 2);
  CHECK(cfg.mode.receiver == 1);
  CHECK(cfg.mode.cheaters == std::array<int, 2>{1, 2});
}

TEST_CASE("the config echo is itself a loadable config") {
  ExperimentConfig cfg = ExperimentConfig::desk();
  cfg.mode.kind = Mode::Kind::ImplicitReward;
  cfg.mode.fair_index = 2;
  cfg.mode.cheaters = {0, 1};
  cfg.mode.sender = 0;
  cfg.mode.receiver = 1;
  cfg.mode.shaping = Mode::Shaping::NegatedFair;
  cfg.mode.fair_is_random = true;
  cfg.base_seed = 77;
  cfg.agent.optimizer = Optimizer::Kind::Sgd;

  const std::string echoed = cfg.echo();
  const ExperimentConfig reloaded =
      load_experiment_config(KeyValues::parse_text(echoed));
  CHECK(reloaded.echo() == echoed);
  CHECK(reloaded.mode == cfg.mode);
  CHECK(reloaded.base_seed == 77);
}

TEST_CASE("seed derivation keeps every stream distinct and stable") {
  const ExperimentConfig cfg = small_config();
  std::set<std::uint64_t> seen;
  for (int lr = 0; lr < 2; ++lr) {
    for (int run = 0; run < 3; ++run) {
      for (int agent = 0; agent < 3; ++agent) {
        const AgentSeeds s = agent_seeds(cfg, lr, run, agent);
        seen.insert(s.init);
        seen.insert(s.explore);
        seen.insert(s.sample);
        seen.insert(s.policy);
      }
    }
  }
  CHECK(seen.size() == 2u * 3u * 3u * 4u);

  const AgentSeeds again = agent_seeds(cfg, 1, 2, 0);
  CHECK(again.init == agent_seeds(cfg, 1, 2, 0).init);

  ExperimentConfig other = cfg;
  other.base_seed = cfg.base_seed + 1;
  CHECK(agent_seeds(other, 1, 2, 0).init != again.init);
}

TEST_CASE("player construction assigns seats their mode roles") {
  ExperimentConfig cfg = small_config();

  auto fair = make_players(cfg, 0, 0);
  REQUIRE(fair.size() == 3);
  for (const auto& p : fair) CHECK(p->role() == Role::Fair);

  cfg.mode.kind = Mode::Kind::ExplicitComm;
  cfg.mode.fair_index = 0;
  cfg.mode.sender = 2;
  cfg.mode.receiver = 1;
  cfg.mode.cheaters = {1, 2};
  auto expl = make_players(cfg, 0, 0);
  CHECK(expl[0]->role() == Role::Fair);
  CHECK(expl[1]->role() == Role::CheatReceiver);
  CHECK(expl[2]->role() == Role::CheatSender);

  cfg.mode.kind = Mode::Kind::ImplicitReward;
  cfg.mode.fair_is_random = true;
  auto control = make_players(cfg, 0, 0);
  CHECK(control[0]->role() == Role::Random);
  CHECK(control[1]->role() == Role::Fair);
  CHECK(control[2]->role() == Role::Fair);
}

TEST_CASE("history depth gives the oldest frame a full window") {
  AgentConfig agent;
  agent.window = 20;
  agent.frames = 3;
  CHECK(history_capacity(agent) == 22);
  agent.frames = 1;
  CHECK(history_capacity(agent) == 20);
}

TEST_CASE("an episode logs one re-derivable record per step") {
  ExperimentConfig cfg = small_config();
  auto players = make_players(cfg, 0, 0);
  GameHistory history(history_capacity(cfg.agent));

  const auto records = play_episode(cfg.mode, players, history, 4, 0.005, 2, 25);
  REQUIRE(records.size() == 25);
  for (int s = 0; s < 25; ++s) {
    const StepRecord& rec = records[static_cast<std::size_t>(s)];
    CHECK(rec.run_id == 4);
    CHECK(rec.learning_rate == 0.005);
    CHECK(rec.episode == 2);
    CHECK(rec.step == s);
    CHECK(rec.mode_tag == "fair");
    CHECK(rec.raw == reward(rec.actions));
    CHECK(rec.shaped == rec.raw);
    CHECK_FALSE(rec.message.has_value());
    const double eps = decay_epsilon(cfg.agent, 2);
    CHECK(rec.epsilon[0] == eps);
    CHECK(rec.epsilon[1] == eps);
    CHECK(rec.epsilon[2] == eps);
  }
  CHECK(history.fill_count() == 5);  // capacity window + frames - 1

  std::vector<std::unique_ptr<Player>> empty;
  CHECK_THROWS_AS(play_episode(cfg.mode, empty, history, 0, 0.005, 0, 5),
                  std::invalid_argument);
  CHECK_THROWS_AS(play_episode(cfg.mode, players, history, 0, 0.005, 0, 0),
                  std::invalid_argument);
}

TEST_CASE("explicit mode logs the travelling message each step") {
  ExperimentConfig cfg = small_config();
  cfg.mode.kind = Mode::Kind::ExplicitComm;
  auto players = make_players(cfg, 0, 0);
  GameHistory history(history_capacity(cfg.agent));

  const auto records = play_episode(cfg.mode, players, history, 0, 0.005, 0, 25);
  for (const StepRecord& rec : records) {
    CHECK(rec.mode_tag == "explicit-f0-s1-r2");
    REQUIRE(rec.message.has_value());
    CHECK(*rec.message == rec.actions[1]);
    CHECK(rec.shaped == rec.raw);
  }
}

TEST_CASE("implicit mode logs shaped rewards next to raw ones") {
  ExperimentConfig cfg = small_config();
  cfg.mode.kind = Mode::Kind::ImplicitReward;
  cfg.mode.fair_is_random = true;
  auto players = make_players(cfg, 0, 0);
  GameHistory history(history_capacity(cfg.agent));

  const auto records = play_episode(cfg.mode, players, history, 0, 0.005, 0, 25);
  for (const StepRecord& rec : records) {
    CHECK(rec.mode_tag == "implicit-f0-c12-rand");
    CHECK_FALSE(rec.message.has_value());
    CHECK(rec.raw == reward(rec.actions));
    CHECK(rec.shaped == shape_rewards(cfg.mode, rec.raw));
    CHECK(rec.epsilon[0] == 1.0);  // the control seat never anneals
  }
}

TEST_CASE("pure exploration plays a fair zero-mean game") {
  ExperimentConfig cfg = small_config();
  cfg.agent.epsilon_start = 1.0;
  cfg.agent.epsilon_min = 1.0;
  cfg.agent.window = 2;
  cfg.agent.frames = 1;
  cfg.agent.hidden = {4};
  cfg.agent.batch_size = 4;
  auto players = make_players(cfg, 0, 0);
  GameHistory history(history_capacity(cfg.agent));

  std::array<long, 3> halves{};
  int steps = 0;
  for (int ep = 0; ep < 2; ++ep) {
    for (const StepRecord& rec : play_episode(cfg.mode, players, history, 0, 0.005, ep, 200)) {
      for (int i = 0; i < 3; ++i) halves[static_cast<std::size_t>(i)] += rec.raw.halves(i);
      ++steps;
    }
  }
  CHECK(steps == 400);
  for (long h : halves) {
    const double mean = static_cast<double>(h) / (2.0 * steps);
    CHECK(std::abs(mean) < 0.2);
  }
}

TEST_CASE("a single run writes a complete, readable log") {
  TempDir tmp("rpslab_run_single");
  ExperimentConfig cfg = small_config();
  cfg.learning_rates = {0.001, 0.005};
  cfg.output_dir = tmp.path.string();
  fs::create_directories(tmp.path);

  const RunResult res = run_single(cfg, 1, 1);
  CHECK(res.completed);
  CHECK(res.error.empty());
  CHECK(res.run_id == 3);
  CHECK(res.log_path == "run_003.csv");

  const auto records = read_step_log((tmp.path / res.log_path).string());
  REQUIRE(records.size() == 3u * 25u);
  CHECK(records.front().run_id == 3);
  CHECK(records.front().learning_rate == 0.005);
  CHECK(records.back().episode == 2);
  CHECK(records.back().step == 24);
}

TEST_CASE("campaigns are deterministic and safe to parallelize") {
  ExperimentConfig cfg = small_config();
  cfg.learning_rates = {0.001, 0.005};
  cfg.episodes = 2;

  TempDir a("rpslab_campaign_a"), b("rpslab_campaign_b"), c("rpslab_campaign_c");

  cfg.output_dir = a.path.string();
  const auto results = run_campaign(cfg);
  REQUIRE(results.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(results[static_cast<std::size_t>(i)].run_id == i);
    CHECK(results[static_cast<std::size_t>(i)].completed);
  }
  CHECK(fs::exists(a.path / "manifest.txt"));

  cfg.output_dir = b.path.string();
  run_campaign(cfg);
  cfg.output_dir = c.path.string();
  run_campaign(cfg, 2);

  for (int i = 0; i < 4; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "run_%03d.csv", i);
    const std::string bytes = read_file(a.path / name);
    CHECK(bytes == read_file(b.path / name));
    CHECK(bytes == read_file(c.path / name));
    CHECK(!bytes.empty());
  }

  const std::string manifest = read_file(a.path / "manifest.txt");
  CHECK(manifest.find("runs = 4") != std::string::npos);
  CHECK(manifest.find("status=completed") != std::string::npos);
  CHECK(manifest.find("[seeds]") != std::string::npos);
}

TEST_CASE("runs differing only in run index diverge") {
  TempDir tmp("rpslab_run_divergence");
  ExperimentConfig cfg = small_config();
  cfg.output_dir = tmp.path.string();
  fs::create_directories(tmp.path);

  const RunResult r0 = run_single(cfg, 0, 0);
  const RunResult r1 = run_single(cfg, 0, 1);
  REQUIRE(r0.completed);
  REQUIRE(r1.completed);
  const auto log0 = read_step_log((tmp.path / r0.log_path).string());
  const auto log1 = read_step_log((tmp.path / r1.log_path).string());
  REQUIRE(log0.size() == log1.size());
  bool any_difference = false;
  for (std::size_t i = 0; i < log0.size(); ++i) {
    if (log0[i].actions != log1[i].actions) {
      any_difference = true;
      break;
    }
  }
  CHECK(any_difference);
}
