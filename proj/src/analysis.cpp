#include "rpslab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

namespace fs = std::filesystem;

namespace rpslab {

std::optional<int> detect_period(std::span<const Action> seq, int max_period,
                                 double match_threshold) {
  if (max_period < 1) throw std::invalid_argument("max_period must be >= 1");
  const auto n = static_cast<long>(seq.size());
  if (n < 3L * max_period) {
    throw std::invalid_argument("sequence too short for the requested max_period");
  }
  for (int p = 1; p <= max_period; ++p) {
    long matches = 0;
    for (long t = p; t < n; ++t) {
      if (seq[static_cast<std::size_t>(t)] == seq[static_cast<std::size_t>(t - p)]) ++matches;
    }
    if (static_cast<double>(matches) >= match_threshold * static_cast<double>(n - p)) {
      return p;
    }
  }
  return std::nullopt;
}

EpisodeStats episode_stats(std::span<const StepRecord> records, int max_period,
                           double period_match, bool use_shaped) {
  if (records.empty()) throw std::invalid_argument("episode_stats: no records");
  const StepRecord& first = records.front();
  EpisodeStats stats;
  stats.run_id = first.run_id;
  stats.learning_rate = first.learning_rate;
  stats.episode = first.episode;
  stats.mode_tag = first.mode_tag;
  for (int i = 0; i < kNumAgents; ++i) stats.epsilon[i] = first.epsilon[i];

  const auto n = static_cast<long>(records.size());
  std::array<long, kNumAgents> reward_halves_sum{};
  std::array<long, kNumAgents> repeats{};
  std::array<std::array<long, kNumActions>, kNumAgents> counts{};
  for (long t = 0; t < n; ++t) {
    const StepRecord& rec = records[static_cast<std::size_t>(t)];
    if (rec.run_id != first.run_id || rec.episode != first.episode) {
      throw std::invalid_argument("episode_stats: records mix runs or episodes");
    }
    if (t > 0 && rec.step <= records[static_cast<std::size_t>(t - 1)].step) {
      throw std::invalid_argument("episode_stats: steps not strictly increasing");
    }
    const RewardVector& rv = use_shaped ? rec.shaped : rec.raw;
    for (int i = 0; i < kNumAgents; ++i) {
      reward_halves_sum[i] += rv.halves(i);
      ++counts[i][action_code(rec.actions[i])];
      if (rv.halves(i) == 4) ++stats.big_win_count[i];
      if (t > 0 && rec.actions[i] == records[static_cast<std::size_t>(t - 1)].actions[i]) {
        ++repeats[i];
      }
    }
  }

  for (int i = 0; i < kNumAgents; ++i) {
    stats.mean_reward[i] =
        static_cast<double>(reward_halves_sum[i]) / (2.0 * static_cast<double>(n));
    stats.repetition_rate[i] =
        n > 1 ? static_cast<double>(repeats[i]) / static_cast<double>(n - 1) : 0.0;
    double entropy = 0.0;
    for (int a = 0; a < kNumActions; ++a) {
      if (counts[i][a] == 0) continue;
      const double p = static_cast<double>(counts[i][a]) / static_cast<double>(n);
      entropy -= p * std::log2(p);
    }
    stats.entropy_bits[i] = entropy;
  }

  if (n >= 3L * max_period) {
    std::vector<Action> seq(static_cast<std::size_t>(n));
    for (int i = 0; i < kNumAgents; ++i) {
      for (long t = 0; t < n; ++t) {
        seq[static_cast<std::size_t>(t)] = records[static_cast<std::size_t>(t)].actions[i];
      }
      stats.dominant_period[i] = detect_period(seq, max_period, period_match);
    }
  }

  const Mode mode = parse_mode_tag(first.mode_tag);
  if (mode.has_cheaters()) {
    const double cheater_mean =
        (stats.mean_reward[mode.cheaters[0]] + stats.mean_reward[mode.cheaters[1]]) / 2.0;
    stats.displacement_index = cheater_mean - stats.mean_reward[mode.fair_index];
  }
  return stats;
}

std::vector<EpisodeStats> run_episode_stats(std::span<const StepRecord> records,
                                            int max_period, double period_match,
                                            bool use_shaped) {
  if (records.empty()) throw std::invalid_argument("run_episode_stats: no records");
  std::vector<EpisodeStats> series;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= records.size(); ++i) {
    if (i == records.size() || records[i].episode != records[start].episode) {
      const int expected = static_cast<int>(series.size());
      if (records[start].episode != expected) {
        throw std::invalid_argument("run_episode_stats: episodes not contiguous from 0 (saw " +
                                    std::to_string(records[start].episode) + ", expected " +
                                    std::to_string(expected) + ")");
      }
      series.push_back(episode_stats(records.subspan(start, i - start), max_period,
                                     period_match, use_shaped));
      start = i;
    }
  }
  return series;
}

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::Stage1: return "1";
    case Stage::Stage2: return "2";
    case Stage::Stage3a: return "3a";
    case Stage::Stage3b: return "3b";
  }
  return "?";
}

namespace {

struct RawSegment {
  int cls = 2;  // 1, 2 or 3 before the 3a/3b split
  int first = 0;
  int last = 0;
};

std::vector<RawSegment> to_segments(const std::vector<int>& cls) {
  std::vector<RawSegment> segments;
  for (int i = 0; i < static_cast<int>(cls.size()); ++i) {
    if (!segments.empty() && segments.back().cls == cls[static_cast<std::size_t>(i)]) {
      segments.back().last = i;
    } else {
      segments.push_back({cls[static_cast<std::size_t>(i)], i, i});
    }
  }
  return segments;
}

void merge_adjacent(std::vector<RawSegment>& segments) {
  std::vector<RawSegment> merged;
  for (const RawSegment& seg : segments) {
    if (!merged.empty() && merged.back().cls == seg.cls) {
      merged.back().last = seg.last;
    } else {
      merged.push_back(seg);
    }
  }
  segments = std::move(merged);
}

void smooth_segments(std::vector<RawSegment>& segments, int min_segment) {
  while (segments.size() > 1) {
    std::size_t victim = segments.size();
    for (std::size_t i = 0; i < segments.size(); ++i) {
      if (segments[i].last - segments[i].first + 1 < min_segment) {
        victim = i;
        break;
      }
    }
    if (victim == segments.size()) break;
    if (victim > 0) {
      segments[victim - 1].last = segments[victim].last;
    } else {
      segments[victim + 1].first = segments[victim].first;
    }
    segments.erase(segments.begin() + static_cast<std::ptrdiff_t>(victim));
    merge_adjacent(segments);
  }
}

}  // namespace

std::vector<StageSegment> label_stages(const std::vector<EpisodeStats>& series,
                                       const StageThresholds& th) {
  if (series.empty()) throw std::invalid_argument("label_stages: empty series");
  const int n = static_cast<int>(series.size());
  const double random_entropy = std::log2(3.0);

  std::vector<bool> zeroish(static_cast<std::size_t>(n));
  for (int e = 0; e < n; ++e) {
    const auto& means = series[static_cast<std::size_t>(e)].mean_reward;
    zeroish[static_cast<std::size_t>(e)] =
        std::all_of(means.begin(), means.end(),
                    [&](double m) { return std::abs(m) < th.stage3_mean_bound; });
  }
  // Near-zero play only counts as Stage 3 in stretches of stage3_min_run or
  // longer; isolated zero-mean episodes stay Stage 2.
  std::vector<bool> in_zero_run(static_cast<std::size_t>(n), false);
  for (int e = 0; e < n;) {
    if (!zeroish[static_cast<std::size_t>(e)]) {
      ++e;
      continue;
    }
    int end = e;
    while (end < n && zeroish[static_cast<std::size_t>(end)]) ++end;
    if (end - e >= th.stage3_min_run) {
      std::fill(in_zero_run.begin() + e, in_zero_run.begin() + end, true);
    }
    e = end;
  }

  std::vector<int> cls(static_cast<std::size_t>(n));
  for (int e = 0; e < n; ++e) {
    const EpisodeStats& s = series[static_cast<std::size_t>(e)];
    const double min_eps = *std::min_element(s.epsilon.begin(), s.epsilon.end());
    const bool all_random_entropy =
        std::all_of(s.entropy_bits.begin(), s.entropy_bits.end(),
                    [&](double h) { return h >= random_entropy - th.stage1_entropy_slack; });
    if (min_eps > th.stage1_epsilon || all_random_entropy) {
      cls[static_cast<std::size_t>(e)] = 1;
    } else if (in_zero_run[static_cast<std::size_t>(e)]) {
      cls[static_cast<std::size_t>(e)] = 3;
    } else {
      cls[static_cast<std::size_t>(e)] = 2;
    }
  }

  std::vector<RawSegment> segments = to_segments(cls);
  smooth_segments(segments, th.min_segment);

  std::vector<StageSegment> labeled;
  labeled.reserve(segments.size());
  for (const RawSegment& seg : segments) {
    StageSegment out;
    out.first_episode = seg.first;
    out.last_episode = seg.last;
    if (seg.cls == 1) {
      out.stage = Stage::Stage1;
    } else if (seg.cls == 2) {
      out.stage = Stage::Stage2;
    } else {
      bool repetitive = false;
      for (int i = 0; i < kNumAgents; ++i) {
        double sum = 0.0;
        for (int e = seg.first; e <= seg.last; ++e) {
          sum += series[static_cast<std::size_t>(e)].repetition_rate[i];
        }
        if (sum / static_cast<double>(seg.last - seg.first + 1) > th.stage3a_repetition) {
          repetitive = true;
          break;
        }
      }
      out.stage = repetitive ? Stage::Stage3a : Stage::Stage3b;
    }
    labeled.push_back(out);
  }
  return labeled;
}

Quartiles quartiles(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("quartiles: no values");
  std::sort(values.begin(), values.end());
  const auto at = [&](double p) {
    const double h = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
  };
  Quartiles q;
  q.min = values.front();
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  q.max = values.back();
  return q;
}

namespace {

struct RunSeries {
  int run_id = 0;
  double learning_rate = 0.0;
  Mode mode;
  std::vector<EpisodeStats> episodes;
};

std::array<int, kNumAgents> bigwin_columns(const Mode& mode) {
  // Column order f, c1, c2; fair campaigns fall back to seat order.
  if (mode.has_cheaters()) return {mode.fair_index, mode.cheaters[0], mode.cheaters[1]};
  return {0, 1, 2};
}

void write_stages_csv(const std::string& path, const std::vector<RunSeries>& runs,
                      const StageThresholds& th) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "run_id,stage,first_episode,last_episode\n";
  for (const RunSeries& run : runs) {
    for (const StageSegment& seg : label_stages(run.episodes, th)) {
      out << run.run_id << ',' << stage_name(seg.stage) << ',' << seg.first_episode << ','
          << seg.last_episode << '\n';
    }
  }
}

void write_displacement_csv(const std::string& path, const std::vector<RunSeries>& runs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "run_id,episode,displacement_index,bigwin_f,bigwin_c1,bigwin_c2\n";
  for (const RunSeries& run : runs) {
    const std::array<int, kNumAgents> cols = bigwin_columns(run.mode);
    for (const EpisodeStats& e : run.episodes) {
      out << run.run_id << ',' << e.episode << ',' << format_double(e.displacement_index);
      for (int c : cols) out << ',' << e.big_win_count[c];
      out << '\n';
    }
  }
}

void write_distribution_csvs(const std::string& dir, const std::vector<RunSeries>& runs) {
  // Group per-episode means across the runs sharing a learning rate.
  std::map<std::string, std::vector<const RunSeries*>> by_lr;
  for (const RunSeries& run : runs) by_lr[format_double(run.learning_rate)].push_back(&run);
  for (const auto& [lr_text, group] : by_lr) {
    const std::string path = (fs::path(dir) / ("rewards_lr" + lr_text + ".csv")).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "lr,episode_bucket,agent,min,q1,median,q3,max\n";
    int max_episodes = 0;
    for (const RunSeries* run : group) {
      max_episodes = std::max(max_episodes, static_cast<int>(run->episodes.size()));
    }
    for (int episode = 0; episode < max_episodes; ++episode) {
      for (int agent = 0; agent < kNumAgents; ++agent) {
        std::vector<double> values;
        for (const RunSeries* run : group) {
          if (episode < static_cast<int>(run->episodes.size())) {
            values.push_back(run->episodes[static_cast<std::size_t>(episode)].mean_reward[agent]);
          }
        }
        if (values.empty()) continue;
        const Quartiles q = quartiles(std::move(values));
        out << lr_text << ',' << episode << ',' << agent << ',' << format_double(q.min) << ','
            << format_double(q.q1) << ',' << format_double(q.median) << ','
            << format_double(q.q3) << ',' << format_double(q.max) << '\n';
      }
    }
  }
}

void write_report(const std::string& path, const AnalysisOptions& opt,
                  const std::vector<RunSeries>& runs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# analysis report\n";
  out << "input = " << opt.input_dir << "\n";
  out << "runs = " << runs.size() << "\n";
  out << "reward_scale = " << (opt.use_shaped ? "shaped" : "raw") << "\n";
  out << "max_period = " << opt.max_period << "\n";
  for (const RunSeries& run : runs) {
    out << "\n[run " << run.run_id << "]\n";
    out << "lr = " << format_double(run.learning_rate) << "\n";
    out << "mode = " << run.mode.tag() << "\n";
    out << "episodes = " << run.episodes.size() << "\n";
    out << "stages =";
    for (const StageSegment& seg : label_stages(run.episodes, opt.thresholds)) {
      out << " " << stage_name(seg.stage) << "[" << seg.first_episode << "-"
          << seg.last_episode << "]";
    }
    out << "\n";

    const int n = static_cast<int>(run.episodes.size());
    const int tail = std::min(10, n);
    out << "final_" << tail << "_mean =";
    for (int agent = 0; agent < kNumAgents; ++agent) {
      double sum = 0.0;
      for (int e = n - tail; e < n; ++e) {
        sum += run.episodes[static_cast<std::size_t>(e)].mean_reward[agent];
      }
      out << " a" << agent << ":" << format_double(sum / tail);
    }
    out << "\n";
    out << "big_wins_total =";
    for (int agent = 0; agent < kNumAgents; ++agent) {
      long total = 0;
      for (const EpisodeStats& e : run.episodes) total += e.big_win_count[agent];
      out << " a" << agent << ":" << total;
    }
    out << "\n";
    double disp = 0.0;
    for (const EpisodeStats& e : run.episodes) disp += e.displacement_index;
    out << "displacement_mean = " << format_double(disp / n) << "\n";
  }
}

}  // namespace

int run_analysis(const AnalysisOptions& opt, std::ostream& diagnostics) {
  std::vector<std::string> files;
  {
    std::error_code ec;
    fs::directory_iterator it(opt.input_dir, ec);
    if (ec) {
      diagnostics << "cannot read input directory " << opt.input_dir << ": " << ec.message()
                  << "\n";
      return 1;
    }
    for (const fs::directory_entry& entry : it) {
      const std::string name = entry.path().filename().string();
      if (name.starts_with("run_") && name.ends_with(".csv")) {
        files.push_back(entry.path().string());
      }
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    diagnostics << "no run_*.csv logs under " << opt.input_dir << "\n";
    return 1;
  }

  std::vector<RunSeries> runs;
  for (const std::string& file : files) {
    try {
      const std::vector<StepRecord> records = read_step_log(file);
      if (records.empty()) throw std::runtime_error("no data rows");
      for (const StepRecord& rec : records) {
        if (rec.run_id != records.front().run_id) {
          throw std::runtime_error("mixes run ids " + std::to_string(records.front().run_id) +
                                   " and " + std::to_string(rec.run_id));
        }
      }
      RunSeries run;
      run.run_id = records.front().run_id;
      run.learning_rate = records.front().learning_rate;
      run.mode = parse_mode_tag(records.front().mode_tag);
      run.episodes = run_episode_stats(records, opt.max_period, opt.thresholds.period_match,
                                       opt.use_shaped);
      runs.push_back(std::move(run));
    } catch (const std::exception& e) {
      diagnostics << file << ": " << e.what() << "\n";
      return 1;
    }
  }
  std::sort(runs.begin(), runs.end(),
            [](const RunSeries& a, const RunSeries& b) { return a.run_id < b.run_id; });

  try {
    if (!opt.plot_dir.empty()) fs::create_directories(opt.plot_dir);
    write_report(opt.report_path, opt, runs);
    if (!opt.plot_dir.empty()) {
      write_stages_csv((fs::path(opt.plot_dir) / "stages.csv").string(), runs,
                       opt.thresholds);
      write_displacement_csv((fs::path(opt.plot_dir) / "displacement.csv").string(), runs);
      write_distribution_csvs(opt.plot_dir, runs);
    }
  } catch (const std::exception& e) {
    diagnostics << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace rpslab
