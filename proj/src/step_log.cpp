#include "rpslab/step_log.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <system_error>

namespace rpslab {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

int parse_halves(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("not a reward value: '" + s + "'");
  }
  const double doubled = v * 2.0;
  if (doubled != std::round(doubled) || std::abs(doubled) > 1e6) {
    throw std::runtime_error("reward is not an exact half: '" + s + "'");
  }
  return static_cast<int>(doubled);
}

namespace {

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("not a number: '" + s + "'");
  }
  return v;
}

int parse_int(const std::string& s) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("not an integer: '" + s + "'");
  }
  return v;
}

Action parse_action(const std::string& s) {
  const int code = parse_int(s);
  if (code < 0 || code >= kNumActions) {
    throw std::runtime_error("action code out of range: " + std::to_string(code));
  }
  return static_cast<Action>(code);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace

std::string to_csv_row(const StepRecord& rec) {
  std::string row;
  row.reserve(96);
  row += std::to_string(rec.run_id);
  row += ',';
  row += format_double(rec.learning_rate);
  row += ',';
  row += std::to_string(rec.episode);
  row += ',';
  row += std::to_string(rec.step);
  for (int i = 0; i < kNumAgents; ++i) {
    row += ',';
    row += std::to_string(action_code(rec.actions[i]));
  }
  for (int i = 0; i < kNumAgents; ++i) {
    row += ',';
    row += rec.raw.decimal(i);
  }
  for (int i = 0; i < kNumAgents; ++i) {
    row += ',';
    row += rec.shaped.decimal(i);
  }
  for (int i = 0; i < kNumAgents; ++i) {
    row += ',';
    row += format_double(rec.epsilon[i]);
  }
  row += ',';
  if (rec.message) row += std::to_string(action_code(*rec.message));
  row += ',';
  row += rec.mode_tag;
  return row;
}

StepRecord parse_csv_row(const std::string& line) {
  const std::vector<std::string> f = split_csv(line);
  if (f.size() != 18) {
    throw std::runtime_error("expected 18 fields, got " + std::to_string(f.size()));
  }
  StepRecord rec;
  rec.run_id = parse_int(f[0]);
  rec.learning_rate = parse_double(f[1]);
  rec.episode = parse_int(f[2]);
  rec.step = parse_int(f[3]);
  std::array<int, kNumAgents> raw_halves{}, shaped_halves{};
  for (int i = 0; i < kNumAgents; ++i) {
    rec.actions[i] = parse_action(f[4 + i]);
    raw_halves[i] = parse_halves(f[7 + i]);
    shaped_halves[i] = parse_halves(f[10 + i]);
    rec.epsilon[i] = parse_double(f[13 + i]);
  }
  rec.raw = RewardVector::from_halves(raw_halves);
  rec.shaped = RewardVector::from_halves(shaped_halves);
  if (!f[16].empty()) rec.message = parse_action(f[16]);
  rec.mode_tag = f[17];
  if (rec.mode_tag.empty()) throw std::runtime_error("empty mode tag");
  return rec;
}

StepLogWriter::StepLogWriter(const std::string& path)
    : path_(path), out_(path, std::ios::binary) {
  if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
  out_ << kStepLogHeader << '\n';
}

void StepLogWriter::append(const StepRecord& rec) { out_ << to_csv_row(rec) << '\n'; }

void StepLogWriter::close() {
  out_.flush();
  if (!out_) throw std::runtime_error("write failure on " + path_);
  out_.close();
}

void write_step_log(const std::string& path, const std::vector<StepRecord>& records) {
  StepLogWriter writer(path);
  for (const StepRecord& rec : records) writer.append(rec);
  writer.close();
}

std::vector<StepRecord> read_step_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kStepLogHeader) {
    throw std::runtime_error(path + ":1: missing or unexpected header");
  }
  std::vector<StepRecord> records;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(parse_csv_row(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace rpslab
