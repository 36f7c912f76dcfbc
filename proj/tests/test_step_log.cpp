#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "rpslab/step_log.hpp"

using namespace rpslab;

namespace {

StepRecord sample_record() {
  StepRecord rec;
  rec.run_id = 7;
  rec.learning_rate = 0.005;
  rec.episode = 3;
  rec.step = 41;
  rec.actions = {Action::Paper, Action::Rock, Action::Rock};
  rec.raw = RewardVector::from_halves({4, -2, -2});
  rec.shaped = RewardVector::from_halves({4, -2, -2});
  rec.epsilon = {0.95, 0.95, 1.0};
  rec.mode_tag = "fair";
  return rec;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  for (const std::string& l : lines) out << l << '\n';
}

}  // namespace

TEST_CASE("doubles print as the shortest round-trip decimal") {
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.95) == "0.95");
  CHECK(format_double(0.005) == "0.005");
  CHECK(format_double(0.1 + 0.2) == "0.30000000000000004");
  CHECK(format_double(-2.5) == "-2.5");
  CHECK(format_double(0.0) == "0");
}

TEST_CASE("reward strings parse into exact halves") {
  CHECK(parse_halves("-1") == -2);
  CHECK(parse_halves("0") == 0);
  CHECK(parse_halves("0.5") == 1);
  CHECK(parse_halves("-0.5") == -1);
  CHECK(parse_halves("2") == 4);
  CHECK(parse_halves("1.5") == 3);
  CHECK_THROWS_AS(parse_halves("0.3"), std::runtime_error);
  CHECK_THROWS_AS(parse_halves("abc"), std::runtime_error);
  CHECK_THROWS_AS(parse_halves("1x"), std::runtime_error);
  CHECK_THROWS_AS(parse_halves("9e9"), std::runtime_error);
}

TEST_CASE("a record renders to a stable row and parses back") {
  StepRecord rec = sample_record();
  CHECK(to_csv_row(rec) == "7,0.005,3,41,1,0,0,2,-1,-1,2,-1,-1,0.95,0.95,1,,fair");
  CHECK(parse_csv_row(to_csv_row(rec)) == rec);

  rec.message = Action::Scissors;
  rec.mode_tag = "explicit-f0-s1-r2";
  rec.shaped = RewardVector::from_halves({4, 2, 2});
  CHECK(to_csv_row(rec) == "7,0.005,3,41,1,0,0,2,-1,-1,2,1,1,0.95,0.95,1,2,explicit-f0-s1-r2");
  CHECK(parse_csv_row(to_csv_row(rec)) == rec);
}

TEST_CASE("row parsing rejects malformed input") {
  const std::string good = to_csv_row(sample_record());
  CHECK_THROWS_AS(parse_csv_row(good + ",extra"), std::runtime_error);
  CHECK_THROWS_AS(parse_csv_row("1,2,3"), std::runtime_error);

  std::string bad_action = good;
  bad_action.replace(good.find(",1,0,0,"), 7, ",5,0,0,");
  CHECK_THROWS_AS(parse_csv_row(bad_action), std::runtime_error);

  StepRecord no_mode = sample_record();
  no_mode.mode_tag.clear();
  CHECK_THROWS_AS(parse_csv_row(to_csv_row(no_mode)), std::runtime_error);
}

TEST_CASE("step logs round-trip through files with the fixed header") {
  std::vector<StepRecord> records;
  for (int s = 0; s < 5; ++s) {
    StepRecord rec = sample_record();
    rec.step = s;
    rec.message = s % 2 ? std::optional<Action>(Action::Paper) : std::nullopt;
    if (rec.message) rec.mode_tag = "explicit-f0-s1-r2";
    records.push_back(rec);
  }

  const std::string path = "step_log_roundtrip.csv";
  write_step_log(path, records);

  std::ifstream in(path, std::ios::binary);
  std::string first;
  std::getline(in, first);
  CHECK(first == kStepLogHeader);
  in.close();

  CHECK(read_step_log(path) == records);
  std::remove(path.c_str());
}

TEST_CASE("log reading reports the file position of a bad row") {
  const std::string path = "step_log_bad.csv";

  write_lines(path, {"wrong header"});
  CHECK_THROWS_WITH_AS(read_step_log(path),
                       doctest::Contains((path + ":1").c_str()), std::runtime_error);

  write_lines(path, {kStepLogHeader, to_csv_row(sample_record()), "garbage,row"});
  CHECK_THROWS_WITH_AS(read_step_log(path),
                       doctest::Contains((path + ":3").c_str()), std::runtime_error);

  std::remove(path.c_str());
  CHECK_THROWS_AS(read_step_log(path), std::runtime_error);
}

TEST_CASE("empty trailing lines are tolerated when reading") {
  const std::string path = "step_log_trailing.csv";
  write_lines(path, {kStepLogHeader, to_csv_row(sample_record()), ""});
  CHECK(read_step_log(path).size() == 1);
  std::remove(path.c_str());
}
