#include "rpslab/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace rpslab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  const auto pos = line.find_first_of("#;");
  return pos == std::string::npos ? line : line.substr(0, pos);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(trim(item));
  return items;
}

}  // namespace

void KeyValues::insert(const std::string& key, const std::string& value,
                       const std::string& where) {
  if (index_.contains(key)) {
    throw std::runtime_error(where + ": duplicate key '" + key + "'");
  }
  entries_.emplace_back(key, value);
  index_.emplace(key, value);
}

KeyValues KeyValues::parse_text(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::stringstream in(text);
  std::string line, section;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw std::runtime_error(where + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw std::runtime_error(where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(where + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw std::runtime_error(where + ": empty key");
    kv.insert(section.empty() ? key : section + "." + key, value, where);
  }
  return kv;
}

KeyValues KeyValues::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path);
}

bool KeyValues::contains(const std::string& dotted_key) const {
  return index_.contains(dotted_key);
}

std::optional<std::string> KeyValues::find(const std::string& dotted_key) const {
  const auto it = index_.find(dotted_key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& KeyValues::require(const std::string& dotted_key) const {
  const auto it = index_.find(dotted_key);
  if (it == index_.end()) {
    throw std::runtime_error("missing config key '" + dotted_key + "'");
  }
  return it->second;
}

std::string KeyValues::get_string(const std::string& dotted_key) const {
  return require(dotted_key);
}

namespace {

int to_int(const std::string& key, const std::string& s) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("config key '" + key + "': not an integer: '" + s + "'");
  }
  return v;
}

double to_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("config key '" + key + "': not a number: '" + s + "'");
  }
  return v;
}

}  // namespace

int KeyValues::get_int(const std::string& dotted_key) const {
  return to_int(dotted_key, require(dotted_key));
}

double KeyValues::get_double(const std::string& dotted_key) const {
  return to_double(dotted_key, require(dotted_key));
}

bool KeyValues::get_bool(const std::string& dotted_key) const {
  const std::string& s = require(dotted_key);
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  throw std::runtime_error("config key '" + dotted_key + "': not a boolean: '" + s + "'");
}

std::uint64_t KeyValues::get_u64(const std::string& dotted_key) const {
  const std::string& s = require(dotted_key);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("config key '" + dotted_key + "': not an unsigned integer: '" +
                             s + "'");
  }
  return v;
}

std::vector<double> KeyValues::get_double_list(const std::string& dotted_key) const {
  std::vector<double> values;
  for (const std::string& item : split_list(require(dotted_key))) {
    values.push_back(to_double(dotted_key, item));
  }
  if (values.empty()) throw std::runtime_error("config key '" + dotted_key + "': empty list");
  return values;
}

std::vector<int> KeyValues::get_int_list(const std::string& dotted_key) const {
  std::vector<int> values;
  for (const std::string& item : split_list(require(dotted_key))) {
    values.push_back(to_int(dotted_key, item));
  }
  if (values.empty()) throw std::runtime_error("config key '" + dotted_key + "': empty list");
  return values;
}

}  // namespace rpslab
