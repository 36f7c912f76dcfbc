#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rpslab {

// Flat "key = value" configuration with [section] headers. Keys are addressed
// as "section.key"; '#' and ';' start comments; duplicate keys are an error.
class KeyValues {
 public:
  static KeyValues parse_file(const std::string& path);
  static KeyValues parse_text(const std::string& text, const std::string& origin = "<text>");

  bool contains(const std::string& dotted_key) const;
  std::optional<std::string> find(const std::string& dotted_key) const;

  std::string get_string(const std::string& dotted_key) const;  // throws if missing
  int get_int(const std::string& dotted_key) const;
  double get_double(const std::string& dotted_key) const;
  bool get_bool(const std::string& dotted_key) const;  // true/false/yes/no/1/0
  std::uint64_t get_u64(const std::string& dotted_key) const;
  std::vector<double> get_double_list(const std::string& dotted_key) const;  // comma-separated
  std::vector<int> get_int_list(const std::string& dotted_key) const;

  // Entries in file order, keys fully dotted.
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  void insert(const std::string& key, const std::string& value, const std::string& where);
  const std::string& require(const std::string& dotted_key) const;

  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::string> index_;
};

}  // namespace rpslab
