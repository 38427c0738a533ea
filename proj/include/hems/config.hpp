#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace hems {

// Flat `key = value` configuration. Lines starting with '#' are comments.
// Keys are tracked as they are read so callers can reject typos.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  // Each getter returns `fallback` when the key is absent and throws
  // ParameterError when the value does not parse.
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<int> get_ints(const std::string& key, const std::vector<int>& fallback) const;
  std::vector<std::string> get_strings(const std::string& key,
                                       const std::vector<std::string>& fallback) const;

  // Keys present in the file that no getter has asked for.
  std::vector<std::string> unused_keys() const;

 private:
  const std::string* find(const std::string& key) const;

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

// Comma separated list helpers shared with the CLI.
std::vector<double> parse_double_list(const std::string& text);
std::vector<std::string> split_list(const std::string& text, char sep = ',');

// Shortest decimal text that reads back to the identical double.
std::string format_double(double value);
double parse_double(const std::string& text);

}  // namespace hems
