#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace finelt {

/// Flat key-value configuration: one `key = value` pair per line, `#` starts
/// a comment. List values are pipe-separated. Lookups that parse fail with
/// the offending key in the message.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig parse_file(const std::filesystem::path& path);

  bool contains(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;
  std::string get_string(const std::string& key, std::string fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  uint64_t get_uint(const std::string& key, uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key,
                                    std::vector<std::string> fallback) const;

  void set(const std::string& key, std::string value);
  const std::map<std::string, std::string>& values() const { return values_; }

  /// Throws when a key outside `known` is present (typo protection).
  void require_known(const std::set<std::string>& known) const;

  /// Sorted `key=value` lines; the basis of the config hash.
  std::string canonical() const;
  uint64_t hash() const;  // FNV-1a over canonical()

 private:
  std::map<std::string, std::string> values_;
};

uint64_t fnv1a64(std::string_view data);

}  // namespace finelt
