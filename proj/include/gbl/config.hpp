#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace gbl {

// Flat key -> scalar (or list of scalars) map read from a JSON object and
// patched with "key=value" overrides. Values are parsed as JSON when
// possible, otherwise kept as strings, so --set width=64 is a number and
// --set activation=tanh a string.
class Config {
 public:
  Config() = default;
  static Config from_file(const std::filesystem::path& path);
  static Config from_json(const std::string& text);

  void set(const std::string& key, nlohmann::json value);
  void apply_override(const std::string& assignment);

  bool has(const std::string& key) const { return values_.contains(key); }
  const std::map<std::string, nlohmann::json>& values() const noexcept { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_real(const std::string& key, double fallback) const;
  std::uint64_t get_count(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::optional<double> get_optional_real(const std::string& key) const;
  std::vector<std::uint64_t> get_count_list(const std::string& key,
                                            const std::vector<std::uint64_t>& fallback) const;

  // ConfigError naming the first key outside `known`.
  void require_known(const std::vector<std::string>& known) const;

 private:
  std::map<std::string, nlohmann::json> values_;
};

}  // namespace gbl
