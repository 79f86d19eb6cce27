#include "gbl/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "gbl/errors.hpp"

namespace gbl {

namespace {

bool is_flat_value(const nlohmann::json& v) {
  if (v.is_primitive()) return true;
  if (!v.is_array()) return false;
  for (const auto& e : v) {
    if (!e.is_primitive()) return false;
  }
  return true;
}

std::uint64_t as_count(const nlohmann::json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return std::uint64_t(v.get<std::int64_t>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return std::uint64_t(d);
  }
  throw ConfigError("config key '" + key + "' must be a non-negative integer");
}

}  // namespace

Config Config::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a flat JSON object");
  Config cfg;
  for (auto it = doc.begin(); it != doc.end(); ++it) cfg.set(it.key(), it.value());
  return cfg;
}

Config Config::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

void Config::set(const std::string& key, nlohmann::json value) {
  if (key.empty()) throw ConfigError("config keys must be nonempty");
  if (!is_flat_value(value)) {
    throw ConfigError("config key '" + key + "' must hold a scalar or a list of scalars");
  }
  values_[key] = std::move(value);
}

void Config::apply_override(const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like key=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  set(key, std::move(value));
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second.is_string()) return it->second.get<std::string>();
  if (it->second.is_primitive() && !it->second.is_null()) return it->second.dump();
  throw ConfigError("config key '" + key + "' must be a string");
}

double Config::get_real(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (!it->second.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return it->second.get<double>();
}

std::uint64_t Config::get_count(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  return as_count(it->second, key);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (!it->second.is_boolean()) throw ConfigError("config key '" + key + "' must be true or false");
  return it->second.get<bool>();
}

std::optional<double> Config::get_optional_real(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end() || it->second.is_null()) return std::nullopt;
  if (it->second.is_string() && it->second.get<std::string>() == "auto") return std::nullopt;
  if (!it->second.is_number()) {
    throw ConfigError("config key '" + key + "' must be a number or \"auto\"");
  }
  return it->second.get<double>();
}

std::vector<std::uint64_t> Config::get_count_list(
    const std::string& key, const std::vector<std::uint64_t>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<std::uint64_t> out;
  if (it->second.is_array()) {
    for (const auto& e : it->second) out.push_back(as_count(e, key));
  } else if (it->second.is_string()) {
    std::stringstream in(it->second.get<std::string>());
    std::string item;
    while (std::getline(in, item, ',')) {
      const nlohmann::json v = nlohmann::json::parse(item, nullptr, false);
      if (v.is_discarded()) throw ConfigError("config key '" + key + "' must list integers");
      out.push_back(as_count(v, key));
    }
  } else {
    out.push_back(as_count(it->second, key));
  }
  if (out.empty()) throw ConfigError("config key '" + key + "' must not be empty");
  return out;
}

void Config::require_known(const std::vector<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    bool found = false;
    for (const std::string& k : known) found = found || k == key;
    if (!found) throw ConfigError("unknown config key '" + key + "'");
  }
}

}  // namespace gbl
