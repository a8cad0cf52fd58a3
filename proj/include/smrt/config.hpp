#pragma once

// Flat `key = value` run configuration files. Unknown keys are rejected so a
// typo cannot silently fall back to a default.

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace smrt {

class KeyValueFile {
 public:
  KeyValueFile() = default;

  static KeyValueFile parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("config: cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), path);
  }

  static KeyValueFile parse_text(const std::string& text, const std::string& origin = "<text>") {
    KeyValueFile kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const size_t hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      const size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                 ": expected 'key = value'");
      auto trim = [](std::string s) {
        const size_t b = s.find_first_not_of(" \t");
        const size_t e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty())
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
      if (kv.values_.count(key))
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                                 key + "'");
      kv.values_[key] = value;
    }
    return kv;
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string take_string(const std::string& key, const std::string& fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string v = it->second;
    values_.erase(it);
    return v;
  }

  std::string take_required(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) throw std::runtime_error("config: missing required key '" + key + "'");
    std::string v = it->second;
    values_.erase(it);
    return v;
  }

  int take_int(const std::string& key, int fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const int v = std::stoi(it->second);
    values_.erase(it);
    return v;
  }

  double take_double(const std::string& key, double fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const double v = std::stod(it->second);
    values_.erase(it);
    return v;
  }

  bool take_bool(const std::string& key, bool fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string v = it->second;
    values_.erase(it);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::runtime_error("config: key '" + key + "' has non-boolean value '" + v + "'");
  }

  std::vector<double> take_double_list(const std::string& key, std::vector<double> fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    std::string item;
    std::istringstream ss(it->second);
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    values_.erase(it);
    return out;
  }

  // Call after all take_* calls; anything left over is a typo.
  void reject_unknown() const {
    if (values_.empty()) return;
    std::string msg = "config: unknown keys:";
    for (const auto& [k, _] : values_) msg += " '" + k + "'";
    throw std::runtime_error(msg);
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace smrt
