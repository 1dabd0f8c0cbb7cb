#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coagsed/util.hpp"

namespace coagsed {

// Flat key = value configuration with dotted section names, e.g.
//   kernel.type = sum
//   grid.ny     = 128
// '#' starts a comment. Unknown keys are rejected at load.
class Config {
 public:
  Config() = default;

  static const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "params.epsilon", "params.alpha", "params.gamma", "params.b",
        "params.m", "params.A", "params.M1", "params.M2", "params.L",
        "params.K3", "params.mode",
        "kernel.type", "kernel.gamma", "kernel.alpha", "kernel.K0",
        "kernel.epsilon_scale", "kernel.truncation_N",
        "grid.y_min", "grid.y_max", "grid.ny", "grid.v_min", "grid.v_max",
        "grid.q",
        "init.window", "init.window_margin",
        "solver.type", "solver.T", "solver.dt", "solver.snapshot_every",
        "picard.T", "picard.slices", "picard.tol", "picard.max_iter",
        "diag.delta",
        "diagonal.T", "diagonal.dt",
        "sweep.epsilons", "sweep.t",
        "char.count", "char.t_end", "char.d",
        "run.seed", "run.threads",
    };
    return keys;
  }

  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
  }

  static Config from_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r\n");
        auto e = s.find_last_not_of(" \t\r\n");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      std::string stripped = trim(line);
      if (stripped.empty()) continue;
      auto eq = stripped.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config: line " + std::to_string(lineno) +
                                 " is not `key = value`");
      std::string key = trim(stripped.substr(0, eq));
      std::string val = trim(stripped.substr(eq + 1));
      if (!known_keys().count(key))
        throw std::runtime_error("config: unknown key `" + key + "`");
      cfg.values_[key] = val;
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_str(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_num(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_num(key, it->second);
  }

  int get_int(const std::string& key, int fallback) const {
    double v = get_num(key, fallback);
    int i = static_cast<int>(std::llround(v));
    if (std::fabs(v - i) > 1e-9)
      throw std::runtime_error("config: key `" + key + "` must be an integer");
    return i;
  }

  std::vector<double> get_list(const std::string& key,
                               const std::vector<double>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) out.push_back(parse_num(key, tok));
    return out;
  }

  void set(const std::string& key, const std::string& val) {
    if (!known_keys().count(key))
      throw std::runtime_error("config: unknown key `" + key + "`");
    values_[key] = val;
  }

  // canonical text form, sorted by key (used in output headers)
  std::string resolved_text() const {
    std::string out;
    for (const auto& [k, v] : values_) {
      out += k;
      out += " = ";
      out += v;
      out += "\n";
    }
    return out;
  }

  const std::map<std::string, std::string>& items() const { return values_; }

 private:
  static double parse_num(const std::string& key, const std::string& s) {
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      throw std::runtime_error("config: key `" + key + "` has non-numeric value `" +
                               s + "`");
    }
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size())
      throw std::runtime_error("config: key `" + key + "` has non-numeric value `" +
                               s + "`");
    return v;
  }

  std::map<std::string, std::string> values_;
};

}  // namespace coagsed
