#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dotadmm/errors.hpp"
#include "dotadmm/harness.hpp"

namespace dotadmm {

// Flat "key = value" configuration with [section] headers, '#' comments and
// comma-separated lists. Every key is checked against the schema below;
// unknown or missing keys are reported by name.

struct ConfigEntry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
  bool used = false;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline std::vector<ConfigEntry> parse_config_text(const std::string& text) {
  std::vector<ConfigEntry> entries;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) +
                          ": malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("line " + std::to_string(lineno) +
                          ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    ConfigEntry e;
    e.section = section;
    e.key = detail::trim(line.substr(0, eq));
    e.value = detail::trim(line.substr(eq + 1));
    e.line = lineno;
    if (e.key.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    entries.push_back(std::move(e));
  }
  return entries;
}

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(std::vector<ConfigEntry> entries)
      : entries_(std::move(entries)) {}

  ConfigEntry* find(const std::string& section, const std::string& key) {
    ConfigEntry* hit = nullptr;
    for (auto& e : entries_) {
      if (e.section == section && e.key == key) {
        if (hit)
          throw ConfigError("duplicate key '" + key + "' in section [" +
                            section + "] (line " + std::to_string(e.line) +
                            ")");
        hit = &e;
      }
    }
    if (hit) hit->used = true;
    return hit;
  }

  std::string require(const std::string& section, const std::string& key) {
    const ConfigEntry* e = find(section, key);
    if (!e)
      throw ConfigError("missing required key '" + key + "' in section [" +
                        section + "]");
    return e->value;
  }

  bool has(const std::string& section, const std::string& key) {
    for (const auto& e : entries_)
      if (e.section == section && e.key == key) return true;
    return false;
  }

  // Call after reading everything; flags typos.
  void reject_unused() const {
    for (const auto& e : entries_)
      if (!e.used)
        throw ConfigError("unknown key '" + e.key + "' in section [" +
                          e.section + "] (line " + std::to_string(e.line) +
                          ")");
  }

 private:
  std::vector<ConfigEntry> entries_;
};

inline long long to_int(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return r;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v +
                      "'");
  }
}

inline std::uint64_t to_u64(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const unsigned long long r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return r;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key +
                      "': expected a non-negative integer, got '" + v + "'");
  }
}

inline double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return r;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v +
                      "'");
  }
}

inline bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + v +
                    "'");
}

inline std::vector<std::pair<int, int>> to_edge_list(const std::string& v,
                                                     const std::string& key) {
  std::vector<std::pair<int, int>> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash == std::string::npos)
      throw ConfigError("key '" + key + "': expected pairs like 0-1, got '" +
                        item + "'");
    out.emplace_back(
        static_cast<int>(to_int(trim(item.substr(0, dash)), key)),
        static_cast<int>(to_int(trim(item.substr(dash + 1)), key)));
  }
  if (out.empty())
    throw ConfigError("key '" + key + "': empty edge list");
  return out;
}

}  // namespace detail

inline Scenario scenario_from_entries(std::vector<ConfigEntry> entries) {
  detail::ConfigReader r(std::move(entries));
  Scenario s;

  if (const auto* e = r.find("scenario", "name")) s.name = e->value;
  s.horizon = static_cast<int>(
      detail::to_int(r.require("scenario", "horizon"), "horizon"));
  s.trials = static_cast<int>(
      detail::to_int(r.require("scenario", "trials"), "trials"));
  s.master_seed =
      detail::to_u64(r.require("scenario", "master_seed"), "master_seed");
  if (const auto* e = r.find("scenario", "gamma")) {
    if (e->value == "auto") {
      s.gamma_mode = GammaMode::automatic;
    } else if (e->value == "none") {
      s.gamma_mode = GammaMode::none;
    } else {
      s.gamma_mode = GammaMode::fixed;
      s.gamma_value = detail::to_double(e->value, "gamma");
    }
  }
  if (const auto* e = r.find("scenario", "gamma_samples"))
    s.gamma_samples =
        static_cast<int>(detail::to_int(e->value, "gamma_samples"));
  if (const auto* e = r.find("scenario", "gamma_radius"))
    s.gamma_radius = detail::to_double(e->value, "gamma_radius");

  s.topology.n =
      static_cast<int>(detail::to_int(r.require("topology", "n"), "n"));
  const bool has_list = r.has("topology", "edge_list");
  if (has_list && r.has("topology", "edges"))
    throw ConfigError(
        "section [topology]: give either 'edges' or 'edge_list', not both");
  if (has_list) {
    const auto* e = r.find("topology", "edge_list");
    s.topology.edge_list = detail::to_edge_list(e->value, "edge_list");
  } else {
    s.topology.edges = static_cast<int>(
        detail::to_int(r.require("topology", "edges"), "edges"));
  }
  if (const auto* e = r.find("topology", "seed"))
    s.topology.seed = detail::to_u64(e->value, "seed");

  const std::string type = r.require("cost", "type");
  if (type == "logistic") {
    s.cost.logistic = true;
  } else if (type == "linear") {
    s.cost.logistic = false;
  } else {
    throw ConfigError("key 'type': expected linear or logistic, got '" +
                      type + "'");
  }
  if (const auto* e = r.find("cost", "csv")) s.cost.csv_path = e->value;
  if (s.cost.csv_path.empty()) {
    s.cost.dimension = static_cast<int>(
        detail::to_int(r.require("cost", "dimension"), "dimension"));
    s.cost.samples_per_agent = static_cast<int>(detail::to_int(
        r.require("cost", "samples_per_agent"), "samples_per_agent"));
  } else {
    if (const auto* e = r.find("cost", "dimension"))
      s.cost.dimension =
          static_cast<int>(detail::to_int(e->value, "dimension"));
    if (const auto* e = r.find("cost", "samples_per_agent"))
      s.cost.samples_per_agent = static_cast<int>(
          detail::to_int(e->value, "samples_per_agent"));
  }
  if (const auto* e = r.find("cost", "reg_weight"))
    s.cost.reg_weight = detail::to_double(e->value, "reg_weight");
  if (const auto* e = r.find("cost", "feature_scale"))
    s.cost.feature_scale = detail::to_double(e->value, "feature_scale");
  if (const auto* e = r.find("cost", "label_noise"))
    s.cost.label_noise = detail::to_double(e->value, "label_noise");
  if (const auto* e = r.find("cost", "seed"))
    s.cost.seed = detail::to_u64(e->value, "seed");
  if (const auto* e = r.find("cost", "switches"))
    s.cost.switches = static_cast<int>(detail::to_int(e->value, "switches"));
  if (const auto* e = r.find("cost", "drift_target"))
    s.cost.drift_target = detail::to_double(e->value, "drift_target");

  s.params.alpha = detail::to_double(r.require("algorithm", "alpha"), "alpha");
  s.params.rho = detail::to_double(r.require("algorithm", "rho"), "rho");
  s.params.prox.threshold =
      detail::to_double(r.require("algorithm", "theta"), "theta");
  if (const auto* e = r.find("algorithm", "max_inner_iterations"))
    s.params.prox.max_inner_iterations =
        static_cast<int>(detail::to_int(e->value, "max_inner_iterations"));

  if (const auto* e = r.find("channel", "p_fast"))
    s.channel.p_fast = detail::to_double(e->value, "p_fast");
  if (const auto* e = r.find("channel", "p_slow"))
    s.channel.p_slow = detail::to_double(e->value, "p_slow");
  if (const auto* e = r.find("channel", "slow_nodes"))
    s.channel.slow_nodes =
        static_cast<int>(detail::to_int(e->value, "slow_nodes"));
  if (const auto* e = r.find("channel", "noise_v"))
    s.channel.noise_v = detail::to_double(e->value, "noise_v");
  if (const auto* e = r.find("channel", "noise_u"))
    s.channel.noise_u = detail::to_double(e->value, "noise_u");
  if (const auto* e = r.find("channel", "quantizer_delta"))
    s.channel.quantizer_delta =
        detail::to_double(e->value, "quantizer_delta");
  if (const auto* e = r.find("channel", "quantizer_max"))
    s.channel.quantizer_max = detail::to_double(e->value, "quantizer_max");
  if (const auto* e = r.find("channel", "lossy_self_loops"))
    s.channel.lossy_self_loops =
        detail::to_bool(e->value, "lossy_self_loops");

  r.reject_unused();

  // Range checks beyond what later stages validate lazily.
  if (s.horizon < 1) throw ConfigError("key 'horizon': must be >= 1");
  if (s.trials < 1) throw ConfigError("key 'trials': must be >= 1");
  if (s.gamma_samples < 1)
    throw ConfigError("key 'gamma_samples': must be >= 1");
  try {
    s.params.validate();
  } catch (const InvalidParams& ex) {
    throw ConfigError(std::string("algorithm section: ") + ex.what());
  }
  return s;
}

inline Scenario parse_scenario(const std::string& text) {
  return scenario_from_entries(parse_config_text(text));
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::stod(buf) == v) return buf;
  }
  return buf;
}

inline std::string render_config(const Scenario& s) {
  std::ostringstream out;
  out << "[scenario]\n";
  out << "name = " << s.name << "\n";
  out << "horizon = " << s.horizon << "\n";
  out << "trials = " << s.trials << "\n";
  out << "master_seed = " << s.master_seed << "\n";
  switch (s.gamma_mode) {
    case GammaMode::automatic:
      out << "gamma = auto\n";
      break;
    case GammaMode::none:
      out << "gamma = none\n";
      break;
    case GammaMode::fixed:
      out << "gamma = " << format_double(s.gamma_value) << "\n";
      break;
  }
  out << "gamma_samples = " << s.gamma_samples << "\n";
  out << "gamma_radius = " << format_double(s.gamma_radius) << "\n";
  out << "\n[topology]\n";
  out << "n = " << s.topology.n << "\n";
  if (!s.topology.edge_list.empty()) {
    out << "edge_list = ";
    for (std::size_t i = 0; i < s.topology.edge_list.size(); ++i) {
      if (i) out << ", ";
      out << s.topology.edge_list[i].first << "-"
          << s.topology.edge_list[i].second;
    }
    out << "\n";
  } else {
    out << "edges = " << s.topology.edges << "\n";
  }
  out << "seed = " << s.topology.seed << "\n";
  out << "\n[cost]\n";
  out << "type = " << (s.cost.logistic ? "logistic" : "linear") << "\n";
  if (!s.cost.csv_path.empty()) out << "csv = " << s.cost.csv_path << "\n";
  out << "dimension = " << s.cost.dimension << "\n";
  out << "samples_per_agent = " << s.cost.samples_per_agent << "\n";
  out << "reg_weight = " << format_double(s.cost.reg_weight) << "\n";
  out << "feature_scale = " << format_double(s.cost.feature_scale) << "\n";
  out << "label_noise = " << format_double(s.cost.label_noise) << "\n";
  out << "seed = " << s.cost.seed << "\n";
  out << "switches = " << s.cost.switches << "\n";
  out << "drift_target = " << format_double(s.cost.drift_target) << "\n";
  out << "\n[algorithm]\n";
  out << "alpha = " << format_double(s.params.alpha) << "\n";
  out << "rho = " << format_double(s.params.rho) << "\n";
  out << "theta = " << format_double(s.params.prox.threshold) << "\n";
  out << "max_inner_iterations = " << s.params.prox.max_inner_iterations
      << "\n";
  out << "\n[channel]\n";
  out << "p_fast = " << format_double(s.channel.p_fast) << "\n";
  out << "p_slow = " << format_double(s.channel.p_slow) << "\n";
  out << "slow_nodes = " << s.channel.slow_nodes << "\n";
  out << "noise_v = " << format_double(s.channel.noise_v) << "\n";
  out << "noise_u = " << format_double(s.channel.noise_u) << "\n";
  out << "quantizer_delta = " << format_double(s.channel.quantizer_delta)
      << "\n";
  out << "quantizer_max = " << format_double(s.channel.quantizer_max) << "\n";
  out << "lossy_self_loops = "
      << (s.channel.lossy_self_loops ? "true" : "false") << "\n";
  return out.str();
}

}  // namespace dotadmm
