// Scenario configuration: sectioned key = value files, CLI overrides and a
// stable hash echoed into every output.
#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hardy/errors.hpp"
#include "hardy/geometry.hpp"
#include "hardy/mode_algebra.hpp"
#include "hardy/trajectories.hpp"

namespace hardy {

enum class Scenario : std::uint8_t { fig1, fig2, fig3, scan, frames, modes_only };

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::fig1: return "fig1";
    case Scenario::fig2: return "fig2";
    case Scenario::fig3: return "fig3";
    case Scenario::scan: return "scan";
    case Scenario::frames: return "frames";
    case Scenario::modes_only: return "modes-only";
  }
  return "?";
}

inline Scenario parse_scenario(const std::string& s) {
  for (Scenario c : {Scenario::fig1, Scenario::fig2, Scenario::fig3, Scenario::scan,
                     Scenario::frames, Scenario::modes_only}) {
    if (s == to_string(c)) return c;
  }
  throw ConfigError("unknown scenario '" + s + "'");
}

inline const char* to_string(Interaction m) {
  switch (m) {
    case Interaction::none: return "none";
    case Interaction::annihilate: return "annihilate";
    case Interaction::dephase: return "dephase";
  }
  return "?";
}

inline Interaction parse_interaction(const std::string& s) {
  if (s == "none") return Interaction::none;
  if (s == "annihilate") return Interaction::annihilate;
  if (s == "dephase") return Interaction::dephase;
  throw ConfigError("unknown mode '" + s + "'");
}

/// Lengths in units of the packet length l, except packet_length itself.
struct GeometryConfig {
  double packet_length = 1500.0;
  double wavenumber = 0.8;
  double arm_length_A = 20.0;
  double arm_length_B = 20.0;
  double arm_separation = 60.0;
  double gap = 4.0;
  double lead = 10.0;
  double probe_distance = 10.0;
  double scatter_window = 8.0;
  double max_flight = 0.1;
  double min_branch_separation = 8.0;

  double delta_L() const { return arm_length_B - arm_length_A; }

  LayoutParams params() const {
    auto p = LayoutParams::in_packet_lengths(packet_length, wavenumber,
                                             std::min(arm_length_A, arm_length_B), arm_separation,
                                             gap, lead, probe_distance, delta_L(), scatter_window);
    p.max_flight = max_flight;
    p.min_branch_separation = min_branch_separation;
    return p;
  }
};

struct ScenarioConfig {
  Scenario scenario = Scenario::fig1;
  GeometryConfig geometry;
  std::size_t n = 10000;
  std::uint64_t seed = 20240601;
  Interaction mode = Interaction::annihilate;
  double phi = 0.0;
  unsigned jobs = 1;
  std::string out = "out";
  bool svg = true;
  std::size_t svg_trajectories = 60;  ///< trajectories drawn and written to CSV
  double record_interval = 0.25;      ///< units of l / k
  double tolerance = IntegratorControls{}.tolerance;
  double step_cap = IntegratorControls{}.step_cap;
  // scan
  double scan_from = -10.0;
  double scan_to = 10.0;
  std::size_t scan_points = 11;
  // frames
  std::vector<double> velocities{-0.1, -0.05, 0.05, 0.1};

  LayoutParams layout_params() const { return geometry.params(); }

  IntegratorControls controls() const {
    IntegratorControls c;
    c.tolerance = tolerance;
    c.step_cap = step_cap;
    return c;
  }

  EnsembleOptions ensemble_options() const {
    EnsembleOptions o;
    o.n = n;
    o.seed = seed;
    o.mode = mode;
    o.phi = phi;
    o.controls = controls();
    o.jobs = jobs;
    return o;
  }

  std::vector<double> scan_deltas() const {
    std::vector<double> d;
    const double ell = geometry.packet_length;
    if (scan_points == 1) return {scan_from * ell};
    for (std::size_t i = 0; i < scan_points; ++i) {
      const double f = static_cast<double>(i) / static_cast<double>(scan_points - 1);
      d.push_back((scan_from + f * (scan_to - scan_from)) * ell);
    }
    return d;
  }

  /// Everything that affects results. Output directory, jobs and the SVG
  /// switch are left out: they change neither numbers nor files' contents.
  nlohmann::json to_json() const {
    const auto& g = geometry;
    nlohmann::json j{
        {"scenario", to_string(scenario)},
        {"n", n},
        {"seed", seed},
        {"mode", to_string(mode)},
        {"phi", phi},
        {"geometry",
         {{"packet_length", g.packet_length},
          {"wavenumber", g.wavenumber},
          {"arm_length_A", g.arm_length_A},
          {"arm_length_B", g.arm_length_B},
          {"arm_separation", g.arm_separation},
          {"gap", g.gap},
          {"lead", g.lead},
          {"probe_distance", g.probe_distance},
          {"scatter_window", g.scatter_window},
          {"max_flight", g.max_flight},
          {"min_branch_separation", g.min_branch_separation}}},
        {"integrator", {{"tolerance", tolerance}, {"step_cap", step_cap}}},
        {"output", {{"svg_trajectories", svg_trajectories}, {"record_interval", record_interval}}}};
    if (scenario == Scenario::scan) {
      j["scan"] = {{"from", scan_from}, {"to", scan_to}, {"points", scan_points}};
    }
    if (scenario == Scenario::frames) j["frames"] = {{"velocities", velocities}};
    return j;
  }
};

/// FNV-1a over the canonical JSON dump, as 16 hex digits.
inline std::string config_hash(const ScenarioConfig& c) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : c.to_json().dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

/// Scenario presets applied before the config file and flags.
inline void apply_scenario_defaults(ScenarioConfig& c) {
  switch (c.scenario) {
    case Scenario::fig2:
      c.geometry.arm_length_B = c.geometry.arm_length_A + 10.0;
      c.n = 1000;
      break;
    case Scenario::fig3:
      c.geometry.arm_length_A = c.geometry.arm_length_B + 10.0;
      c.n = 1000;
      break;
    case Scenario::scan:
      c.n = 5000;
      break;
    case Scenario::frames:
      c.n = 2000;
      break;
    default:
      break;
  }
}

// ---------------------------------------------------------------------------
// key = value files

using ConfigEntries = std::map<std::string, std::string>;  ///< "section.key" -> value

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline ConfigEntries parse_config_text(const std::string& text) {
  ConfigEntries out;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (!out.emplace(full, value).second) throw ConfigError("duplicate key '" + full + "'");
  }
  return out;
}

inline ConfigEntries read_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "': not a number: '" + v + "'");
  }
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v.front() == '-') throw std::invalid_argument(v);
    const auto u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "': not a non-negative integer: '" + v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError("'" + key + "': not a boolean: '" + v + "'");
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) throw ConfigError("'" + key + "': empty list");
  return out;
}

}  // namespace detail

/// Scenario named in the entries, if any.
inline std::optional<Scenario> scenario_of(const ConfigEntries& e) {
  const auto it = e.find("run.scenario");
  if (it == e.end()) return std::nullopt;
  return parse_scenario(it->second);
}

/// Applies entries on top of `c`; unknown keys are errors.
inline void apply_entries(ScenarioConfig& c, const ConfigEntries& entries) {
  using namespace detail;
  auto& g = c.geometry;
  for (const auto& [key, v] : entries) {
    if (key == "run.scenario") c.scenario = parse_scenario(v);
    else if (key == "run.n") c.n = to_uint(key, v);
    else if (key == "run.seed") c.seed = to_uint(key, v);
    else if (key == "run.mode") c.mode = parse_interaction(v);
    else if (key == "run.phi") c.phi = to_double(key, v);
    else if (key == "run.jobs") c.jobs = static_cast<unsigned>(to_uint(key, v));
    else if (key == "run.out") c.out = v;
    else if (key == "output.svg") c.svg = to_bool(key, v);
    else if (key == "output.svg_trajectories") c.svg_trajectories = to_uint(key, v);
    else if (key == "output.record_interval") c.record_interval = to_double(key, v);
    else if (key == "layout.packet_length") g.packet_length = to_double(key, v);
    else if (key == "layout.wavenumber") g.wavenumber = to_double(key, v);
    else if (key == "layout.arm_separation") g.arm_separation = to_double(key, v);
    else if (key == "layout.gap") g.gap = to_double(key, v);
    else if (key == "layout.lead") g.lead = to_double(key, v);
    else if (key == "layout.probe_distance") g.probe_distance = to_double(key, v);
    else if (key == "layout.scatter_window") g.scatter_window = to_double(key, v);
    else if (key == "layout.max_flight") g.max_flight = to_double(key, v);
    else if (key == "layout.min_branch_separation") g.min_branch_separation = to_double(key, v);
    else if (key == "A.arm_length") g.arm_length_A = to_double(key, v);
    else if (key == "B.arm_length") g.arm_length_B = to_double(key, v);
    else if (key == "integrator.tolerance") c.tolerance = to_double(key, v);
    else if (key == "integrator.step_cap") c.step_cap = to_double(key, v);
    else if (key == "scan.from") c.scan_from = to_double(key, v);
    else if (key == "scan.to") c.scan_to = to_double(key, v);
    else if (key == "scan.points") c.scan_points = to_uint(key, v);
    else if (key == "frames.velocities") c.velocities = to_list(key, v);
    else throw ConfigError("unknown key '" + key + "'");
  }
}

/// Checks that do not need a built layout; build_layout does the rest.
inline void validate(const ScenarioConfig& c) {
  if (!(c.tolerance > 0.0)) throw ConfigError("integrator.tolerance must be positive");
  if (!(c.step_cap > 0.0)) throw ConfigError("integrator.step_cap must be positive");
  if (c.jobs == 0) throw ConfigError("run.jobs must be at least 1");
  if (!(c.record_interval > 0.0)) throw ConfigError("output.record_interval must be positive");
  if (c.scenario == Scenario::scan && c.scan_points == 0) {
    throw ConfigError("scan.points must be at least 1");
  }
  for (double v : c.velocities) {
    if (!(std::abs(v) < 1.0)) throw ConfigError("frame velocities must satisfy |v| < 1");
  }
  (void)build_layout(c.layout_params());
}

}  // namespace hardy
