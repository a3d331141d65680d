// hardy: scenario runner for the two-interferometer experiment.
//
// Exit codes: 0 all claims hold, 2 ket fixture mismatch, 3 statistical claim
// failed, 4 configuration error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hardy/claims.hpp"
#include "hardy/config.hpp"
#include "hardy/fixtures.hpp"
#include "hardy/svg.hpp"

namespace fs = std::filesystem;
using namespace hardy;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFixture = 2;
constexpr int kExitStatistical = 3;
constexpr int kExitConfig = 4;

struct Flags {
  std::optional<std::string> scenario, config, mode, out;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
  std::optional<double> phi, delta_l;
  std::vector<double> v;
  std::optional<unsigned> jobs;
  std::optional<bool> svg;
};

ScenarioConfig resolve(const Flags& f) {
  ConfigEntries entries;
  if (f.config) entries = read_config_file(*f.config);
  ScenarioConfig c;
  if (f.scenario) {
    c.scenario = parse_scenario(*f.scenario);
  } else if (auto s = scenario_of(entries)) {
    c.scenario = *s;
  }
  apply_scenario_defaults(c);
  entries.erase("run.scenario");
  apply_entries(c, entries);
  if (f.n) c.n = *f.n;
  if (f.seed) c.seed = *f.seed;
  if (f.mode) c.mode = parse_interaction(*f.mode);
  if (f.phi) c.phi = *f.phi;
  if (f.jobs) c.jobs = *f.jobs;
  if (f.out) c.out = *f.out;
  if (f.svg) c.svg = *f.svg;
  if (f.delta_l) {
    const double base = std::min(c.geometry.arm_length_A, c.geometry.arm_length_B);
    c.geometry.arm_length_A = base + std::max(0.0, -*f.delta_l);
    c.geometry.arm_length_B = base + std::max(0.0, *f.delta_l);
  }
  if (!f.v.empty()) c.velocities = f.v;
  validate(c);
  return c;
}

json header(const ScenarioConfig& c) {
  return {{"config_hash", config_hash(c)}, {"seed", c.seed}, {"config", c.to_json()}};
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  f << text;
}

std::string svg_stamp(const ScenarioConfig& c) {
  return "<!-- config_hash " + config_hash(c) + " seed " + std::to_string(c.seed) + " -->\n";
}

/// Inserts the provenance comment after the XML declaration.
std::string stamped(const std::string& svg, const ScenarioConfig& c) {
  const auto nl = svg.find('\n');
  return svg.substr(0, nl + 1) + svg_stamp(c) + svg.substr(nl + 1);
}

void print_verdicts(const std::vector<Verdict>& vs) {
  for (const auto& v : vs) {
    std::cout << (v.pass ? "  ok    " : "  FAIL  ") << v.name << ": " << v.detail << "\n";
  }
}

int cmd_modes(const ScenarioConfig& c, const fs::path& out) {
  json j = header(c);
  const auto schedule = standard_schedule(c.mode, c.phi);
  const auto kets = evolve(schedule, TwoParticleKet::basis(Stage::input, Stage::input));
  json steps = json::array();
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    steps.push_back({{"event", schedule[i].name()}, {"ket", to_json(kets[i])}});
  }
  j["mode"] = to_string(c.mode);
  j["steps"] = steps;
  const auto born = born_probabilities(kets.back(), 1e-12);
  j["born"] = to_json(born);
  if (c.mode == Interaction::annihilate) j["survival"] = annihilate(kets[1]).survival;

  bool ok = true;
  json fx = json::array();
  std::cout << "ket fixtures\n";
  for (const auto& r : check_fixtures()) {
    ok = ok && r.pass;
    fx.push_back({{"name", r.name}, {"pass", r.pass}, {"expected", to_json(r.expected)},
                  {"got", to_json(r.got)}, {"error", r.error}});
    std::cout << (r.pass ? "  ok    " : "  FAIL  ") << r.name << "\n";
    if (!r.pass) {
      std::cout << "    expected " << to_json(r.expected).dump() << "\n    got      "
                << (r.error.empty() ? to_json(r.got).dump() : r.error) << "\n";
    }
  }
  // Born tables that follow from the mode alone
  std::map<ModePair, double> want;
  if (c.mode == Interaction::annihilate) {
    want = expected_born_table();
  } else if (c.mode == Interaction::none) {
    want = {{{Stage::out1, Stage::out1}, 1.0}};
  } else {
    const auto ref = born_probabilities(
        evolve(standard_schedule(Interaction::dephase, c.phi),
               TwoParticleKet::basis(Stage::input, Stage::input)).back(), 1e-12);
    want = ref;
  }
  bool born_ok = true;
  for (const auto& ch : output_channels()) {
    const double got = born.count(ch) ? born.at(ch) : 0.0;
    const double exp = want.count(ch) ? want.at(ch) : 0.0;
    born_ok = born_ok && std::abs(got - exp) <= 1e-12;
  }
  std::cout << (born_ok ? "  ok    " : "  FAIL  ") << "born table (" << to_string(c.mode) << ")\n";
  ok = ok && born_ok;
  j["fixtures"] = fx;
  j["born_table_pass"] = born_ok;
  j["pass"] = ok;
  write_file(out / "modes.json", j.dump(2) + "\n");
  return ok ? kExitOk : kExitFixture;
}

int cmd_simulate(const ScenarioConfig& c, const fs::path& out) {
  const Layout lay = build_layout(c.layout_params());
  auto opt = c.ensemble_options();
  opt.keep = std::min(c.svg_trajectories, c.n);
  opt.controls.record_interval = c.record_interval;
  const auto res = run_ensemble(lay, opt);
  const auto& s = res.stats;

  std::vector<Verdict> verdicts;
  if (c.n > 0) {
    verdicts = ensemble_verdicts(s, c.mode);
    // the conditional topology is claimed once the arms differ by several packet lengths
    if (c.mode == Interaction::annihilate && std::abs(lay.params().delta_L) >= 5.0 * lay.ell()) {
      verdicts.push_back(topology_verdict(s, lay.params().delta_L, 50));
    }
  }

  json j = header(c);
  j["layout"] = lay.params().to_json();
  j["stats"] = to_json(s);
  json jv = json::array();
  for (const auto& v : verdicts) jv.push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
  j["verdicts"] = jv;
  j["pass"] = all_pass(verdicts);
  write_file(out / "stats.json", j.dump(2) + "\n");

  std::ostringstream csv;
  csv.precision(17);
  csv << "# config_hash " << config_hash(c) << " seed " << c.seed << "\n";
  write_trajectory_header(csv);
  for (std::size_t i = 0; i < res.kept.size(); ++i) write_trajectory(csv, i, res.kept[i]);
  write_file(out / "trajectories.csv", csv.str());

  if (c.svg) {
    const std::string title = std::string(to_string(c.scenario)) + ": " +
                              std::to_string(res.kept.size()) + " of " + std::to_string(c.n) +
                              " trajectories, dL = " + svg::num(lay.params().delta_L / lay.ell()) +
                              " l, seed " + std::to_string(c.seed);
    write_file(out / "trajectories.svg", stamped(svg::trajectory_figure(lay, res.kept, title), c));
  }

  std::cout << to_string(c.scenario) << ": " << s.n_completed << " completed, " << s.n_annihilated
            << " annihilated, " << s.n_aborted << " aborted\n";
  for (const auto& ch : output_channels()) {
    std::cout << "  " << ch.key() << "  " << svg::num(100.0 * s.output_fractions.at(ch))
              << "%  (born " << svg::num(100.0 * (s.born.count(ch) ? s.born.at(ch) : 0.0)) << "%)\n";
  }
  print_verdicts(verdicts);
  return all_pass(verdicts) ? kExitOk : kExitStatistical;
}

json scan_json(const ScenarioConfig& c, const ScanResult& scan, double ell) {
  json j = header(c);
  json pts = json::array();
  for (const auto& p : scan.points) pts.push_back(to_json(p, ell));
  j["points"] = pts;
  return j;
}

int finish_scan(const ScenarioConfig& c, const fs::path& out, const ScanResult& scan, double ell,
                bool frames, std::vector<Verdict> verdicts, json j) {
  json jv = json::array();
  for (const auto& v : verdicts) jv.push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
  j["verdicts"] = jv;
  j["pass"] = all_pass(verdicts);
  const std::string stem = frames ? "frames" : "scan";
  write_file(out / (stem + ".json"), j.dump(2) + "\n");
  if (c.svg) {
    const std::string title = frames ? "topology of A2,B2 trajectories across frames"
                                     : "topology of A2,B2 trajectories against delta L";
    write_file(out / (stem + ".svg"), stamped(svg::switch_curve(scan, ell, frames, title), c));
  }
  for (const auto& p : scan.points) {
    std::cout << (frames ? "  v = " + svg::num(p.v) : "  dL = " + svg::num(p.delta_L / ell) + " l")
              << "  A2B2 " << p.n_a2b2 << "  through a1,b2 "
              << (p.fraction_a1b2 ? svg::num(*p.fraction_a1b2) : std::string("n/a")) << "\n";
  }
  print_verdicts(verdicts);
  return all_pass(verdicts) ? kExitOk : kExitStatistical;
}

std::vector<Verdict> point_verdicts(const ScanResult& scan, Interaction mode) {
  std::vector<Verdict> out;
  for (const auto& p : scan.points) {
    for (auto v : ensemble_verdicts(p.stats, mode)) {
      if (v.pass) continue;
      v.name += " @ dL=" + fmt(p.delta_L / p.ell) + (std::isnan(p.v) ? "" : " v=" + fmt(p.v));
      out.push_back(v);
    }
  }
  if (out.empty()) out.push_back({"per_point_statistics", true, "every point within bounds"});
  return out;
}

int cmd_scan(const ScenarioConfig& c, const fs::path& out) {
  const auto base = c.layout_params();
  auto opt = c.ensemble_options();
  const auto scan = scan_delta(base, c.scan_deltas(), opt);
  const double ell = base.packet_length;
  auto verdicts = point_verdicts(scan, c.mode);
  json j = scan_json(c, scan, ell);
  const auto width = transition_width(scan);
  j["transition_width"] = width ? json(*width) : json(nullptr);
  j["transition_width_over_ell"] = width ? json(*width / ell) : json(nullptr);
  if (c.mode == Interaction::annihilate) verdicts.push_back(flip_verdict(scan, false, 5.0 * ell));
  std::cout << "transition width: " << (width ? svg::num(*width / ell) + " l" : "n/a") << "\n";
  return finish_scan(c, out, scan, ell, false, verdicts, j);
}

int cmd_frames(const ScenarioConfig& c, const fs::path& out) {
  const Layout base = build_layout(c.layout_params());
  if (base.params().delta_L != 0.0) throw ConfigError("frames needs equal arm lengths");
  auto opt = c.ensemble_options();
  const auto scan = scan_frames(base, c.velocities, opt);
  auto verdicts = point_verdicts(scan, c.mode);
  const double z = max_pairwise_output_z(scan);
  verdicts.push_back({"output_fractions_invariant", z <= 3.0, "max pairwise z = " + fmt(z, 3)});
  if (c.mode == Interaction::annihilate) verdicts.push_back(flip_verdict(scan, true, 0.0));
  json j = scan_json(c, scan, base.ell());
  j["max_pairwise_output_z"] = z;
  json eff = json::array();
  for (double v : c.velocities) {
    const auto cr = crossing_order(base, v);
    eff.push_back({{"v", v}, {"order", to_string(cr.order)}, {"delay", cr.delay},
                   {"effective_delta_L_over_ell", base.speed() * cr.delay / base.ell()}});
  }
  j["frames"] = eff;
  return finish_scan(c, out, scan, base.ell(), true, verdicts, j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bohmian trajectories in the two-interferometer (Hardy) experiment"};
  Flags f;
  app.add_option("--scenario", f.scenario, "fig1 | fig2 | fig3 | scan | frames | modes-only");
  app.add_option("--config", f.config, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--n", f.n, "trajectory count (per point for scans)");
  app.add_option("--seed", f.seed, "random seed");
  app.add_option("--mode", f.mode, "annihilate | dephase | none");
  app.add_option("--phi", f.phi, "dephasing angle in radians");
  app.add_option("--delta-l", f.delta_l, "arm extension L_B - L_A in packet lengths");
  app.add_option("--v", f.v, "frame velocities (frames scenario), units of c")->delimiter(',');
  app.add_option("--jobs", f.jobs, "worker threads");
  app.add_option("--out", f.out, "output directory");
  app.add_flag("--svg,!--no-svg", f.svg, "write SVG figures");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  ScenarioConfig cfg;
  try {
    cfg = resolve(f);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    const fs::path out(cfg.out);
    fs::create_directories(out);
    std::cout << "config " << config_hash(cfg) << "  seed " << cfg.seed << "\n";
    switch (cfg.scenario) {
      case Scenario::modes_only:
        return cmd_modes(cfg, out);
      case Scenario::fig1:
      case Scenario::fig2:
      case Scenario::fig3:
        return cmd_simulate(cfg, out);
      case Scenario::scan:
        return cmd_scan(cfg, out);
      case Scenario::frames:
        return cmd_frames(cfg, out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
