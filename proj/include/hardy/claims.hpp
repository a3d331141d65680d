// Verdicts on ensemble and scan results, shared by the CLI and the
// acceptance suite.
#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <optional>
#include <string>
#include <vector>

#include "hardy/trajectories.hpp"

namespace hardy {

struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;
};

inline bool all_pass(const std::vector<Verdict>& v) {
  for (const auto& x : v) {
    if (!x.pass) return false;
  }
  return true;
}

/// |p1 - p2| in units of the standard error of the difference. When both
/// sample variances vanish, the pooled proportion is used instead.
inline double two_sample_z(std::size_t k1, std::size_t n1, std::size_t k2, std::size_t n2) {
  if (n1 == 0 || n2 == 0) return 0.0;
  const double a = static_cast<double>(n1), b = static_cast<double>(n2);
  const double p1 = static_cast<double>(k1) / a, p2 = static_cast<double>(k2) / b;
  double var = p1 * (1.0 - p1) / a + p2 * (1.0 - p2) / b;
  if (var <= 0.0) {
    const double p = static_cast<double>(k1 + k2) / (a + b);
    var = p * (1.0 - p) * (1.0 / a + 1.0 / b);
  }
  if (var <= 0.0) return p1 == p2 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(p1 - p2) / std::sqrt(var);
}

inline std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

/// Output fractions against the Born table, annihilated fraction against
/// 1 - survival, abort budget, forbidden (a2, b2) arm class.
inline std::vector<Verdict> ensemble_verdicts(const EnsembleStats& s, Interaction mode,
                                              double z_max = 3.0) {
  std::vector<Verdict> out;
  out.push_back({"born_fractions", s.n_counted == 0 || s.max_born_z <= z_max,
                 "max z = " + fmt(s.max_born_z) + " over " + std::to_string(s.n_counted) +
                     " classified trajectories"});
  if (mode == Interaction::annihilate && s.n_sampled > 0) {
    const double n = static_cast<double>(s.n_sampled);
    const double p = s.expected_annihilated;
    const double sigma = std::sqrt(p * (1.0 - p) / n);
    const double z = sigma > 0.0 ? std::abs(s.fraction_annihilated() - p) / sigma : 0.0;
    out.push_back({"annihilated_fraction", z <= z_max,
                   fmt(s.fraction_annihilated()) + " vs " + fmt(p) + " (z = " + fmt(z, 3) + ")"});
    out.push_back({"forbidden_a2b2", s.n_forbidden == 0,
                   std::to_string(s.n_forbidden) + " completed trajectories through (a2,b2)"});
  }
  out.push_back({"node_aborts", s.abort_fraction() < 0.01,
                 std::to_string(s.n_aborted) + " of " + std::to_string(s.n_sampled)});
  return out;
}

/// Conditional topology: every trajectory leaving through `output_side`'s
/// channel 2 came through the expected arm pair.
struct TopologyCount {
  std::size_t qualifying = 0;
  std::size_t matching = 0;
};

inline TopologyCount topology_count(const EnsembleStats& s, Side output_side, ModePair expected) {
  TopologyCount c;
  for (const auto& [out, arms] : s.arm_given_output) {
    const Stage st = output_side == Side::A ? out.a : out.b;
    if (st != Stage::out2) continue;
    for (const auto& [arm, n] : arms) {
      c.qualifying += n;
      if (arm == expected) c.matching += n;
    }
  }
  return c;
}

/// A2 exits come through (a1, b2) when B is extended; B2 exits through
/// (a2, b1) when A is extended.
inline Verdict topology_verdict(const EnsembleStats& s, double delta_L, std::size_t min_count) {
  const bool b_longer = delta_L > 0.0;
  const Side side = b_longer ? Side::A : Side::B;
  const ModePair expected = b_longer ? ModePair{Stage::arm1, Stage::arm2}
                                     : ModePair{Stage::arm2, Stage::arm1};
  const auto c = topology_count(s, side, expected);
  const std::string exit_name = b_longer ? "A2" : "B2";
  return {"topology_" + exit_name,
          c.qualifying >= min_count && c.matching == c.qualifying,
          std::to_string(c.matching) + " of " + std::to_string(c.qualifying) + " " + exit_name +
              " exits through " + expected.key() + " (need >= " + std::to_string(min_count) + ")"};
}

/// Largest pairwise z over output channels between any two scan points.
inline double max_pairwise_output_z(const ScanResult& scan) {
  double worst = 0.0;
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    for (std::size_t j = i + 1; j < scan.points.size(); ++j) {
      const auto& a = scan.points[i].stats;
      const auto& b = scan.points[j].stats;
      for (const auto& ch : output_channels()) {
        worst = std::max(worst, two_sample_z(a.count_output(ch), a.n_counted, b.count_output(ch),
                                             b.n_counted));
      }
    }
  }
  return worst;
}

/// Points whose sign (of delta_L, or of v for frames) fixes the topology:
/// positive -> fraction 1, negative -> fraction 0.
inline Verdict flip_verdict(const ScanResult& scan, bool by_velocity, double min_abs) {
  bool ok = !scan.points.empty();
  std::string detail;
  for (const auto& p : scan.points) {
    const double x = by_velocity ? p.v : p.delta_L;
    if (std::abs(x) < min_abs) continue;
    const double want = x > 0.0 ? 1.0 : 0.0;
    const bool hit = p.fraction_a1b2 && *p.fraction_a1b2 == want;
    ok = ok && hit;
    detail += (detail.empty() ? "" : "; ") + std::string(by_velocity ? "v=" : "dL=") +
              fmt(by_velocity ? x : x / p.ell) + ": " +
              (p.fraction_a1b2 ? fmt(*p.fraction_a1b2) : std::string("n/a")) + " of " +
              std::to_string(p.n_a2b2);
  }
  return {by_velocity ? "frame_flip" : "endpoint_topology", ok, detail};
}

}  // namespace hardy
