#pragma once

// Flux lines of the configuration-space current ("bi-trajectories"):
// sampling of starting points from |psi|^2, adaptive Dormand-Prince
// integration of dq/dt = J/rho, arm and output classification, ensembles
// and parameter scans.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hardy/errors.hpp"
#include "hardy/field.hpp"
#include "hardy/geometry.hpp"
#include "hardy/mode_algebra.hpp"

namespace hardy {

struct IntegratorControls {
  /// Largest time step, in units of l / k (flight distance l/20 by default).
  double step_cap = 1.0 / 20.0;
  /// Local position error accepted per step, in units of l.
  double tolerance = 1e-7;
  /// Near a node the flow circles at speed ~ 1/r (hbar = m = 1); the local
  /// error is also held below this fraction of r = 1/|v|.
  double node_tolerance = 1e-4;
  /// Smallest step before the trajectory is declared stuck at a node, in units of l / k.
  double min_step = 1e-10;
  /// Steps that cross an element line are shortened to end within this
  /// time (units of l / k) past the crossing.
  double crossing_step = 1e-7;
  /// Accepted-step budget; a trajectory still running after it is treated
  /// as caught at a node.
  std::size_t max_steps = 400000;
  /// Spacing of recorded samples, in units of l / k. Zero records only the
  /// start, the breakpoints and the end.
  double record_interval = 0.0;
  /// Keep the per-step sample list at all.
  bool record = false;
  /// Required gap between nearest and second-nearest packet center, in units of l.
  double classification_margin = 4.0;

  /// Same controls with the step cap and tolerance halved.
  IntegratorControls refined() const {
    IntegratorControls c = *this;
    c.step_cap *= 0.5;
    c.tolerance *= 0.5;
    c.node_tolerance *= 0.5;
    c.max_steps *= 2;
    return c;
  }
};

enum class TrajectoryStatus : std::uint8_t { completed, annihilated, node_abort };

inline const char* to_string(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::completed:
      return "completed";
    case TrajectoryStatus::annihilated:
      return "annihilated";
    default:
      return "node_abort";
  }
}

struct TrajectorySample {
  double t = 0.0;
  Vec4 q{};
  double max_speed = 0.0;  ///< largest |dq/dt| seen since the previous sample
  std::size_t steps = 0;   ///< accepted steps so far
};

/// Nearest-center assignment of both particles.
struct Classification {
  ModePair modes;
  double margin_a = 0.0;
  double margin_b = 0.0;
  bool ambiguous = false;
};

struct BiTrajectory {
  std::vector<TrajectorySample> samples;
  TrajectoryStatus status = TrajectoryStatus::completed;
  Vec4 start{};
  Vec4 last{};
  double t_last = 0.0;
  std::optional<Vec4> at_arm_probe;
  std::optional<Vec4> at_final_probe;
  std::optional<Classification> arm_class;
  std::optional<Classification> output_class;
  std::size_t steps = 0;
  std::size_t evaluations = 0;
};

/// Nearest packet center among the two modes of the given section, for both
/// particles, at time t.
inline Classification classify_point(const Layout& lay, const Vec4& q, double t, Section sec,
                                      double margin_ell) {
  const Stage s1 = sec == Section::arms ? Stage::arm1 : Stage::out1;
  const Stage s2 = sec == Section::arms ? Stage::arm2 : Stage::out2;
  Classification c;
  auto one = [&](Side side, Vec2 r, double& margin) {
    const double d1 = (r - lay.center({side, s1}, t)).norm();
    const double d2 = (r - lay.center({side, s2}, t)).norm();
    margin = std::abs(d1 - d2);
    return d1 <= d2 ? s1 : s2;
  };
  c.modes.a = one(Side::A, particle_a(q), c.margin_a);
  c.modes.b = one(Side::B, particle_b(q), c.margin_b);
  const double need = margin_ell * lay.ell();
  c.ambiguous = c.margin_a < need || c.margin_b < need;
  return c;
}

/// Arm membership at the mid-arm probe time.
inline std::optional<Classification> classify_arms(const BiTrajectory& traj, const Layout& lay,
                                                   double margin_ell = 4.0) {
  if (!traj.at_arm_probe) return std::nullopt;
  return classify_point(lay, *traj.at_arm_probe, lay.t_arm_probe(), Section::arms, margin_ell);
}

/// Output channel at the final probe time.
inline std::optional<Classification> classify_outputs(const BiTrajectory& traj,
                                                      const Layout& lay,
                                                      double margin_ell = 4.0) {
  if (!traj.at_final_probe) return std::nullopt;
  return classify_point(lay, *traj.at_final_probe, lay.t_final(), Section::outputs, margin_ell);
}

// ---------------------------------------------------------------------------
// Sampling

/// Deterministic engine for trajectory `index` of a run seeded with `seed`.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

/// Draw from |psi(t0)|^2 for the initial product packet. Uses the substream
/// of the given index so that draws do not depend on how work is split.
inline Vec4 sample_initial_one(const Field& field, double t0, std::uint64_t seed,
                               std::uint64_t index) {
  const auto& state = field.state_at(t0);
  if (t0 >= field.breakpoints().front() || state.terms().size() != 1) {
    throw IntervalError("initial sampling needs a time before the first optical event");
  }
  if (state.crossing()) {
    throw IntervalError("initial sampling needs a packet clear of every element");
  }
  const auto& pa = state.packet(Side::A);
  const auto& pb = state.packet(Side::B);
  // |phi|^2 is Gaussian with per-axis variance |w|^2 / (2 l^2)
  const double ell = field.layout().ell();
  const double sigma = std::abs(pa.width(t0)) / (std::sqrt(2.0) * ell);
  auto rng = substream(seed, index);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vec2 ca = pa.center(t0);
  const Vec2 cb = pb.center(t0);
  Vec4 q{};
  q[0] = ca.x + sigma * normal(rng);
  q[1] = ca.y + sigma * normal(rng);
  q[2] = cb.x + sigma * normal(rng);
  q[3] = cb.y + sigma * normal(rng);
  return q;
}

inline std::vector<Vec4> sample_initial(std::size_t n, const Field& field, double t0,
                                        std::uint64_t seed) {
  std::vector<Vec4> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_initial_one(field, t0, seed, i));
  return out;
}

// ---------------------------------------------------------------------------
// Integration

namespace detail {
inline Vec4 axpy(const Vec4& y, double a, const Vec4& k) {
  return {y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2], y[3] + a * k[3]};
}

inline double speed(const Vec4& v) {
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]);
}

struct DopriStep {
  Vec4 y{};      ///< fifth-order result
  Vec4 f_end{};  ///< velocity at the new point (first stage of the next step)
  double err = 0.0;  ///< embedded error estimate, max over coordinates
  double max_speed = 0.0;
  bool node = false;
};

/// Dormand-Prince 5(4) step from (t, y) with k1 = f(t, y). The last stage is
/// evaluated at the new point and reused as k1 of the next step.
inline DopriStep dopri_step(const WavefunctionState& st, const Vec4& y, const Vec4& k1, double t,
                   double h, std::size_t& evals) {
  static constexpr double c[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
  static constexpr double a[7][6] = {
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
      {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  static constexpr double e[7] = {71.0 / 57600,  0.0,       -71.0 / 16695, 71.0 / 1920,
                                  -17253.0 / 339200, 22.0 / 525, -1.0 / 40};
  DopriStep r;
  Vec4 k[7];
  k[0] = k1;
  r.max_speed = speed(k1);
  for (int s = 1; s < 7; ++s) {
    Vec4 ys = y;
    for (int j = 0; j < s; ++j) {
      for (int i = 0; i < 4; ++i) ys[i] += h * a[s][j] * k[j][i];
    }
    const auto v = st.velocity(ys, t + c[s] * h);
    ++evals;
    if (v.node) return {{}, {}, 0.0, 0.0, true};
    k[s] = v.v;
    r.max_speed = std::max(r.max_speed, speed(v.v));
    if (s == 6) r.y = ys;
  }
  r.f_end = k[6];
  for (int i = 0; i < 4; ++i) {
    double d = 0.0;
    for (int s = 0; s < 7; ++s) d += e[s] * k[s][i];
    r.err = std::max(r.err, std::abs(h * d));
  }
  return r;
}

}  // namespace detail

/// Flux line of J/rho from `start` at time t0 through the field's timeline,
/// stopping exactly at every breakpoint and probe time.
inline BiTrajectory integrate(const Vec4& start, const Field& field,
                              const IntegratorControls& ctl, double t0 = 0.0) {
  const Layout& lay = field.layout();
  const double unit_t = lay.ell() / lay.speed();
  const double h_cap = ctl.step_cap * unit_t;
  const double h_min = ctl.min_step * unit_t;
  const double tol = ctl.tolerance * lay.ell();
  const double t_probe = lay.t_arm_probe();
  const double t_final = lay.t_final();
  const double t_int = lay.t_interaction();
  const bool annihilating = field.mode() == Interaction::annihilate;

  std::vector<double> stops;
  for (double t : field.breakpoints()) {
    if (t > t0 && t < t_final) stops.push_back(t);
  }
  stops.push_back(t_probe);
  stops.push_back(t_final);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  // Recorded samples between stops are interpolated inside accepted steps,
  // so recording never changes the path itself.
  std::vector<double> grid;
  if (ctl.record && ctl.record_interval > 0.0) {
    const double dt = ctl.record_interval * unit_t;
    for (std::size_t i = 1; t0 + static_cast<double>(i) * dt < t_final; ++i) {
      grid.push_back(t0 + static_cast<double>(i) * dt);
    }
  }
  std::size_t next_grid = 0;

  BiTrajectory traj;
  traj.start = start;
  Vec4 y = start;
  double t = t0;
  double h = h_cap;
  double seg_max_speed = 0.0;
  if (ctl.record) traj.samples.push_back({t, y, 0.0, 0});

  auto finish = [&](TrajectoryStatus s) {
    traj.status = s;
    traj.last = y;
    traj.t_last = t;
    if (ctl.record && (traj.samples.empty() || traj.samples.back().t != t)) {
      traj.samples.push_back({t, y, seg_max_speed, traj.steps});
    }
    return traj;
  };

  // Largest displacement of either particle in one step.
  const double max_move = ctl.step_cap * lay.ell();
  const double h_cross = ctl.crossing_step * unit_t;
  double err_prev = 1e-4;
  for (double stop : stops) {
    const WavefunctionState& st = field.state_at(t);
    // The velocity field has a kink on element lines; steps are cut so that
    // they end just past a crossing instead of straddling it.
    struct Line {
      std::size_t particle;
      Vec2 point, normal;
    };
    std::vector<Line> lines;
    for (Side s : {Side::A, Side::B}) {
      for (const auto& [p, n] : st.element_lines(s)) lines.push_back({s == Side::A ? 0u : 2u, p, n});
    }
    auto gap = [](const Line& l, const Vec4& q) {
      return l.normal.dot(Vec2{q[l.particle], q[l.particle + 1]} - l.point);
    };
    auto v1 = st.velocity(y, t);
    ++traj.evaluations;
    if (v1.node) return finish(TrajectoryStatus::node_abort);
    double h_resume = 0.0;  // step size to return to after a crossing
    bool rejected = false;
    while (t < stop) {
      const double remaining = stop - t;
      const bool last = h >= remaining;
      const double step = last ? remaining : h;
      const auto r = detail::dopri_step(st, y, v1.v, t, step, traj.evaluations);
      double move = 0.0;
      if (!r.node) {
        move = std::max(std::hypot(r.y[0] - y[0], r.y[1] - y[1]),
                        std::hypot(r.y[2] - y[2], r.y[3] - y[3]));
      }
      if (r.node || move > max_move) {
        h = r.node ? 0.5 * step : 0.9 * step * max_move / move;
        rejected = true;
        if (h < h_min) return finish(TrajectoryStatus::node_abort);
        continue;
      }
      if (step > h_cross) {
        double first = 1.0;
        for (const auto& l : lines) {
          const double g0 = gap(l, y);
          const double g1 = gap(l, r.y);
          if (g0 * g1 < 0.0) first = std::min(first, g0 / (g0 - g1));
        }
        if (first < 1.0) {
          if (h_resume == 0.0) h_resume = h;
          h = std::max(h_cross, first * step + 0.5 * h_cross);
          if (h >= step) h = 0.5 * step;
          continue;
        }
      }
      const double tol_here = std::min(tol, ctl.node_tolerance / std::max(r.max_speed, 1e-300));
      if (r.err > tol_here && step > h_min) {
        h = std::max(h_min, step * std::max(0.1, 0.9 * std::pow(tol_here / r.err, 0.2)));
        rejected = true;
        continue;
      }
      bool crossed = false;
      for (const auto& l : lines) crossed = crossed || gap(l, y) * gap(l, r.y) < 0.0;
      const double t_new = last ? stop : t + step;
      for (; next_grid < grid.size() && grid[next_grid] < t_new; ++next_grid) {
        if (grid[next_grid] <= t) continue;
        // cubic Hermite on (y, f) at both ends of the step
        const double s = (grid[next_grid] - t) / step;
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
        Vec4 yi;
        for (int i = 0; i < 4; ++i) {
          yi[i] = h00 * y[i] + h10 * step * v1.v[i] + h01 * r.y[i] + h11 * step * r.f_end[i];
        }
        traj.samples.push_back({grid[next_grid], yi, seg_max_speed, traj.steps});
      }
      y = r.y;
      v1.v = r.f_end;
      t = t_new;
      ++traj.steps;
      if (traj.steps > ctl.max_steps) return finish(TrajectoryStatus::node_abort);
      seg_max_speed = std::max(seg_max_speed, r.max_speed);
      // PI step-size control
      const double e = std::max(r.err / tol_here, 1e-4);
      double grow = 0.9 * std::pow(e, -0.17) * std::pow(err_prev, 0.04);
      err_prev = e;
      grow = std::clamp(grow, 0.2, rejected ? 1.0 : 2.0);
      rejected = false;
      double next = std::min(h_cap, step * grow);
      if (crossed && h_resume > 0.0) {
        next = h_resume;
        h_resume = 0.0;
      }
      // a short step that only closed the gap to a stop keeps the previous size
      h = last ? std::max(h, next) : next;
    }
    if (ctl.record) {
      traj.samples.push_back({t, y, seg_max_speed, traj.steps});
      seg_max_speed = 0.0;
    }
    if (t == t_probe) traj.at_arm_probe = y;
    if (annihilating && t == t_int) {
      const auto c = classify_point(lay, y, t, Section::arms, ctl.classification_margin);
      if (c.modes == ModePair{Stage::arm2, Stage::arm2}) {
        traj.arm_class = classify_arms(traj, lay, ctl.classification_margin);
        return finish(TrajectoryStatus::annihilated);
      }
    }
    if (t == t_final) traj.at_final_probe = y;
  }
  traj.arm_class = classify_arms(traj, lay, ctl.classification_margin);
  traj.output_class = classify_outputs(traj, lay, ctl.classification_margin);
  return finish(TrajectoryStatus::completed);
}

// ---------------------------------------------------------------------------
// Ensembles

struct EnsembleOptions {
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  Interaction mode = Interaction::annihilate;
  double phi = 0.0;
  IntegratorControls controls;
  unsigned jobs = 1;
  /// Trajectories (lowest indices) whose samples are kept.
  std::size_t keep = 0;
};

struct EnsembleStats {
  std::size_t n_sampled = 0;
  std::size_t n_annihilated = 0;
  std::size_t n_completed = 0;
  std::size_t n_aborted = 0;
  std::size_t n_arm_ambiguous = 0;
  std::size_t n_output_ambiguous = 0;
  std::size_t n_forbidden = 0;  ///< completed trajectories classified (a2, b2)
  std::size_t n_counted = 0;    ///< completed with an unambiguous output class
  std::map<ModePair, std::size_t> output_counts;
  std::map<ModePair, double> output_fractions;
  std::map<ModePair, std::map<ModePair, std::size_t>> arm_given_output;
  std::map<ModePair, double> born;
  double expected_annihilated = 0.0;
  double max_born_deviation = 0.0;  ///< max |fraction - born| over output channels
  double max_born_z = 0.0;          ///< same, in binomial standard deviations
  std::size_t total_steps = 0;
  std::size_t total_evaluations = 0;

  double fraction_annihilated() const {
    return n_sampled ? static_cast<double>(n_annihilated) / static_cast<double>(n_sampled) : 0.0;
  }
  double abort_fraction() const {
    return n_sampled ? static_cast<double>(n_aborted) / static_cast<double>(n_sampled) : 0.0;
  }

  /// Trajectories with the given output class, split by arm class.
  std::size_t count(ModePair output, ModePair arm) const {
    const auto it = arm_given_output.find(output);
    if (it == arm_given_output.end()) return 0;
    const auto jt = it->second.find(arm);
    return jt == it->second.end() ? 0 : jt->second;
  }
  std::size_t count_output(ModePair output) const {
    const auto it = output_counts.find(output);
    return it == output_counts.end() ? 0 : it->second;
  }
};

struct EnsembleResult {
  EnsembleStats stats;
  std::vector<BiTrajectory> kept;
  std::vector<TrajectoryStatus> status;  ///< per trajectory
  std::vector<std::optional<Classification>> arm_class;
  std::vector<std::optional<Classification>> output_class;
};

inline const std::array<ModePair, 4>& output_channels() {
  static const std::array<ModePair, 4> ch{ModePair{Stage::out1, Stage::out1},
                                          ModePair{Stage::out1, Stage::out2},
                                          ModePair{Stage::out2, Stage::out1},
                                          ModePair{Stage::out2, Stage::out2}};
  return ch;
}

inline EnsembleResult run_ensemble(const Field& field, const EnsembleOptions& opt) {
  const std::size_t n = opt.n;
  EnsembleResult res;
  res.status.resize(n);
  res.arm_class.resize(n);
  res.output_class.resize(n);
  std::vector<BiTrajectory> kept(std::min(opt.keep, n));
  std::vector<std::size_t> steps(n, 0), evals(n, 0);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      IntegratorControls ctl = opt.controls;
      ctl.record = i < kept.size();
      const Vec4 q0 = sample_initial_one(field, 0.0, opt.seed, i);
      BiTrajectory tr = integrate(q0, field, ctl, 0.0);
      res.status[i] = tr.status;
      res.arm_class[i] = tr.arm_class;
      res.output_class[i] = tr.output_class;
      steps[i] = tr.steps;
      evals[i] = tr.evaluations;
      if (i < kept.size()) kept[i] = std::move(tr);
    }
  };
  const unsigned jobs = std::max(1u, opt.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  res.kept = std::move(kept);

  EnsembleStats& s = res.stats;
  s.n_sampled = n;
  for (std::size_t i = 0; i < n; ++i) {
    s.total_steps += steps[i];
    s.total_evaluations += evals[i];
    switch (res.status[i]) {
      case TrajectoryStatus::annihilated:
        ++s.n_annihilated;
        continue;
      case TrajectoryStatus::node_abort:
        ++s.n_aborted;
        continue;
      case TrajectoryStatus::completed:
        ++s.n_completed;
        break;
    }
    const auto& arm = res.arm_class[i];
    const auto& out = res.output_class[i];
    if (arm && arm->ambiguous) ++s.n_arm_ambiguous;
    if (arm && field.mode() == Interaction::annihilate &&
        arm->modes == ModePair{Stage::arm2, Stage::arm2}) {
      ++s.n_forbidden;
    }
    if (!out || out->ambiguous) {
      ++s.n_output_ambiguous;
      continue;
    }
    ++s.n_counted;
    ++s.output_counts[out->modes];
    if (arm && !arm->ambiguous) ++s.arm_given_output[out->modes][arm->modes];
  }

  s.born = born_probabilities(field.final_ket(), 1e-9);
  s.expected_annihilated = field.mode() == Interaction::annihilate ? 1.0 - field.survival() : 0.0;
  for (const auto& ch : output_channels()) {
    const double frac = s.n_counted ? static_cast<double>(s.count_output(ch)) /
                                          static_cast<double>(s.n_counted)
                                    : 0.0;
    s.output_fractions[ch] = frac;
    const double p = s.born.count(ch) ? s.born.at(ch) : 0.0;
    const double dev = std::abs(frac - p);
    s.max_born_deviation = std::max(s.max_born_deviation, dev);
    const double sigma = s.n_counted ? std::sqrt(p * (1.0 - p) / static_cast<double>(s.n_counted))
                                     : 0.0;
    const double z = sigma > 0.0 ? dev / sigma : (dev > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    s.max_born_z = std::max(s.max_born_z, z);
  }
  return res;
}

inline EnsembleResult run_ensemble(const Layout& layout, const EnsembleOptions& opt) {
  return run_ensemble(Field(layout, opt.mode, opt.phi), opt);
}

// ---------------------------------------------------------------------------
// Scans

struct ScanPoint {
  double delta_L = 0.0;  ///< absolute length
  double ell = 1.0;      ///< packet length of the point's layout
  double v = std::numeric_limits<double>::quiet_NaN();  ///< frame velocity (frames scans)
  std::size_t n_a2b2 = 0;  ///< completed trajectories exiting through (A2, B2) with a clean arm class
  std::size_t n_a1b2 = 0;  ///< ... of which came through (a1, b2)
  std::size_t n_a2b1 = 0;  ///< ... of which came through (a2, b1)
  std::optional<double> fraction_a1b2;
  double half_width = 0.0;  ///< 3-sigma Wilson half-width of fraction_a1b2
  EnsembleStats stats;
};

struct ScanResult {
  std::vector<ScanPoint> points;
};

inline double wilson_half_width(std::size_t k, std::size_t n, double z = 3.0) {
  if (n == 0) return 0.0;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double denom = 1.0 + z * z / nn;
  return z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
}

inline ScanPoint make_scan_point(const Layout& lay, const EnsembleStats& stats) {
  ScanPoint pt;
  pt.delta_L = lay.params().delta_L;
  pt.ell = lay.ell();
  pt.stats = stats;
  const ModePair a2b2{Stage::out2, Stage::out2};
  pt.n_a1b2 = stats.count(a2b2, {Stage::arm1, Stage::arm2});
  pt.n_a2b1 = stats.count(a2b2, {Stage::arm2, Stage::arm1});
  const auto it = stats.arm_given_output.find(a2b2);
  if (it != stats.arm_given_output.end()) {
    for (const auto& [arm, cnt] : it->second) pt.n_a2b2 += cnt;
  }
  if (pt.n_a2b2 > 0) {
    pt.fraction_a1b2 = static_cast<double>(pt.n_a1b2) / static_cast<double>(pt.n_a2b2);
    pt.half_width = wilson_half_width(pt.n_a1b2, pt.n_a2b2);
  }
  return pt;
}

/// Topology scan over the arm extension. Every point reuses the same seed,
/// so starting points are shared across the scan.
inline ScanResult scan_delta(const LayoutParams& base, const std::vector<double>& deltas,
                             const EnsembleOptions& opt) {
  ScanResult out;
  for (double dl : deltas) {
    LayoutParams p = base;
    p.delta_L = dl;
    const Layout lay = build_layout(p);
    const auto res = run_ensemble(lay, opt);
    out.points.push_back(make_scan_point(lay, res.stats));
  }
  return out;
}

/// Topology scan over Lorentz frames, each mapped onto its effective layout.
inline ScanResult scan_frames(const Layout& base, const std::vector<double>& velocities,
                              const EnsembleOptions& opt) {
  ScanResult out;
  for (double v : velocities) {
    const Layout lay = effective_layout(base, v);
    const auto res = run_ensemble(lay, opt);
    auto pt = make_scan_point(lay, res.stats);
    pt.v = v;
    out.points.push_back(pt);
  }
  return out;
}

/// Width of the delta_L window over which fraction_a1b2 goes from 0.1 to 0.9,
/// by linear interpolation between scan points. Points without an A2B2
/// trajectory are skipped. Returns nullopt when either level is not crossed.
inline std::optional<double> transition_width(const ScanResult& scan, double lo = 0.1,
                                              double hi = 0.9) {
  std::vector<std::pair<double, double>> xs;
  for (const auto& p : scan.points) {
    if (p.fraction_a1b2) xs.emplace_back(p.delta_L, *p.fraction_a1b2);
  }
  std::sort(xs.begin(), xs.end());
  auto crossing = [&](double level) -> std::optional<double> {
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      const auto [x0, f0] = xs[i];
      const auto [x1, f1] = xs[i + 1];
      if ((f0 - level) * (f1 - level) <= 0.0 && f0 != f1) {
        return x0 + (level - f0) * (x1 - x0) / (f1 - f0);
      }
    }
    return std::nullopt;
  };
  const auto a = crossing(lo);
  const auto b = crossing(hi);
  if (!a || !b) return std::nullopt;
  return std::abs(*b - *a);
}

// ---------------------------------------------------------------------------
// Output

inline nlohmann::json to_json(const std::map<ModePair, std::size_t>& counts) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [p, c] : counts) j[p.key()] = c;
  return j;
}

inline nlohmann::json to_json(const EnsembleStats& s) {
  nlohmann::json arms = nlohmann::json::object();
  for (const auto& [out, table] : s.arm_given_output) arms[out.key()] = to_json(table);
  return {{"n_sampled", s.n_sampled},
          {"n_completed", s.n_completed},
          {"n_annihilated", s.n_annihilated},
          {"n_aborted", s.n_aborted},
          {"n_arm_ambiguous", s.n_arm_ambiguous},
          {"n_output_ambiguous", s.n_output_ambiguous},
          {"n_forbidden_a2b2", s.n_forbidden},
          {"n_counted", s.n_counted},
          {"output_counts", to_json(s.output_counts)},
          {"output_fractions", to_json(s.output_fractions)},
          {"born", to_json(s.born)},
          {"arm_given_output", arms},
          {"annihilated_fraction", s.fraction_annihilated()},
          {"expected_annihilated_fraction", s.expected_annihilated},
          {"max_born_deviation", s.max_born_deviation},
          {"max_born_z", s.max_born_z},
          {"total_steps", s.total_steps}};
}

inline nlohmann::json to_json(const ScanPoint& p, double ell) {
  nlohmann::json j{{"delta_L", p.delta_L},
                   {"delta_L_over_ell", p.delta_L / ell},
                   {"n_a2b2", p.n_a2b2},
                   {"n_a1b2", p.n_a1b2},
                   {"n_a2b1", p.n_a2b1},
                   {"half_width", p.half_width},
                   {"output_fractions", to_json(p.stats.output_fractions)},
                   {"n_completed", p.stats.n_completed},
                   {"n_annihilated", p.stats.n_annihilated},
                   {"n_aborted", p.stats.n_aborted}};
  j["fraction_a1b2"] = p.fraction_a1b2 ? nlohmann::json(*p.fraction_a1b2) : nlohmann::json(nullptr);
  if (!std::isnan(p.v)) j["v"] = p.v;
  return j;
}

inline void write_trajectory_header(std::ostream& os) { os << "traj_id,t,x1,y1,x2,y2,status\n"; }

inline void write_trajectory(std::ostream& os, std::size_t id, const BiTrajectory& tr) {
  for (const auto& s : tr.samples) {
    os << id << ',' << s.t << ',' << s.q[0] << ',' << s.q[1] << ',' << s.q[2] << ',' << s.q[3]
       << ',' << to_string(tr.status) << '\n';
  }
}

}  // namespace hardy
