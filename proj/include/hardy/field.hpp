#pragma once

// Continuous two-particle wavefunction: a sum of product terms, one per
// non-zero amplitude of the mode ket, each the product of two single-particle
// mode functions.
//
// Every mode function is built from one free Gaussian packet per particle,
// launched from the emitter along +x (hbar = m = 1, width w(t) = l^2 + i t):
//
//   phi(r, t) = (pi l^2)^(-1/2) (l^2 / w) exp(-|r - c(t)|^2 / (2 w) + i k x.(r - c(t)) + i k^2 t / 2)
//
// evaluated at mirror images M r of the field point ("images"). Mirrors and
// splitters are thin lines. While a packet crosses one (|arc - element| < W)
// its mode function is
//
//   incident side:  phi(M r) + rho phi(M R r)      far side:  tau phi(M r)
//
// with R the reflection in the element line; (tau, rho) = e^{i pi/4} (1, i)/sqrt2
// for a splitter (psi stays continuous across the line) and (0, -1) for a
// hard mirror. Outside the windows every mode function is a single image, and
// each piece is an exact free solution, so the continuity equation holds
// exactly away from element lines.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <ostream>
#include <vector>

#include "hardy/errors.hpp"
#include "hardy/geometry.hpp"
#include "hardy/mode_algebra.hpp"

namespace hardy {

/// Point of the planar configuration space: (x1, y1, x2, y2).
using Vec4 = std::array<double, 4>;

inline Vec4 config_point(Vec2 r1, Vec2 r2) { return {r1.x, r1.y, r2.x, r2.y}; }
inline Vec2 particle_a(const Vec4& q) { return {q[0], q[1]}; }
inline Vec2 particle_b(const Vec4& q) { return {q[2], q[3]}; }

/// Free packet launched from the emitter along +x at t = 0.
struct GaussianPacket {
  Vec2 emitter;
  double ell = 1.0;
  double k = 1.0;

  Vec2 center(double t) const { return emitter + Vec2{k * t, 0.0}; }
  Complex width(double t) const { return {ell * ell, t}; }
  double phase(double t) const { return 0.5 * k * k * t; }

  /// Full complex value, normalization included.
  Complex value(Vec2 r, double t) const {
    const Complex w = width(t);
    const Vec2 d = r - center(t);
    const Complex e = -0.5 * d.norm2() / w + Complex{0.0, k * d.x + phase(t)};
    return (ell / std::sqrt(std::numbers::pi)) / w * std::exp(e);
  }
};

/// One image term of a mode function: coeff * phi(map(r)), optionally
/// restricted to one side of an element line.
struct Image {
  Complex coeff{1.0, 0.0};
  Isometry map;
  bool restricted = false;
  Vec2 line_point;
  Vec2 line_normal;
  double side = 1.0;  ///< active where side * normal.(r - point) >= 0

  bool active(Vec2 r) const {
    return !restricted || side * line_normal.dot(r - line_point) >= 0.0;
  }
};

/// Single-particle wave of one mode over one interval.
struct ModeFunction {
  ModeLabel mode;
  std::vector<Image> images;
  bool crossing = false;  ///< inside the window of an element
};

inline constexpr Complex kSplitterT{0.5, 0.5};    // e^{i pi/4} / sqrt2
inline constexpr Complex kSplitterR{-0.5, 0.5};   // i * kSplitterT

/// Mode function of m for arc positions strictly inside (arc_lo, arc_hi),
/// an interval that contains no window edge.
inline ModeFunction mode_function(const Layout& lay, ModeLabel m, double arc_mid) {
  ModeFunction f;
  f.mode = m;
  Image plain;
  const double W = lay.window();
  for (const auto& e : lay.elements(m)) {
    if (arc_mid < e.arc - W) break;
    const Isometry refl = Isometry::reflection(e.point, e.axis);
    if (arc_mid < e.arc + W) {
      const Vec2 normal{-e.axis.y, e.axis.x};
      const Vec2 before = lay.path(m).point_at(e.arc - W);
      const double incident = normal.dot(before - e.point) >= 0.0 ? 1.0 : -1.0;
      const bool splitter = e.kind == VertexKind::splitter;
      Image in = plain;
      in.restricted = true;
      in.line_point = e.point;
      in.line_normal = normal;
      in.side = incident;
      Image back = in;
      back.coeff = plain.coeff * (splitter ? kSplitterR : Complex{-1.0, 0.0});
      back.map = plain.map.then_after(refl);
      f.images = {in, back};
      if (splitter) {
        Image through = in;
        through.side = -incident;
        through.coeff = plain.coeff * kSplitterT;
        f.images.push_back(through);
      }
      f.crossing = true;
      return f;
    }
    plain.coeff *= e.kind == VertexKind::splitter ? std::exp(Complex{0.0, 0.25 * std::numbers::pi})
                                                  : Complex{-1.0, 0.0};
    if (e.reflects) plain.map = plain.map.then_after(refl);
  }
  f.images = {plain};
  return f;
}

struct BranchTerm {
  ModePair modes;
  Complex coefficient;
  std::size_t mode_a = 0;  ///< index into WavefunctionState::modes(Side::A)
  std::size_t mode_b = 0;
};

struct CurrentSample {
  double rho = 0.0;
  Vec4 J{0.0, 0.0, 0.0, 0.0};
};

/// Either a velocity or a signal that the density fell below the floor.
struct Velocity {
  bool node = false;
  Vec4 v{0.0, 0.0, 0.0, 0.0};
  double log_rho = 0.0;
};

/// Wavefunction on a closed time interval that contains no window edge and
/// no discrete event. Immutable; safe to share between threads.
class WavefunctionState {
 public:
  WavefunctionState(const Layout& layout, TwoParticleKet ket, double t_begin, double t_end,
                    double rho_floor)
      : ket_(ket), t_begin_(t_begin), t_end_(t_end), ell_(layout.ell()), k_(layout.k()),
        rho_floor_(rho_floor) {
    if (!(t_end > t_begin)) throw IntervalError("empty wavefunction interval");
    const double t_mid = std::isfinite(t_end) ? 0.5 * (t_begin + t_end) : t_begin + 1.0;
    for (Side s : {Side::A, Side::B}) {
      const Vec2 emit = layout.path({s, Stage::input}).vertices().front();
      packet_[static_cast<std::size_t>(s)] = {emit, ell_, k_};
    }
    auto mode_index = [&](Side s, Stage st) {
      auto& list = modes_[static_cast<std::size_t>(s)];
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (list[i].mode.stage == st) return i;
      }
      list.push_back(mode_function(layout, {s, st}, layout.speed() * t_mid));
      return list.size() - 1;
    };
    for (const auto& p : ket_.support()) {
      const std::size_t ia = mode_index(Side::A, p.a);
      const std::size_t ib = mode_index(Side::B, p.b);
      terms_.push_back({p, ket_.at(p), ia, ib});
    }
  }

  const TwoParticleKet& ket() const { return ket_; }
  const std::vector<BranchTerm>& terms() const { return terms_; }
  const std::vector<ModeFunction>& modes(Side s) const {
    return modes_[static_cast<std::size_t>(s)];
  }
  const GaussianPacket& packet(Side s) const { return packet_[static_cast<std::size_t>(s)]; }
  double t_begin() const { return t_begin_; }
  double t_end() const { return t_end_; }
  double rho_floor() const { return rho_floor_; }
  bool contains(double t) const { return t >= t_begin_ && t <= t_end_; }
  /// Some packet is crossing an element during this interval.
  bool crossing() const {
    for (const auto& list : modes_) {
      for (const auto& f : list) {
        if (f.crossing) return true;
      }
    }
    return false;
  }

  /// Element lines (point, unit normal) across which the mode functions of
  /// particle s are only piecewise smooth during this interval.
  std::vector<std::pair<Vec2, Vec2>> element_lines(Side s) const {
    std::vector<std::pair<Vec2, Vec2>> out;
    for (const auto& f : modes(s)) {
      for (const auto& img : f.images) {
        if (!img.restricted) continue;
        const bool seen = std::any_of(out.begin(), out.end(), [&](const auto& l) {
          return l.first == img.line_point && l.second == img.line_normal;
        });
        if (!seen) out.emplace_back(img.line_point, img.line_normal);
      }
    }
    return out;
  }

  double coefficient_norm2() const {
    double s = 0.0;
    for (const auto& term : terms_) s += std::norm(term.coefficient);
    return s;
  }

  /// Peak density of a single product term at time t.
  double product_peak(double t) const {
    const double w2 = ell_ * ell_ * ell_ * ell_ + t * t;
    const double one = ell_ * ell_ / (std::numbers::pi * w2);
    return one * one;
  }

  /// Value of one mode function, normalization included.
  Complex mode_value(Side s, std::size_t i, Vec2 r, double t) const {
    Complex v{0.0, 0.0};
    for (const auto& img : modes(s)[i].images) {
      if (img.active(r)) v += img.coeff * packet(s).value(img.map(r), t);
    }
    return v;
  }

  Complex psi(Vec2 r1, Vec2 r2, double t) const {
    check(t);
    Complex s{0.0, 0.0};
    for (const auto& term : terms_) {
      s += term.coefficient * mode_value(Side::A, term.mode_a, r1, t) *
           mode_value(Side::B, term.mode_b, r2, t);
    }
    return s;
  }

  double density(Vec2 r1, Vec2 r2, double t) const { return std::norm(psi(r1, r2, t)); }

  /// rho and J = Im(psi* grad psi) (hbar = m = 1), four planar components.
  CurrentSample current(Vec2 r1, Vec2 r2, double t) const {
    check(t);
    const Reduced red = reduce(r1, r2, t);
    CurrentSample out;
    if (!red.any) return out;
    const double scale = std::exp(2.0 * red.log_scale);
    out.rho = std::norm(red.psi) * scale;
    for (int i = 0; i < 4; ++i) out.J[i] = (std::conj(red.psi) * red.grad[i]).imag() * scale;
    return out;
  }

  /// J / rho, or a node signal when rho < rho_floor.
  Velocity velocity(const Vec4& q, double t) const {
    check(t);
    const Reduced red = reduce(particle_a(q), particle_b(q), t);
    Velocity out;
    const double mag2 = std::norm(red.psi);
    if (!red.any || !(mag2 > 0.0)) {
      out.node = true;
      out.log_rho = -std::numeric_limits<double>::infinity();
      return out;
    }
    out.log_rho = std::log(mag2) + 2.0 * red.log_scale;
    if (out.log_rho < std::log(rho_floor_)) {
      out.node = true;
      return out;
    }
    const Complex inv = std::conj(red.psi) / mag2;
    for (int i = 0; i < 4; ++i) out.v[i] = (inv * red.grad[i]).imag();
    return out;
  }

 private:
  struct Reduced {
    Complex psi;
    std::array<Complex, 4> grad;
    double log_scale = 0.0;  ///< log |true psi / psi| (normalizations and max shifts)
    bool any = true;         ///< some image is active for both particles
  };

  void check(double t) const {
    if (!contains(t)) {
      throw IntervalError("time " + std::to_string(t) + " outside [" + std::to_string(t_begin_) +
                          ", " + std::to_string(t_end_) + "]");
    }
  }

  // Mode values and gradients with the largest Gaussian exponent of each
  // particle factored out, so that far tails neither underflow nor lose the
  // ratio J / rho.
  Reduced reduce(Vec2 r1, Vec2 r2, double t) const {
    const Complex inv_w = 1.0 / Complex{ell_ * ell_, t};
    constexpr std::size_t kMaxImages = 8;
    constexpr double kNegligible = 80.0;  // e^-80 relative to the largest image
    std::array<std::array<Complex, 4>, 2> val{};   // [side][mode]
    std::array<std::array<Complex, 8>, 2> grad{};  // [side][mode*2 + axis]
    std::array<double, 2> shift{};
    const std::array<Vec2, 2> r{r1, r2};
    Reduced out{};
    for (std::size_t s = 0; s < 2; ++s) {
      const auto& pk = packet_[s];
      const Vec2 c = pk.center(t);
      std::array<Complex, kMaxImages> expo{};
      std::array<Vec2, kMaxImages> dre{}, dim{};
      std::array<const Image*, kMaxImages> used{};
      std::array<std::size_t, kMaxImages> owner{};
      std::size_t n = 0;
      double mx = -std::numeric_limits<double>::infinity();
      const auto& list = modes_[s];
      for (std::size_t m = 0; m < list.size(); ++m) {
        for (const auto& img : list[m].images) {
          if (!img.active(r[s])) continue;
          const Vec2 d = img.map(r[s]) - c;
          expo[n] = -0.5 * d.norm2() * inv_w + Complex{0.0, k_ * d.x};
          // gradient of the exponent in the unfolded frame, pulled back
          const Complex gx = -d.x * inv_w + Complex{0.0, k_};
          const Complex gy = -d.y * inv_w;
          dre[n] = img.map.pull({gx.real(), gy.real()});
          dim[n] = img.map.pull({gx.imag(), gy.imag()});
          used[n] = &img;
          owner[n] = m;
          mx = std::max(mx, expo[n].real());
          ++n;
        }
      }
      if (n == 0) {
        out.any = false;
        return out;
      }
      shift[s] = mx;
      for (std::size_t j = 0; j < n; ++j) {
        if (expo[j].real() - mx < -kNegligible) continue;
        const Complex e = used[j]->coeff * std::exp(expo[j] - mx);
        val[s][owner[j]] += e;
        grad[s][2 * owner[j]] += e * Complex{dre[j].x, dim[j].x};
        grad[s][2 * owner[j] + 1] += e * Complex{dre[j].y, dim[j].y};
      }
    }
    out.grad.fill(Complex{0.0, 0.0});
    for (const auto& term : terms_) {
      const Complex ua = val[0][term.mode_a];
      const Complex ub = val[1][term.mode_b];
      const Complex cu = term.coefficient * ua * ub;
      out.psi += cu;
      const Complex ca = term.coefficient * ub;
      const Complex cb = term.coefficient * ua;
      out.grad[0] += ca * grad[0][2 * term.mode_a];
      out.grad[1] += ca * grad[0][2 * term.mode_a + 1];
      out.grad[2] += cb * grad[1][2 * term.mode_b];
      out.grad[3] += cb * grad[1][2 * term.mode_b + 1];
    }
    // |N|^2 per particle = l^2 / (pi |w|^2)
    const double w2 = ell_ * ell_ * ell_ * ell_ + t * t;
    out.log_scale = shift[0] + shift[1] + std::log(ell_ * ell_ / (std::numbers::pi * w2));
    return out;
  }

  TwoParticleKet ket_;
  double t_begin_;
  double t_end_;
  double ell_;
  double k_;
  double rho_floor_;
  std::array<GaussianPacket, 2> packet_;
  std::array<std::vector<ModeFunction>, 2> modes_;
  std::vector<BranchTerm> terms_;
};

/// Default density floor: 1e-12 of the initial peak density 1 / (pi l^2)^2.
inline double default_rho_floor(const Layout& lay, double relative = 1e-12) {
  const double peak = 1.0 / (std::numbers::pi * lay.ell() * lay.ell());
  return relative * peak * peak;
}

/// Time at which a scheduled event takes effect on the mode ket: splitters
/// once the packet has left the element's window, interactions at once.
inline double effect_time(const Layout& lay, const ScheduledEvent& e) {
  const auto kind = e.event.kind;
  const bool splitter = kind == DiscreteEvent::Kind::input_splitter ||
                        kind == DiscreteEvent::Kind::output_splitter;
  return splitter ? e.t + lay.window() / lay.speed() : e.t;
}

/// State following `state` from time t (a breakpoint) to t_next, after an
/// optional discrete event. Window edges pass event = nullptr: the ket is
/// unchanged and only the mode functions are rebuilt.
inline WavefunctionState apply_event(const WavefunctionState& state, const DiscreteEvent* event,
                                     const Layout& layout, double t, double t_next) {
  if (!state.contains(t)) {
    throw IntervalError("event at t = " + std::to_string(t) + " outside the state interval");
  }
  TwoParticleKet ket = event ? apply(state.ket(), *event) : state.ket();
  return WavefunctionState(layout, ket, t, t_next, state.rho_floor());
}

/// Piecewise-in-time wavefunction for a layout and interaction mode.
class Field {
 public:
  Field(Layout layout, Interaction mode, double phi = 0.0, double rho_floor_relative = 1e-12)
      : layout_(std::move(layout)), mode_(mode), phi_(phi),
        schedule_(event_schedule(layout_, mode, phi)) {
    const double floor = default_rho_floor(layout_, rho_floor_relative);
    std::vector<double> bps = layout_.window_edges();
    for (const auto& e : schedule_.events) bps.push_back(effect_time(layout_, e));
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
    breakpoints_ = bps;

    const double inf = std::numeric_limits<double>::infinity();
    states_.emplace_back(layout_, TwoParticleKet::basis(Stage::input, Stage::input), 0.0,
                         bps.front(), floor);
    for (std::size_t i = 0; i < bps.size(); ++i) {
      const double t = bps[i];
      const double t_next = i + 1 < bps.size() ? bps[i + 1] : inf;
      TwoParticleKet ket = states_.back().ket();
      for (const auto& e : schedule_.events) {
        if (effect_time(layout_, e) != t) continue;
        if (e.event.kind == DiscreteEvent::Kind::annihilate) {
          const auto res = annihilate(ket);
          ket = res.ket;
          survival_ = res.survival;
        } else {
          ket = apply(ket, e.event);
        }
      }
      states_.emplace_back(layout_, ket, t, t_next, floor);
    }
  }

  const Layout& layout() const { return layout_; }
  const EventSchedule& schedule() const { return schedule_; }
  Interaction mode() const { return mode_; }
  double phi() const { return phi_; }
  double survival() const { return survival_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<WavefunctionState>& states() const { return states_; }

  /// State governing the open interval just after t (or just before t when
  /// from_below is set, which matters only at breakpoints).
  const WavefunctionState& state_at(double t, bool from_below = false) const {
    for (std::size_t i = 0; i < states_.size(); ++i) {
      const auto& s = states_[i];
      const bool last = i + 1 == states_.size();
      if (from_below ? (t > s.t_begin() && t <= s.t_end()) || (i == 0 && t == s.t_begin())
                     : (t >= s.t_begin() && (t < s.t_end() || last))) {
        return s;
      }
    }
    throw IntervalError("no state covers t = " + std::to_string(t));
  }

  /// Final ket (after every event).
  const TwoParticleKet& final_ket() const { return states_.back().ket(); }

 private:
  Layout layout_;
  Interaction mode_;
  double phi_;
  EventSchedule schedule_;
  std::vector<double> breakpoints_;
  std::vector<WavefunctionState> states_;
  double survival_ = 1.0;
};

/// |d rho/dt + div J| from central differences, spatial step h and time step
/// h / k (equal flight distance).
inline double continuity_residual(const WavefunctionState& state, Vec2 r1, Vec2 r2, double t,
                                  double h, double k) {
  const double ht = h / k;
  if (!state.contains(t - ht) || !state.contains(t + ht)) {
    throw IntervalError("finite-difference stencil straddles a breakpoint");
  }
  const double drho =
      (state.current(r1, r2, t + ht).rho - state.current(r1, r2, t - ht).rho) / (2.0 * ht);
  double div = 0.0;
  const Vec4 q = config_point(r1, r2);
  for (int i = 0; i < 4; ++i) {
    Vec4 qp = q, qm = q;
    qp[i] += h;
    qm[i] -= h;
    const double jp = state.current(particle_a(qp), particle_b(qp), t).J[i];
    const double jm = state.current(particle_a(qm), particle_b(qm), t).J[i];
    div += (jp - jm) / (2.0 * h);
  }
  return std::abs(drho + div);
}

/// CSV probe rows: t, x1, y1, x2, y2, rho, J1x, J1y, J2x, J2y.
inline void write_probe_header(std::ostream& os) {
  os << "t,x1,y1,x2,y2,rho,J1x,J1y,J2x,J2y\n";
}

inline void write_probe_row(std::ostream& os, double t, const Vec4& q, const CurrentSample& c) {
  os << t << ',' << q[0] << ',' << q[1] << ',' << q[2] << ',' << q[3] << ',' << c.rho << ','
     << c.J[0] << ',' << c.J[1] << ',' << c.J[2] << ',' << c.J[3] << '\n';
}

}  // namespace hardy
