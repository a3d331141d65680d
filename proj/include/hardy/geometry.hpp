#pragma once

// Planar layout of the two interferometers and the timing of every optical
// element crossing. Natural units hbar = m = c = 1 throughout: a packet of
// wavenumber k moves at speed k, and lengths and times share one unit.
//
//            A2 (+y)
//             ^
//   M_a1 ---- S_A_out --> A1 (+x)          interferometer A (above)
//    |  a1       |
//    |           | a2
//   S_A_in ---- M_a2
//   ^ a0  (inner arms a2 and b2 run side by side: annihilation region)
//   S_B_in ---- M_b2
//    |           | b2
//    |  b1       |
//   M_b1 ---- S_B_out --> B1 (+x)          interferometer B (below)
//             |
//             v B2 (-y)

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hardy/errors.hpp"
#include "hardy/mode_algebra.hpp"

namespace hardy {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
};

enum class VertexKind : std::uint8_t { emitter, splitter, mirror, end };

/// One straight piece of a polyline. The last piece of a path is a ray
/// (length = +inf).
struct Segment {
  Vec2 start;
  Vec2 dir;  ///< unit vector
  double arc_start = 0.0;
  double length = 0.0;
  int mirrors_before = 0;  ///< mirror vertices passed before this segment
};

class Polyline {
 public:
  Polyline() = default;

  /// vertices[0] is the start; kinds[i] tells what sits at vertices[i].
  /// When open_end is set the final segment continues as a ray.
  Polyline(std::vector<Vec2> vertices, std::vector<VertexKind> kinds, bool open_end)
      : vertices_(std::move(vertices)), kinds_(std::move(kinds)) {
    double arc = 0.0;
    int mirrors = 0;
    for (std::size_t i = 0; i + 1 < vertices_.size(); ++i) {
      if (i > 0 && kinds_[i] == VertexKind::mirror) ++mirrors;
      const Vec2 delta = vertices_[i + 1] - vertices_[i];
      const double len = delta.norm();
      Segment s{vertices_[i], (1.0 / len) * delta, arc, len, mirrors};
      arc += len;
      segments_.push_back(s);
    }
    if (open_end && !segments_.empty()) {
      segments_.back().length = std::numeric_limits<double>::infinity();
    }
  }

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<VertexKind>& kinds() const { return kinds_; }
  const std::vector<Segment>& segments() const { return segments_; }

  /// Finite length (a trailing ray counts up to its defining vertex).
  double length() const {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < vertices_.size(); ++i) {
      s += (vertices_[i + 1] - vertices_[i]).norm();
    }
    return s;
  }

  /// Segment containing the given arc length. At a vertex the later segment
  /// is returned unless prefer_before is set.
  const Segment& segment_at(double arc, bool prefer_before = false) const {
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const auto& s = segments_[i];
      const double end = s.arc_start + s.length;
      if (arc < end || (prefer_before && arc <= end) || i + 1 == segments_.size()) return s;
    }
    return segments_.back();
  }

  /// Arc length at vertex i.
  double vertex_arc(std::size_t i) const {
    double s = 0.0;
    for (std::size_t j = 0; j < i; ++j) s += (vertices_[j + 1] - vertices_[j]).norm();
    return s;
  }

  Vec2 point_at(double arc) const {
    const auto& s = segment_at(arc);
    return s.start + (arc - s.arc_start) * s.dir;
  }

  /// Arc lengths of the interior mirror vertices.
  std::vector<double> mirror_arcs() const {
    std::vector<double> out;
    for (std::size_t i = 1; i < segments_.size(); ++i) {
      if (kinds_[i] == VertexKind::mirror) out.push_back(segments_[i].arc_start);
    }
    return out;
  }

 private:
  std::vector<Vec2> vertices_;
  std::vector<VertexKind> kinds_;
  std::vector<Segment> segments_;
};

/// Affine isometry r -> Q r + b of the plane.
struct Isometry {
  std::array<double, 4> q{1.0, 0.0, 0.0, 1.0};  ///< row-major 2x2
  Vec2 b;

  Vec2 operator()(Vec2 r) const { return {q[0] * r.x + q[1] * r.y + b.x, q[2] * r.x + q[3] * r.y + b.y}; }
  /// Q^T v, pulls a gradient back through the map.
  Vec2 pull(Vec2 v) const { return {q[0] * v.x + q[2] * v.y, q[1] * v.x + q[3] * v.y}; }

  /// (this o o)(r) = this(o(r))
  Isometry then_after(const Isometry& o) const {
    Isometry m;
    m.q = {q[0] * o.q[0] + q[1] * o.q[2], q[0] * o.q[1] + q[1] * o.q[3],
           q[2] * o.q[0] + q[3] * o.q[2], q[2] * o.q[1] + q[3] * o.q[3]};
    m.b = (*this)(o.b);
    return m;
  }

  /// Reflection across the line through p with unit direction u.
  static Isometry reflection(Vec2 p, Vec2 u) {
    Isometry m;
    m.q = {2.0 * u.x * u.x - 1.0, 2.0 * u.x * u.y, 2.0 * u.x * u.y, 2.0 * u.y * u.y - 1.0};
    const Vec2 hp{m.q[0] * p.x + m.q[1] * p.y, m.q[2] * p.x + m.q[3] * p.y};
    m.b = p - hp;
    return m;
  }
};

/// A splitter or mirror met along a mode path.
struct OpticalElement {
  VertexKind kind = VertexKind::splitter;
  Vec2 point;
  Vec2 axis;          ///< unit direction of the element's line
  double arc = 0.0;   ///< arc length from the emitter
  bool reflects = false;  ///< the path turns here
};

/// Inputs of build_layout, all in natural units.
struct LayoutParams {
  double packet_length = 1500.0;  ///< l
  double wavenumber = 0.8;         ///< k; speed = k, must stay below c = 1 for boosts
  double arm_length = 20.0 * 1500.0;      ///< L, inner horizontal section
  double arm_separation = 60.0 * 1500.0;  ///< d, distance between the two arms of one interferometer
  double gap = 4.0 * 1500.0;              ///< distance between the inner arms a2 and b2
  double lead = 10.0 * 1500.0;            ///< emitter to input splitter
  double probe_distance = 10.0 * 1500.0;  ///< travel past the later output splitter before the final probe
  /// Half-width (flight distance) of the interval during which a packet is
  /// treated as crossing an optical element.
  double scatter_window = 8.0 * 1500.0;
  double delta_L = 0.0;  ///< > 0 extends interferometer B, < 0 extends A
  double max_flight = 0.1;  ///< total flight time bound in units of l^2
  double min_branch_separation = 8.0;  ///< in units of l, at every classification time

  /// Same geometry with every length given in units of the packet length.
  static LayoutParams in_packet_lengths(double ell, double k, double L, double d, double gap,
                                        double lead, double probe, double delta_L,
                                        double window = 8.0) {
    LayoutParams p;
    p.scatter_window = window * ell;
    p.packet_length = ell;
    p.wavenumber = k;
    p.arm_length = L * ell;
    p.arm_separation = d * ell;
    p.gap = gap * ell;
    p.lead = lead * ell;
    p.probe_distance = probe * ell;
    p.delta_L = delta_L * ell;
    return p;
  }

  nlohmann::json to_json() const {
    return {{"packet_length", packet_length},     {"wavenumber", wavenumber},
            {"arm_length", arm_length},           {"arm_separation", arm_separation},
            {"gap", gap},                         {"lead", lead},
            {"probe_distance", probe_distance},   {"delta_L", delta_L},
            {"scatter_window", scatter_window},
            {"max_flight", max_flight},           {"min_branch_separation", min_branch_separation}};
  }
};

struct ScheduledEvent {
  double t = 0.0;
  DiscreteEvent event;
  Vec2 location;
};

struct EventSchedule {
  std::vector<ScheduledEvent> events;

  std::vector<DiscreteEvent> discrete() const {
    std::vector<DiscreteEvent> out;
    for (const auto& e : events) out.push_back(e.event);
    return out;
  }
};

class Layout {
 public:
  const LayoutParams& params() const { return p_; }
  double ell() const { return p_.packet_length; }
  double k() const { return p_.wavenumber; }
  double speed() const { return p_.wavenumber; }

  double extension(Side s) const {
    return s == Side::A ? std::max(0.0, -p_.delta_L) : std::max(0.0, p_.delta_L);
  }

  /// Full history path of a packet in the given mode, from its emitter.
  /// Output modes are routed through arm 1 (both arms have the same length
  /// and one mirror each).
  const Polyline& path(ModeLabel m) const { return paths_[index(m)]; }

  /// Drawing polyline for the mode alone (the section of the apparatus it
  /// labels). Output sections end where the packet sits at the final probe.
  Polyline branch(ModeLabel m) const {
    const auto& k = points_[static_cast<std::size_t>(m.side)];
    using VK = VertexKind;
    switch (m.stage) {
      case Stage::input:
        return Polyline({k.emit, k.in}, {VK::emitter, VK::splitter}, false);
      case Stage::arm1:
        return Polyline({k.in, k.mirror1, k.out}, {VK::splitter, VK::mirror, VK::splitter}, false);
      case Stage::arm2:
        return Polyline({k.in, k.mirror2, k.out}, {VK::splitter, VK::mirror, VK::splitter}, false);
      default:
        return Polyline({k.out, center(m, t_final_)}, {VK::splitter, VK::end}, false);
    }
  }

  /// Line direction shared by every element of one interferometer: it swaps
  /// +x with +y on side A and +x with -y on side B.
  static Vec2 element_axis(Side s) {
    const double r = kInvSqrt2;
    return s == Side::A ? Vec2{r, r} : Vec2{r, -r};
  }

  /// Elements met along the path of mode m, in order. Arm paths include the
  /// output splitter they end at.
  std::vector<OpticalElement> elements(ModeLabel m) const {
    std::vector<OpticalElement> out;
    const auto& pth = path(m);
    const auto& v = pth.vertices();
    const auto& kinds = pth.kinds();
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (kinds[i] != VertexKind::splitter && kinds[i] != VertexKind::mirror) continue;
      bool turns = false;
      if (i + 1 < v.size()) {
        const Vec2 a = v[i] - v[i - 1];
        const Vec2 b = v[i + 1] - v[i];
        turns = std::abs(a.x * b.y - a.y * b.x) > 0.0;
      }
      out.push_back({kinds[i], v[i], element_axis(m.side), pth.vertex_arc(i), turns});
    }
    return out;
  }

  double window() const { return p_.scatter_window; }

  /// Times at which some packet center enters or leaves the scattering
  /// window of an element.
  std::vector<double> window_edges() const {
    std::vector<double> out;
    for (Side s : {Side::A, Side::B}) {
      for (Stage st : {Stage::input, Stage::arm1, Stage::arm2}) {
        for (const auto& e : elements({s, st})) {
          out.push_back((e.arc - window()) / speed());
          out.push_back((e.arc + window()) / speed());
        }
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Input-splitter to output-splitter length of one arm.
  double arm_total(Side s) const { return p_.arm_length + extension(s) + p_.arm_separation; }

  double t_input() const { return p_.lead / speed(); }
  double t_output(Side s) const { return (p_.lead + arm_total(s)) / speed(); }
  double t_interaction() const { return t_input() + 0.5 * p_.arm_length / speed(); }
  /// Midpoint between the input events and the earlier output event.
  double t_arm_probe() const {
    return 0.5 * (t_input() + std::min(t_output(Side::A), t_output(Side::B)));
  }
  double t_final() const { return t_final_; }

  /// Interval during which both inner-arm packets run along the shared
  /// annihilation region.
  std::pair<double, double> annihilation_window() const {
    return {t_input(), t_input() + p_.arm_length / speed()};
  }

  /// Packet-center position of the given mode at time t.
  Vec2 center(ModeLabel m, double t) const { return path(m).point_at(speed() * t); }

  /// Times at which some packet center passes a mirror vertex.
  std::vector<double> mirror_times() const {
    std::vector<double> out;
    for (Side s : {Side::A, Side::B}) {
      for (Stage st : {Stage::arm1, Stage::arm2}) {
        for (double arc : path({s, st}).mirror_arcs()) out.push_back(arc / speed());
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  Vec2 splitter(Side s, SplitterKind kind) const {
    const auto& pth = path({s, Stage::arm1});
    return kind == SplitterKind::input ? pth.vertices()[1] : pth.vertices()[3];
  }

  /// Separation of the two packet centers of a particle in the given section.
  double branch_separation(Side s, Section sec, double t) const {
    const Stage s1 = sec == Section::arms ? Stage::arm1 : Stage::out1;
    const Stage s2 = sec == Section::arms ? Stage::arm2 : Stage::out2;
    return (center({s, s1}, t) - center({s, s2}, t)).norm();
  }

 private:
  friend Layout build_layout(const LayoutParams& p);

  static std::size_t index(ModeLabel m) {
    return static_cast<std::size_t>(m.side) * 5 + static_cast<std::size_t>(m.stage);
  }

  struct KeyPoints {
    Vec2 emit, in, mirror1, mirror2, out;
  };

  LayoutParams p_;
  std::array<Polyline, 10> paths_;
  std::array<KeyPoints, 2> points_;
  double t_final_ = 0.0;
};

namespace detail {

inline void require(bool ok, const std::string& bound) {
  if (!ok) throw ConfigError("layout violates bound: " + bound);
}

}  // namespace detail

inline Layout build_layout(const LayoutParams& p) {
  using detail::require;
  for (double v : {p.packet_length, p.wavenumber, p.arm_length, p.arm_separation, p.gap, p.lead,
                   p.probe_distance, p.delta_L, p.max_flight}) {
    require(std::isfinite(v), "all parameters finite");
  }
  const double ell = p.packet_length;
  require(ell > 0.0, "packet_length > 0");
  require(p.wavenumber > 0.0, "wavenumber > 0");
  require(p.wavenumber * ell >= 50.0, "wavenumber * packet_length >= 50");
  require(p.arm_separation >= 8.0 * ell, "arm_separation >= 8 * packet_length");
  require(p.arm_length >= 4.0 * ell, "arm_length >= 4 * packet_length");
  require(p.gap > 0.0, "gap > 0");
  require(p.lead > 0.0, "lead > 0");
  require(p.probe_distance >= 0.0, "probe_distance >= 0");
  require(p.scatter_window >= 6.0 * ell, "scatter_window >= 6 * packet_length");
  require(p.lead > p.scatter_window, "lead > scatter_window");
  require(p.arm_length > 2.0 * p.scatter_window,
          "arm_length > 2 * scatter_window (interaction clear of element crossings)");
  require(p.arm_separation > 2.0 * p.scatter_window, "arm_separation > 2 * scatter_window");
  require(p.probe_distance > p.scatter_window, "probe_distance > scatter_window");

  Layout lay;
  lay.p_ = p;
  const double L = p.arm_length;
  const double d = p.arm_separation;
  const double h = 0.5 * p.gap;
  using VK = VertexKind;

  for (Side s : {Side::A, Side::B}) {
    const double sign = s == Side::A ? 1.0 : -1.0;  // B is the mirror image in y
    const double ext = lay.extension(s);
    const Vec2 emit{-p.lead, sign * h};
    const Vec2 in{0.0, sign * h};
    const Vec2 mirror1{0.0, sign * (h + d)};
    const Vec2 mirror2{L + ext, sign * h};
    const Vec2 out{L + ext, sign * (h + d)};
    const Vec2 far1 = out + Vec2{1.0, 0.0};
    const Vec2 far2 = out + Vec2{0.0, sign};
    lay.points_[static_cast<std::size_t>(s)] = {emit, in, mirror1, mirror2, out};
    auto set = [&](Stage st, std::vector<Vec2> v, std::vector<VK> k) {
      lay.paths_[Layout::index({s, st})] = Polyline(std::move(v), std::move(k), true);
    };
    set(Stage::input, {emit, in, in + Vec2{1.0, 0.0}}, {VK::emitter, VK::splitter, VK::end});
    set(Stage::arm1, {emit, in, mirror1, out}, {VK::emitter, VK::splitter, VK::mirror, VK::splitter});
    set(Stage::arm2, {emit, in, mirror2, out}, {VK::emitter, VK::splitter, VK::mirror, VK::splitter});
    set(Stage::out1, {emit, in, mirror1, out, far1},
        {VK::emitter, VK::splitter, VK::mirror, VK::splitter, VK::end});
    set(Stage::out2, {emit, in, mirror1, out, far2},
        {VK::emitter, VK::splitter, VK::mirror, VK::splitter, VK::end});
  }
  lay.t_final_ = std::max(lay.t_output(Side::A), lay.t_output(Side::B)) +
                 p.probe_distance / lay.speed();

  require(lay.t_final_ <= p.max_flight * ell * ell,
          "total flight time <= max_flight * packet_length^2 (packet spreading)");
  const double sep = p.min_branch_separation * ell;
  for (Side s : {Side::A, Side::B}) {
    require(lay.branch_separation(s, Section::arms, lay.t_interaction()) >= sep,
            "arm branches separated by min_branch_separation at the interaction time");
    require(lay.branch_separation(s, Section::arms, lay.t_arm_probe()) >= sep,
            "arm branches separated by min_branch_separation at the arm probe time");
    require(lay.branch_separation(s, Section::outputs, lay.t_final_) >= sep,
            "output branches separated by min_branch_separation at the final probe time");
  }
  return lay;
}

/// Crossing times of every optical element for the given interaction mode.
/// Input events are simultaneous; output events tie when delta_L = 0.
inline EventSchedule event_schedule(const Layout& lay, Interaction mode = Interaction::annihilate,
                                    double phi = 0.0) {
  EventSchedule s;
  const double t_in = lay.t_input();
  s.events.push_back({t_in, DiscreteEvent::input(Target::A), lay.splitter(Side::A, SplitterKind::input)});
  s.events.push_back({t_in, DiscreteEvent::input(Target::B), lay.splitter(Side::B, SplitterKind::input)});
  const double t_int = lay.t_interaction();
  const Vec2 where = 0.5 * (lay.center({Side::A, Stage::arm2}, t_int) +
                            lay.center({Side::B, Stage::arm2}, t_int));
  if (mode == Interaction::annihilate) s.events.push_back({t_int, DiscreteEvent::annihilation(), where});
  if (mode == Interaction::dephase) s.events.push_back({t_int, DiscreteEvent::dephasing(phi), where});
  std::vector<ScheduledEvent> outs{
      {lay.t_output(Side::A), DiscreteEvent::output(Target::A), lay.splitter(Side::A, SplitterKind::output)},
      {lay.t_output(Side::B), DiscreteEvent::output(Target::B), lay.splitter(Side::B, SplitterKind::output)}};
  std::stable_sort(outs.begin(), outs.end(),
                   [](const ScheduledEvent& a, const ScheduledEvent& b) { return a.t < b.t; });
  s.events.insert(s.events.end(), outs.begin(), outs.end());
  return s;
}

inline nlohmann::json to_json(const EventSchedule& s) {
  nlohmann::json ev = nlohmann::json::array();
  for (const auto& e : s.events) {
    nlohmann::json j{{"t", e.t}, {"event", e.event.name()}, {"x", e.location.x}, {"y", e.location.y}};
    if (e.event.kind == DiscreteEvent::Kind::dephase) j["phi"] = e.event.phi;
    ev.push_back(j);
  }
  return {{"units", "natural units hbar = m = c = 1"}, {"events", ev}};
}

// ---------------------------------------------------------------------------
// Lorentz boosts along the axis Ox. In this layout Ox is the +y direction:
// the output and outer-arm sections of A run along +y and those of B along -y,
// and A's output splitter sits at the larger coordinate.

struct SpacetimeEvent {
  double t = 0.0;
  double x = 0.0;
};

inline double lorentz_gamma(double v) {
  if (!(std::abs(v) < 1.0)) {
    throw SuperluminalBoost("boost velocity |v| must be < 1 (c = 1), got " + std::to_string(v));
  }
  return 1.0 / std::sqrt((1.0 - v) * (1.0 + v));
}

inline SpacetimeEvent boost_event(const SpacetimeEvent& e, double v) {
  const double g = lorentz_gamma(v);
  return {g * (e.t - v * e.x), g * (e.x - v * e.t)};
}

enum class CrossingOrder : std::uint8_t { A_first, B_first, simultaneous };

inline const char* to_string(CrossingOrder o) {
  switch (o) {
    case CrossingOrder::A_first:
      return "A_first";
    case CrossingOrder::B_first:
      return "B_first";
    default:
      return "simultaneous";
  }
}

struct Crossing {
  CrossingOrder order = CrossingOrder::simultaneous;
  double delay = 0.0;  ///< t'_B - t'_A in the boosted frame
};

/// Output-splitter crossing events in lab coordinates (t, position along Ox).
inline std::pair<SpacetimeEvent, SpacetimeEvent> output_events(const Layout& lay) {
  return {{lay.t_output(Side::A), lay.splitter(Side::A, SplitterKind::output).y},
          {lay.t_output(Side::B), lay.splitter(Side::B, SplitterKind::output).y}};
}

inline Crossing crossing_order(const Layout& lay, double v) {
  if (lay.params().delta_L != 0.0) {
    throw ConfigError("crossing_order needs the symmetric layout (delta_L = 0)");
  }
  if (!(lay.speed() < 1.0)) {
    throw ConfigError("packet speed must be below c = 1 to boost the layout");
  }
  const auto [ea, eb] = output_events(lay);
  const double delay = boost_event(eb, v).t - boost_event(ea, v).t;
  Crossing c;
  c.delay = delay;
  c.order = delay > 0.0 ? CrossingOrder::A_first
                        : delay < 0.0 ? CrossingOrder::B_first : CrossingOrder::simultaneous;
  return c;
}

/// Galilean layout whose output-splitter delay equals the crossing delay seen
/// in the frame moving with velocity v along Ox. This is an effective model:
/// only the order and delay of the two output crossings are carried over.
inline Layout effective_layout(const Layout& lay, double v) {
  const Crossing c = crossing_order(lay, v);
  LayoutParams p = lay.params();
  p.delta_L = lay.speed() * c.delay;
  return build_layout(p);
}

}  // namespace hardy
