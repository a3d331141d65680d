#pragma once

// Discrete-mode amplitude engine for the two coupled Mach-Zehnder
// interferometers. Each particle occupies one of five modes (input, two arms,
// two outputs); the two-particle ket is a dense 5x5 table of amplitudes.

#include <array>
#include <cmath>
#include <complex>
#include <compare>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "hardy/errors.hpp"

namespace hardy {

using Complex = std::complex<double>;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kInvSqrt2 = 0.70710678118654752440;

enum class Side : std::uint8_t { A, B };

/// Where a single particle is: before the input splitter, in one of the two
/// arms, or in one of the two output channels. arm2 is the inner arm that
/// runs alongside the other interferometer.
enum class Stage : std::uint8_t { input = 0, arm1 = 1, arm2 = 2, out1 = 3, out2 = 4 };

inline constexpr std::array<Stage, 5> kAllStages{Stage::input, Stage::arm1, Stage::arm2,
                                                 Stage::out1, Stage::out2};

/// Coarse position of a particle in the apparatus.
enum class Section : std::uint8_t { before, arms, outputs };

constexpr Section section_of(Stage s) {
  switch (s) {
    case Stage::input:
      return Section::before;
    case Stage::arm1:
    case Stage::arm2:
      return Section::arms;
    default:
      return Section::outputs;
  }
}

struct ModeLabel {
  Side side;
  Stage stage;

  auto operator<=>(const ModeLabel&) const = default;

  /// "a0", "a1", "a2", "A1", "A2" (and the b/B equivalents).
  std::string name() const {
    static constexpr std::array<const char*, 5> kA{"a0", "a1", "a2", "A1", "A2"};
    static constexpr std::array<const char*, 5> kB{"b0", "b1", "b2", "B1", "B2"};
    const auto i = static_cast<std::size_t>(stage);
    return side == Side::A ? kA[i] : kB[i];
  }
};

/// Joint mode of the two particles, (stage of A, stage of B).
struct ModePair {
  Stage a = Stage::input;
  Stage b = Stage::input;

  auto operator<=>(const ModePair&) const = default;

  std::string key() const {
    return ModeLabel{Side::A, a}.name() + "," + ModeLabel{Side::B, b}.name();
  }

  static ModePair from_key(const std::string& key) {
    const auto comma = key.find(',');
    if (comma == std::string::npos) throw ConfigError("mode key '" + key + "' has no comma");
    auto parse = [&](const std::string& s, Side side) {
      for (Stage st : kAllStages) {
        if (ModeLabel{side, st}.name() == s) return st;
      }
      throw ConfigError("unknown mode label '" + s + "' in key '" + key + "'");
    };
    return {parse(key.substr(0, comma), Side::A), parse(key.substr(comma + 1), Side::B)};
  }
};

class TwoParticleKet {
 public:
  TwoParticleKet() { amp_.fill(Complex{0.0, 0.0}); }

  static TwoParticleKet basis(Stage a, Stage b, Complex c = 1.0) {
    TwoParticleKet k;
    k.at(a, b) = c;
    return k;
  }

  Complex& at(Stage a, Stage b) { return amp_[index(a, b)]; }
  const Complex& at(Stage a, Stage b) const { return amp_[index(a, b)]; }
  Complex& at(ModePair p) { return at(p.a, p.b); }
  const Complex& at(ModePair p) const { return at(p.a, p.b); }

  double norm2() const {
    double s = 0.0;
    for (const auto& c : amp_) s += std::norm(c);
    return s;
  }

  bool is_zero() const {
    for (const auto& c : amp_) {
      if (c != Complex{0.0, 0.0}) return false;
    }
    return true;
  }

  /// Pairs carrying a non-zero amplitude, in (stage A, stage B) order.
  std::vector<ModePair> support() const {
    std::vector<ModePair> out;
    for (Stage a : kAllStages) {
      for (Stage b : kAllStages) {
        if (at(a, b) != Complex{0.0, 0.0}) out.push_back({a, b});
      }
    }
    return out;
  }

  TwoParticleKet& operator*=(Complex s) {
    for (auto& c : amp_) c *= s;
    return *this;
  }

  friend TwoParticleKet operator+(TwoParticleKet l, const TwoParticleKet& r) {
    for (std::size_t i = 0; i < l.amp_.size(); ++i) l.amp_[i] += r.amp_[i];
    return l;
  }

  friend bool operator==(const TwoParticleKet&, const TwoParticleKet&) = default;

 private:
  static std::size_t index(Stage a, Stage b) {
    return static_cast<std::size_t>(a) * 5 + static_cast<std::size_t>(b);
  }

  std::array<Complex, 25> amp_;
};

/// <l|r>
inline Complex inner(const TwoParticleKet& l, const TwoParticleKet& r) {
  Complex s{0.0, 0.0};
  for (Stage a : kAllStages) {
    for (Stage b : kAllStages) s += std::conj(l.at(a, b)) * r.at(a, b);
  }
  return s;
}

/// True when the kets differ at most by a global phase: |<l|r>| = |l||r|.
inline bool equal_up_to_phase(const TwoParticleKet& l, const TwoParticleKet& r,
                              double tol = 1e-12) {
  const double nl = std::sqrt(l.norm2());
  const double nr = std::sqrt(r.norm2());
  if (std::abs(nl - nr) > tol) return false;
  return std::abs(std::abs(inner(l, r)) - nl * nr) <= tol;
}

/// 2x2 splitter matrix acting on (first port, second port). Column j holds the
/// images of incoming mode j on the two outgoing modes.
inline std::array<std::array<Complex, 2>, 2> splitter_matrix() {
  return {{{Complex{kInvSqrt2, 0.0}, Complex{0.0, kInvSqrt2}},
           {Complex{0.0, kInvSqrt2}, Complex{kInvSqrt2, 0.0}}}};
}

enum class SplitterKind : std::uint8_t { input, output };

enum class Target : std::uint8_t { A, B, both };

struct DiscreteEvent {
  enum class Kind : std::uint8_t { input_splitter, output_splitter, annihilate, dephase };

  Kind kind = Kind::input_splitter;
  Target target = Target::both;
  double phi = 0.0;  ///< dephase angle in radians

  static DiscreteEvent input(Target t) { return {Kind::input_splitter, t, 0.0}; }
  static DiscreteEvent output(Target t) { return {Kind::output_splitter, t, 0.0}; }
  static DiscreteEvent annihilation() { return {Kind::annihilate, Target::both, 0.0}; }
  static DiscreteEvent dephasing(double phi) { return {Kind::dephase, Target::both, phi}; }

  std::string name() const {
    const char* side = target == Target::A ? "A" : target == Target::B ? "B" : "AB";
    switch (kind) {
      case Kind::input_splitter:
        return std::string("input_splitter_") + side;
      case Kind::output_splitter:
        return std::string("output_splitter_") + side;
      case Kind::annihilate:
        return "annihilate";
      case Kind::dephase:
        return "dephase";
    }
    return "?";
  }
};

namespace detail {

inline void apply_one_side(TwoParticleKet& ket, Side side, SplitterKind kind) {
  const auto U = splitter_matrix();
  TwoParticleKet out;
  for (Stage a : kAllStages) {
    for (Stage b : kAllStages) {
      const Complex c = ket.at(a, b);
      if (c == Complex{0.0, 0.0}) continue;
      const Stage mine = side == Side::A ? a : b;
      Stage to1, to2;
      Complex f1, f2;
      if (kind == SplitterKind::input) {
        if (mine != Stage::input) {
          throw StageMismatch("input splitter on side " + std::string(side == Side::A ? "A" : "B") +
                              " sees amplitude on " + ModePair{a, b}.key());
        }
        // the particle enters through the port that maps onto (i|m1> + |m2>)/sqrt2
        to1 = Stage::arm1;
        to2 = Stage::arm2;
        f1 = U[0][1];
        f2 = U[1][1];
      } else {
        if (section_of(mine) != Section::arms) {
          throw StageMismatch("output splitter on side " +
                              std::string(side == Side::A ? "A" : "B") + " sees amplitude on " +
                              ModePair{a, b}.key());
        }
        const int col = mine == Stage::arm1 ? 0 : 1;
        to1 = Stage::out1;
        to2 = Stage::out2;
        f1 = U[0][col];
        f2 = U[1][col];
      }
      if (side == Side::A) {
        out.at(to1, b) += f1 * c;
        out.at(to2, b) += f2 * c;
      } else {
        out.at(a, to1) += f1 * c;
        out.at(a, to2) += f2 * c;
      }
    }
  }
  ket = out;
}

inline void require_arms(const TwoParticleKet& ket, const char* what) {
  for (const auto& p : ket.support()) {
    if (section_of(p.a) != Section::arms || section_of(p.b) != Section::arms) {
      throw StageMismatch(std::string(what) + " needs both particles inside the arms, found " +
                          p.key());
    }
  }
}

}  // namespace detail

inline TwoParticleKet apply_splitter(TwoParticleKet ket, Target side, SplitterKind kind) {
  if (side == Target::A || side == Target::both) detail::apply_one_side(ket, Side::A, kind);
  if (side == Target::B || side == Target::both) detail::apply_one_side(ket, Side::B, kind);
  return ket;
}

struct Annihilated {
  TwoParticleKet ket;
  double survival = 1.0;
};

/// Removes the (a2,b2) amplitude and renormalizes what is left.
inline Annihilated annihilate(const TwoParticleKet& ket) {
  detail::require_arms(ket, "annihilation");
  const double total = ket.norm2();
  TwoParticleKet out = ket;
  out.at(Stage::arm2, Stage::arm2) = Complex{0.0, 0.0};
  const double kept = out.norm2();
  if (kept == 0.0) throw ZeroSurvival("annihilation removes the whole ket");
  out *= Complex{1.0 / std::sqrt(kept), 0.0};
  return {out, kept / total};
}

inline TwoParticleKet dephase(TwoParticleKet ket, double phi) {
  detail::require_arms(ket, "dephasing");
  ket.at(Stage::arm2, Stage::arm2) *= std::polar(1.0, phi);
  return ket;
}

inline TwoParticleKet apply(const TwoParticleKet& ket, const DiscreteEvent& e) {
  switch (e.kind) {
    case DiscreteEvent::Kind::input_splitter:
      return apply_splitter(ket, e.target, SplitterKind::input);
    case DiscreteEvent::Kind::output_splitter:
      return apply_splitter(ket, e.target, SplitterKind::output);
    case DiscreteEvent::Kind::annihilate:
      return annihilate(ket).ket;
    case DiscreteEvent::Kind::dephase:
      return dephase(ket, e.phi);
  }
  return ket;
}

/// Ket after each event of the schedule.
inline std::vector<TwoParticleKet> evolve(const std::vector<DiscreteEvent>& schedule,
                                          const TwoParticleKet& initial) {
  std::vector<TwoParticleKet> out;
  out.reserve(schedule.size());
  TwoParticleKet cur = initial;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    try {
      cur = apply(cur, schedule[i]);
    } catch (const StageMismatch& ex) {
      throw StageMismatch("schedule event " + std::to_string(i) + " (" + schedule[i].name() +
                          "): " + ex.what());
    }
    out.push_back(cur);
  }
  return out;
}

inline std::map<ModePair, double> born_probabilities(const TwoParticleKet& ket,
                                                     double tol = 1e-12) {
  const double n = ket.norm2();
  if (std::abs(n - 1.0) > tol) {
    throw NotNormalized("ket norm^2 = " + std::to_string(n) + ", expected 1");
  }
  std::map<ModePair, double> p;
  for (const auto& pair : ket.support()) p[pair] = std::norm(ket.at(pair));
  return p;
}

/// The standard Hardy schedule: both input splitters, the interaction vertex
/// (none, annihilation, or dephasing), then the output splitters in the given
/// order.
enum class Interaction : std::uint8_t { none, annihilate, dephase };

inline std::vector<DiscreteEvent> standard_schedule(Interaction mode, double phi = 0.0,
                                                    bool a_output_first = true) {
  std::vector<DiscreteEvent> s{DiscreteEvent::input(Target::A), DiscreteEvent::input(Target::B)};
  if (mode == Interaction::annihilate) s.push_back(DiscreteEvent::annihilation());
  if (mode == Interaction::dephase) s.push_back(DiscreteEvent::dephasing(phi));
  if (a_output_first) {
    s.push_back(DiscreteEvent::output(Target::A));
    s.push_back(DiscreteEvent::output(Target::B));
  } else {
    s.push_back(DiscreteEvent::output(Target::B));
    s.push_back(DiscreteEvent::output(Target::A));
  }
  return s;
}

// JSON: {"a1,b2": {"re": .., "im": ..}, ...}; only non-zero amplitudes are
// written and keys are sorted.
inline nlohmann::json to_json(const TwoParticleKet& ket) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& p : ket.support()) {
    const Complex c = ket.at(p);
    j[p.key()] = nlohmann::json{{"im", c.imag()}, {"re", c.real()}};
  }
  return j;
}

inline TwoParticleKet ket_from_json(const nlohmann::json& j) {
  TwoParticleKet k;
  for (auto it = j.begin(); it != j.end(); ++it) {
    k.at(ModePair::from_key(it.key())) = Complex{it->at("re").get<double>(),
                                                 it->at("im").get<double>()};
  }
  return k;
}

inline nlohmann::json to_json(const std::map<ModePair, double>& probs) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [p, v] : probs) j[p.key()] = v;
  return j;
}

}  // namespace hardy
