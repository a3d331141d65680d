// Reference kets of the two-interferometer experiment and their check
// against mode_algebra::evolve.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "hardy/mode_algebra.hpp"

namespace hardy {

struct KetFixture {
  std::string name;
  std::vector<DiscreteEvent> schedule;
  TwoParticleKet expected;
};

struct FixtureResult {
  std::string name;
  bool pass = false;
  TwoParticleKet got;
  TwoParticleKet expected;
  std::string error;  ///< set when evolve threw
};

inline std::vector<KetFixture> ket_fixtures() {
  using E = DiscreteEvent;
  using S = Stage;
  const Complex i = kI;
  auto ket = [](std::initializer_list<std::pair<ModePair, Complex>> amps, double scale) {
    TwoParticleKet k;
    for (const auto& [p, c] : amps) k.at(p) = c / scale;
    return k;
  };
  const std::vector<E> inputs{E::input(Target::A), E::input(Target::B)};
  auto with = [&](std::initializer_list<E> more) {
    auto s = inputs;
    s.insert(s.end(), more.begin(), more.end());
    return s;
  };
  return {
      {"after input splitters", inputs,
       ket({{{S::arm1, S::arm1}, -1.0}, {{S::arm1, S::arm2}, i}, {{S::arm2, S::arm1}, i},
            {{S::arm2, S::arm2}, 1.0}},
           2.0)},
      {"after annihilation", with({E::annihilation()}),
       ket({{{S::arm1, S::arm1}, -1.0}, {{S::arm1, S::arm2}, i}, {{S::arm2, S::arm1}, i}},
           std::sqrt(3.0))},
      {"A output splitter only", with({E::annihilation(), E::output(Target::A)}),
       ket({{{S::out1, S::arm1}, -2.0}, {{S::out1, S::arm2}, i}, {{S::out2, S::arm2}, -1.0}},
           std::sqrt(6.0))},
      {"B output splitter only", with({E::annihilation(), E::output(Target::B)}),
       ket({{{S::arm1, S::out1}, -2.0}, {{S::arm2, S::out1}, i}, {{S::arm2, S::out2}, -1.0}},
           std::sqrt(6.0))},
      {"both output splitters", with({E::annihilation(), E::output(Target::A), E::output(Target::B)}),
       ket({{{S::out1, S::out1}, -3.0}, {{S::out1, S::out2}, -i}, {{S::out2, S::out1}, -i},
            {{S::out2, S::out2}, -1.0}},
           std::sqrt(12.0))},
      {"no annihilation", with({E::output(Target::A), E::output(Target::B)}),
       ket({{{S::out1, S::out1}, i}}, 1.0)},
  };
}

/// Up to a global phase; zero components included (the comparison is on
/// the full 25-dimensional vector).
inline std::vector<FixtureResult> check_fixtures(double tol = 1e-12) {
  std::vector<FixtureResult> out;
  const auto initial = TwoParticleKet::basis(Stage::input, Stage::input);
  for (const auto& f : ket_fixtures()) {
    FixtureResult r;
    r.name = f.name;
    r.expected = f.expected;
    try {
      r.got = evolve(f.schedule, initial).back();
      r.pass = equal_up_to_phase(r.got, f.expected, tol);
    } catch (const Error& e) {
      r.error = e.what();
    }
    out.push_back(r);
  }
  return out;
}

/// Output-channel Born table of the standard annihilation schedule.
inline std::map<ModePair, double> expected_born_table() {
  return {{{Stage::out1, Stage::out1}, 0.75},
          {{Stage::out1, Stage::out2}, 1.0 / 12.0},
          {{Stage::out2, Stage::out1}, 1.0 / 12.0},
          {{Stage::out2, Stage::out2}, 1.0 / 12.0}};
}

}  // namespace hardy
