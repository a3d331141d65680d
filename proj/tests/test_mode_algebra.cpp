#include <gtest/gtest.h>

#include <random>

#include "hardy/fixtures.hpp"
#include "hardy/mode_algebra.hpp"

using namespace hardy;

namespace {

using S = Stage;
const Complex I{0.0, 1.0};

// Independent oracle: explicit 5x5 single-particle matrices, Kronecker
// products on the 25-dimensional pair space.
using Mat5 = std::array<std::array<Complex, 5>, 5>;
using Vec25 = std::array<Complex, 25>;

Mat5 identity5() {
  Mat5 m{};
  for (int i = 0; i < 5; ++i) m[i][i] = 1.0;
  return m;
}

// columns = images of basis states (input, arm1, arm2, out1, out2)
Mat5 input_splitter5() {
  Mat5 m = identity5();
  const double r = 1.0 / std::sqrt(2.0);
  m[0][0] = 0.0;
  m[1][0] = I * r;  // input -> (i arm1 + arm2) / sqrt2
  m[2][0] = r;
  return m;
}

Mat5 output_splitter5() {
  Mat5 m = identity5();
  const double r = 1.0 / std::sqrt(2.0);
  m[1][1] = m[2][2] = 0.0;
  m[3][1] = r;  // arm1 -> (out1 + i out2) / sqrt2
  m[4][1] = I * r;
  m[3][2] = I * r;  // arm2 -> (i out1 + out2) / sqrt2
  m[4][2] = r;
  return m;
}

Vec25 kron_apply(const Mat5& a, const Mat5& b, const Vec25& v) {
  Vec25 out{};
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int k = 0; k < 5; ++k)
        for (int l = 0; l < 5; ++l) out[i * 5 + j] += a[i][k] * b[j][l] * v[k * 5 + l];
  return out;
}

Vec25 to_vec(const TwoParticleKet& k) {
  Vec25 v{};
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) v[a * 5 + b] = k.at(static_cast<S>(a), static_cast<S>(b));
  return v;
}

TwoParticleKet from_vec(const Vec25& v) {
  TwoParticleKet k;
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) k.at(static_cast<S>(a), static_cast<S>(b)) = v[a * 5 + b];
  return k;
}

double max_diff(const TwoParticleKet& x, const TwoParticleKet& y) {
  double d = 0.0;
  const auto a = to_vec(x), b = to_vec(y);
  for (int i = 0; i < 25; ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

TwoParticleKet random_arm_ket(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  TwoParticleKet k;
  for (S a : {S::arm1, S::arm2})
    for (S b : {S::arm1, S::arm2}) k.at(a, b) = Complex{n(rng), n(rng)};
  k *= Complex{1.0 / std::sqrt(k.norm2()), 0.0};
  return k;
}

TwoParticleKet fixture(std::initializer_list<std::tuple<S, S, Complex>> amps, double scale) {
  TwoParticleKet k;
  for (const auto& [a, b, c] : amps) k.at(a, b) = c / scale;
  return k;
}

const auto kInputs = std::vector<DiscreteEvent>{DiscreteEvent::input(Target::A),
                                                DiscreteEvent::input(Target::B)};

}  // namespace

TEST(ModeAlgebra, PostInputSplitterState) {
  const auto k = evolve(kInputs, TwoParticleKet::basis(S::input, S::input)).back();
  const auto want = fixture({{S::arm1, S::arm1, -1.0}, {S::arm1, S::arm2, I},
                             {S::arm2, S::arm1, I}, {S::arm2, S::arm2, 1.0}}, 2.0);
  EXPECT_TRUE(equal_up_to_phase(k, want, 1e-12));
}

TEST(ModeAlgebra, AnnihilationGivesEntangledStateAndSurvival) {
  const auto k = evolve(kInputs, TwoParticleKet::basis(S::input, S::input)).back();
  const auto res = annihilate(k);
  const auto want = fixture({{S::arm1, S::arm1, -1.0}, {S::arm1, S::arm2, I},
                             {S::arm2, S::arm1, I}}, std::sqrt(3.0));
  EXPECT_TRUE(equal_up_to_phase(res.ket, want, 1e-12));
  EXPECT_NEAR(res.survival, 0.75, 1e-12);
  EXPECT_EQ(res.ket.at(S::arm2, S::arm2), Complex(0.0, 0.0));
}

TEST(ModeAlgebra, EqualAmplitudesAnnihilate) {
  TwoParticleKet k;
  for (S a : {S::arm1, S::arm2})
    for (S b : {S::arm1, S::arm2}) k.at(a, b) = 0.5;
  const auto res = annihilate(k);
  EXPECT_NEAR(res.survival, 0.75, 1e-12);
  for (const auto& p : res.ket.support()) EXPECT_NEAR(std::abs(res.ket.at(p)), 1.0 / std::sqrt(3.0), 1e-12);
  EXPECT_EQ(res.ket.support().size(), 3u);
}

TEST(ModeAlgebra, OneSidedOutputStates) {
  auto run = [](Target t) {
    auto s = kInputs;
    s.push_back(DiscreteEvent::annihilation());
    s.push_back(DiscreteEvent::output(t));
    return evolve(s, TwoParticleKet::basis(S::input, S::input)).back();
  };
  const auto a = run(Target::A);
  EXPECT_TRUE(equal_up_to_phase(
      a, fixture({{S::out1, S::arm1, -2.0}, {S::out1, S::arm2, I}, {S::out2, S::arm2, -1.0}},
                 std::sqrt(6.0)),
      1e-12));
  EXPECT_LT(std::abs(a.at(S::out2, S::arm1)), 1e-15);
  const auto b = run(Target::B);
  EXPECT_TRUE(equal_up_to_phase(
      b, fixture({{S::arm1, S::out1, -2.0}, {S::arm2, S::out1, I}, {S::arm2, S::out2, -1.0}},
                 std::sqrt(6.0)),
      1e-12));
  EXPECT_LT(std::abs(b.at(S::arm1, S::out2)), 1e-15);
}

TEST(ModeAlgebra, FinalStateAndBornTable) {
  const auto kets = evolve(standard_schedule(Interaction::annihilate),
                           TwoParticleKet::basis(S::input, S::input));
  const auto want = fixture({{S::out1, S::out1, -3.0}, {S::out1, S::out2, -I},
                             {S::out2, S::out1, -I}, {S::out2, S::out2, -1.0}}, std::sqrt(12.0));
  EXPECT_TRUE(equal_up_to_phase(kets.back(), want, 1e-12));
  const auto born = born_probabilities(kets.back());
  EXPECT_NEAR(born.at({S::out1, S::out1}), 3.0 / 4.0, 1e-12);
  EXPECT_NEAR(born.at({S::out1, S::out2}), 1.0 / 12.0, 1e-12);
  EXPECT_NEAR(born.at({S::out2, S::out1}), 1.0 / 12.0, 1e-12);
  EXPECT_NEAR(born.at({S::out2, S::out2}), 1.0 / 12.0, 1e-12);
}

TEST(ModeAlgebra, WithoutAnnihilationAllExitThroughA1B1) {
  const auto k = evolve(standard_schedule(Interaction::none),
                        TwoParticleKet::basis(S::input, S::input)).back();
  EXPECT_TRUE(equal_up_to_phase(k, TwoParticleKet::basis(S::out1, S::out1, I), 1e-12));
  const auto born = born_probabilities(k);
  ASSERT_EQ(born.size(), 1u);
  EXPECT_NEAR(born.at({S::out1, S::out1}), 1.0, 1e-12);
}

TEST(ModeAlgebra, OutputOrderDoesNotMatter) {
  const auto init = TwoParticleKet::basis(S::input, S::input);
  const auto ab = evolve(standard_schedule(Interaction::annihilate, 0.0, true), init).back();
  const auto ba = evolve(standard_schedule(Interaction::annihilate, 0.0, false), init).back();
  EXPECT_LT(max_diff(ab, ba), 1e-15);
}

TEST(ModeAlgebra, DephaseZeroIsIdentityAndPiIsNotAnnihilation) {
  const auto init = TwoParticleKet::basis(S::input, S::input);
  const auto none = evolve(standard_schedule(Interaction::none), init).back();
  const auto d0 = evolve(standard_schedule(Interaction::dephase, 0.0), init).back();
  EXPECT_LT(max_diff(none, d0), 1e-15);
  const auto dpi = evolve(standard_schedule(Interaction::dephase, std::numbers::pi), init).back();
  EXPECT_NEAR(dpi.norm2(), 1.0, 1e-12);
  EXPECT_GT(max_diff(none, dpi), 0.1);
}

TEST(ModeAlgebra, FixtureTableAllPass) {
  for (const auto& r : check_fixtures()) EXPECT_TRUE(r.pass) << r.name << " " << r.error;
}

TEST(ModeAlgebra, SplitterMatchesKroneckerOracle) {
  // full input splitters on the product input, then both outputs, each
  // compared with the explicit 25x25 construction
  const Mat5 id = identity5(), in = input_splitter5(), out = output_splitter5();
  Vec25 v = to_vec(TwoParticleKet::basis(S::input, S::input));
  v = kron_apply(in, id, v);
  v = kron_apply(id, in, v);
  const auto k = evolve(kInputs, TwoParticleKet::basis(S::input, S::input)).back();
  EXPECT_LT(max_diff(k, from_vec(v)), 1e-15);

  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto r = random_arm_ket(rng);
    const auto got = apply_splitter(r, Target::both, SplitterKind::output);
    const auto want = from_vec(kron_apply(out, out, to_vec(r)));
    EXPECT_LT(max_diff(got, want), 1e-14);
    const auto got_a = apply_splitter(r, Target::A, SplitterKind::output);
    EXPECT_LT(max_diff(got_a, from_vec(kron_apply(out, id, to_vec(r)))), 1e-14);
  }
}

TEST(ModeAlgebra, FourByFourArmOracle) {
  // On span{a1,a2} x span{b1,b2} the two output splitters act as U (x) U with
  // U = [[1, i], [i, 1]] / sqrt2, written out as a 4x4 matrix.
  const double r = 0.5;
  const std::array<std::array<Complex, 4>, 4> M{{{r, I * r, I * r, -r},
                                                 {I * r, r, -r, I * r},
                                                 {I * r, -r, r, I * r},
                                                 {-r, I * r, I * r, r}}};
  const std::array<ModePair, 4> arms{ModePair{S::arm1, S::arm1}, {S::arm1, S::arm2},
                                     {S::arm2, S::arm1}, {S::arm2, S::arm2}};
  const std::array<ModePair, 4> outs{ModePair{S::out1, S::out1}, {S::out1, S::out2},
                                     {S::out2, S::out1}, {S::out2, S::out2}};
  std::mt19937_64 rng(5);
  for (int n = 0; n < 100; ++n) {
    const auto k = random_arm_ket(rng);
    const auto got = apply_splitter(k, Target::both, SplitterKind::output);
    for (int i = 0; i < 4; ++i) {
      Complex want = 0.0;
      for (int j = 0; j < 4; ++j) want += M[i][j] * k.at(arms[j]);
      EXPECT_LT(std::abs(got.at(outs[i]) - want), 1e-14);
    }
  }
}

TEST(ModeAlgebra, RandomKetsUnitarity) {
  std::mt19937_64 rng(2024);
  for (int n = 0; n < 1000; ++n) {
    const auto x = random_arm_ket(rng);
    const auto y = random_arm_ket(rng);
    const auto ux = apply_splitter(x, Target::both, SplitterKind::output);
    const auto uy = apply_splitter(y, Target::both, SplitterKind::output);
    EXPECT_NEAR(ux.norm2(), 1.0, 1e-13);
    EXPECT_LT(std::abs(inner(ux, uy) - inner(x, y)), 1e-13);
    const auto d = dephase(x, 1.234);
    EXPECT_NEAR(d.norm2(), 1.0, 1e-13);
  }
}

TEST(ModeAlgebra, AnnihilationIsIdempotentAndRenormalizes) {
  std::mt19937_64 rng(3);
  for (int n = 0; n < 1000; ++n) {
    const auto x = random_arm_ket(rng);
    const auto once = annihilate(x);
    EXPECT_NEAR(once.ket.norm2(), 1.0, 1e-13);
    EXPECT_NEAR(once.survival, 1.0 - std::norm(x.at(S::arm2, S::arm2)), 1e-13);
    const auto twice = annihilate(once.ket);
    EXPECT_NEAR(twice.survival, 1.0, 1e-13);
    EXPECT_LT(max_diff(once.ket, twice.ket), 1e-14);
  }
}

TEST(ModeAlgebra, Errors) {
  EXPECT_THROW(annihilate(TwoParticleKet::basis(S::arm2, S::arm2)), ZeroSurvival);
  EXPECT_THROW(annihilate(TwoParticleKet::basis(S::input, S::input)), StageMismatch);
  EXPECT_THROW(apply_splitter(TwoParticleKet::basis(S::arm1, S::arm1), Target::A, SplitterKind::input),
               StageMismatch);
  EXPECT_THROW(apply_splitter(TwoParticleKet::basis(S::input, S::input), Target::A,
                              SplitterKind::output),
               StageMismatch);
  EXPECT_THROW(born_probabilities(TwoParticleKet::basis(S::out1, S::out1, 2.0)), NotNormalized);
  EXPECT_THROW(evolve({DiscreteEvent::annihilation()}, TwoParticleKet::basis(S::input, S::input)),
               StageMismatch);
}

TEST(ModeAlgebra, JsonRoundTripAndKeys) {
  const auto k = evolve(standard_schedule(Interaction::annihilate),
                        TwoParticleKet::basis(S::input, S::input)).back();
  EXPECT_EQ(ket_from_json(to_json(k)), k);
  EXPECT_EQ(ModePair::from_key("A2,B1"), (ModePair{S::out2, S::out1}));
  EXPECT_EQ((ModePair{S::arm1, S::arm2}).key(), "a1,b2");
  EXPECT_THROW(ModePair::from_key("a3,b1"), ConfigError);
  EXPECT_THROW(ModePair::from_key("a1b1"), ConfigError);
}

TEST(ModeAlgebra, GlobalPhaseComparison) {
  const auto k = fixture({{S::arm1, S::arm1, -1.0}, {S::arm1, S::arm2, I}}, std::sqrt(2.0));
  auto rotated = k;
  rotated *= std::polar(1.0, 0.7);
  EXPECT_TRUE(equal_up_to_phase(k, rotated, 1e-12));
  auto other = k;
  other.at(S::arm1, S::arm2) *= -1.0;
  EXPECT_FALSE(equal_up_to_phase(k, other, 1e-12));
}
