#include <gtest/gtest.h>

#include <cstring>

#include "hardy/trajectories.hpp"

using namespace hardy;

namespace {

const Layout& layout() {
  static const Layout lay = build_layout(LayoutParams{});
  return lay;
}

const Field& field() {
  static const Field f(layout(), Interaction::annihilate);
  return f;
}

bool same_bits(const Vec4& a, const Vec4& b) { return std::memcmp(a.data(), b.data(), sizeof(a)) == 0; }

ScanPoint synthetic_point(double dl, std::size_t k, std::size_t n) {
  ScanPoint p;
  p.delta_L = dl;
  p.n_a2b2 = n;
  p.n_a1b2 = k;
  if (n > 0) p.fraction_a1b2 = static_cast<double>(k) / static_cast<double>(n);
  return p;
}

}  // namespace

TEST(Trajectories, ClassifyPoint) {
  const auto& lay = layout();
  const double t = lay.t_arm_probe();
  const Vec2 a1 = lay.center({Side::A, Stage::arm1}, t);
  const Vec2 a2 = lay.center({Side::A, Stage::arm2}, t);
  const Vec2 b1 = lay.center({Side::B, Stage::arm1}, t);
  const Vec2 b2 = lay.center({Side::B, Stage::arm2}, t);
  auto c = classify_point(lay, config_point(a1, b2), t, Section::arms, 4.0);
  EXPECT_EQ(c.modes, (ModePair{Stage::arm1, Stage::arm2}));
  EXPECT_FALSE(c.ambiguous);
  c = classify_point(lay, config_point(a2 + Vec2{100.0, 0.0}, b1), t, Section::arms, 4.0);
  EXPECT_EQ(c.modes, (ModePair{Stage::arm2, Stage::arm1}));
  EXPECT_FALSE(c.ambiguous);
  // equidistant from both arm centers of A
  c = classify_point(lay, config_point(0.5 * (a1 + a2), b1), t, Section::arms, 4.0);
  EXPECT_TRUE(c.ambiguous);
  EXPECT_NEAR(c.margin_a, 0.0, 1e-6);

  const double tf = lay.t_final();
  c = classify_point(lay,
                     config_point(lay.center({Side::A, Stage::out2}, tf),
                                  lay.center({Side::B, Stage::out1}, tf)),
                     tf, Section::outputs, 4.0);
  EXPECT_EQ(c.modes, (ModePair{Stage::out2, Stage::out1}));
}

TEST(Trajectories, SamplingMoments) {
  // |phi|^2 at t = 0 is an isotropic Gaussian of variance l^2 / 2 per axis
  const std::size_t n = 100000;
  const auto qs = sample_initial(n, field(), 0.0, 12345);
  const auto& st = field().state_at(0.0);
  const Vec2 ca = st.packet(Side::A).center(0.0), cb = st.packet(Side::B).center(0.0);
  const Vec4 c{ca.x, ca.y, cb.x, cb.y};
  std::array<double, 4> mean{};
  std::array<std::array<double, 4>, 4> cov{};
  for (const auto& q : qs)
    for (int i = 0; i < 4; ++i) mean[i] += (q[i] - c[i]) / static_cast<double>(n);
  for (const auto& q : qs)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        cov[i][j] += (q[i] - c[i] - mean[i]) * (q[j] - c[j] - mean[j]) / static_cast<double>(n - 1);
  const double var = 0.5 * layout().ell() * layout().ell();
  const double sigma = std::sqrt(var);
  const double rn = std::sqrt(static_cast<double>(n));
  for (int i = 0; i < 4; ++i) {
    EXPECT_LT(std::abs(mean[i]), 5.0 * sigma / rn);
    // sample variance has standard error var * sqrt(2 / n), covariances var / sqrt(n)
    EXPECT_LT(std::abs(cov[i][i] - var), 5.0 * var * std::sqrt(2.0) / rn);
    for (int j = i + 1; j < 4; ++j) EXPECT_LT(std::abs(cov[i][j]), 5.0 * var / rn);
  }
}

TEST(Trajectories, SubstreamsAreDeterministicAndIndependentOfOrder) {
  const auto forward = sample_initial(50, field(), 0.0, 7);
  for (std::size_t i = 50; i-- > 0;) {
    EXPECT_TRUE(same_bits(sample_initial_one(field(), 0.0, 7, i), forward[i]));
  }
  EXPECT_FALSE(same_bits(sample_initial_one(field(), 0.0, 8, 0), forward[0]));
  EXPECT_FALSE(same_bits(forward[0], forward[1]));
  EXPECT_THROW(sample_initial_one(field(), field().breakpoints().front() + 1.0, 7, 0),
               IntervalError);
}

TEST(Trajectories, IntegrationIsBitwiseRepeatable) {
  const IntegratorControls ctl;
  const Vec4 q0 = sample_initial_one(field(), 0.0, 3, 0);
  const auto a = integrate(q0, field(), ctl);
  const auto b = integrate(q0, field(), ctl);
  EXPECT_EQ(a.status, b.status);
  EXPECT_TRUE(same_bits(a.last, b.last));
  EXPECT_EQ(a.steps, b.steps);
}

TEST(Trajectories, StepBudgetEndsInNodeAbort) {
  IntegratorControls ctl;
  ctl.max_steps = 10;
  const auto tr = integrate(sample_initial_one(field(), 0.0, 3, 0), field(), ctl);
  EXPECT_EQ(tr.status, TrajectoryStatus::node_abort);
  EXPECT_FALSE(tr.output_class.has_value());
}

TEST(Trajectories, RefinedControls) {
  const IntegratorControls c;
  const auto r = c.refined();
  EXPECT_EQ(r.step_cap, 0.5 * c.step_cap);
  EXPECT_EQ(r.tolerance, 0.5 * c.tolerance);
  EXPECT_EQ(r.node_tolerance, 0.5 * c.node_tolerance);
  EXPECT_EQ(r.max_steps, 2 * c.max_steps);
}

TEST(Trajectories, RecordedSamplesAreOrdered) {
  IntegratorControls ctl;
  ctl.record = true;
  ctl.record_interval = 1.0;
  const auto tr = integrate(sample_initial_one(field(), 0.0, 3, 1), field(), ctl);
  ASSERT_GT(tr.samples.size(), 10u);
  for (std::size_t i = 1; i < tr.samples.size(); ++i) {
    EXPECT_LT(tr.samples[i - 1].t, tr.samples[i].t);
    EXPECT_LE(tr.samples[i - 1].steps, tr.samples[i].steps);
  }
  EXPECT_EQ(tr.samples.front().t, 0.0);

  // recording interpolates inside steps and leaves the path untouched
  const auto plain = integrate(sample_initial_one(field(), 0.0, 3, 1), field(), IntegratorControls{});
  EXPECT_TRUE(same_bits(plain.last, tr.last));
  EXPECT_EQ(plain.steps, tr.steps);
  for (std::size_t i = 1; i < tr.samples.size(); ++i) {
    const auto& a = tr.samples[i - 1];
    const auto& b = tr.samples[i];
    // no jumps beyond what the packet speed allows (plus fringe excursions)
    const double dq = std::hypot(b.q[0] - a.q[0], b.q[1] - a.q[1]);
    EXPECT_LT(dq, 20.0 * layout().speed() * (b.t - a.t) + layout().ell());
  }
}

TEST(Trajectories, WithoutInteractionEveryoneLeavesThroughA1B1) {
  EnsembleOptions opt;
  opt.n = 12;
  opt.seed = 5;
  opt.mode = Interaction::none;
  const auto res = run_ensemble(layout(), opt);
  EXPECT_EQ(res.stats.n_annihilated, 0u);
  EXPECT_EQ(res.stats.n_aborted, 0u);
  EXPECT_EQ(res.stats.count_output({Stage::out1, Stage::out1}), res.stats.n_counted);
  EXPECT_EQ(res.stats.n_counted, 12u);
}

TEST(Trajectories, ThreadCountDoesNotChangeResults) {
  EnsembleOptions opt;
  opt.n = 16;
  opt.seed = 11;
  opt.keep = 3;
  opt.controls.record_interval = 2.0;
  const auto one = run_ensemble(field(), opt);
  opt.jobs = 3;
  const auto three = run_ensemble(field(), opt);
  EXPECT_EQ(to_json(one.stats).dump(), to_json(three.stats).dump());
  ASSERT_EQ(one.kept.size(), three.kept.size());
  for (std::size_t i = 0; i < one.kept.size(); ++i) {
    EXPECT_TRUE(same_bits(one.kept[i].last, three.kept[i].last));
    EXPECT_EQ(one.kept[i].samples.size(), three.kept[i].samples.size());
  }
  for (std::size_t i = 0; i < opt.n; ++i) EXPECT_EQ(one.status[i], three.status[i]);
}

TEST(Trajectories, WilsonHalfWidth) {
  // closed form at k = 0: z sqrt(z^2 / 4n^2) / (1 + z^2 / n) = z^2 / (2n + 2 z^2)
  EXPECT_NEAR(wilson_half_width(0, 10), 9.0 / 38.0, 1e-15);
  EXPECT_NEAR(wilson_half_width(10, 10), 9.0 / 38.0, 1e-15);
  EXPECT_EQ(wilson_half_width(0, 0), 0.0);
  // large n approaches the normal interval
  EXPECT_NEAR(wilson_half_width(500000, 1000000), 3.0 * 0.5 / 1000.0, 1e-8);
}

TEST(Trajectories, TransitionWidthOnSyntheticScan) {
  ScanResult s;
  s.points = {synthetic_point(-2.0, 0, 100), synthetic_point(-1.0, 0, 100),
              synthetic_point(0.0, 50, 100), synthetic_point(1.0, 100, 100),
              synthetic_point(2.0, 100, 100)};
  auto w = transition_width(s);
  ASSERT_TRUE(w.has_value());
  // 0.1 at -0.8, 0.9 at +0.8
  EXPECT_NEAR(*w, 1.6, 1e-12);

  s.points.push_back(synthetic_point(3.0, 0, 0));  // no A2B2 trajectories: skipped
  EXPECT_NEAR(*transition_width(s), 1.6, 1e-12);

  ScanResult flat;
  flat.points = {synthetic_point(-1.0, 0, 10), synthetic_point(1.0, 0, 10)};
  EXPECT_FALSE(transition_width(flat).has_value());
}

TEST(Trajectories, ScanPointCounts) {
  EnsembleStats st;
  const ModePair a2b2{Stage::out2, Stage::out2};
  st.arm_given_output[a2b2][{Stage::arm1, Stage::arm2}] = 7;
  st.arm_given_output[a2b2][{Stage::arm2, Stage::arm1}] = 3;
  st.arm_given_output[{Stage::out1, Stage::out1}][{Stage::arm1, Stage::arm1}] = 90;
  const auto p = make_scan_point(layout(), st);
  EXPECT_EQ(p.n_a2b2, 10u);
  EXPECT_EQ(p.n_a1b2, 7u);
  EXPECT_EQ(p.n_a2b1, 3u);
  EXPECT_NEAR(*p.fraction_a1b2, 0.7, 1e-15);
  EXPECT_NEAR(p.half_width, wilson_half_width(7, 10), 1e-15);
}
