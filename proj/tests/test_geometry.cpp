#include <gtest/gtest.h>

#include <random>

#include "hardy/geometry.hpp"
#include "probes.hpp"

using namespace hardy;

namespace {

LayoutParams defaults(double delta_L_ell = 0.0) {
  return LayoutParams::in_packet_lengths(1500.0, 0.8, 20, 60, 4, 10, 10, delta_L_ell);
}

double interval(const SpacetimeEvent& e) { return e.t * e.t - e.x * e.x; }

void expect_near_vec(Vec2 a, Vec2 b, double tol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
}

}  // namespace

TEST(Geometry, DefaultLayoutBuilds) {
  const Layout lay = build_layout(LayoutParams{});
  EXPECT_DOUBLE_EQ(lay.ell(), 1500.0);
  EXPECT_LE(lay.t_final(), 0.1 * lay.ell() * lay.ell());
  for (Side s : {Side::A, Side::B}) {
    EXPECT_GE(lay.branch_separation(s, Section::arms, lay.t_arm_probe()), 8.0 * lay.ell());
    EXPECT_GE(lay.branch_separation(s, Section::outputs, lay.t_final()), 8.0 * lay.ell());
    // both arms have the same optical length
    EXPECT_NEAR(lay.path({s, Stage::arm1}).length(), lay.path({s, Stage::arm2}).length(), 1e-9);
  }
}

TEST(Geometry, BoundsViolationsThrow) {
  auto bad = [](auto mutate) {
    LayoutParams p;
    mutate(p);
    EXPECT_THROW(build_layout(p), ConfigError);
  };
  bad([](LayoutParams& p) { p.wavenumber = 0.01; });          // k l < 50
  bad([](LayoutParams& p) { p.arm_separation = 7.0 * p.packet_length; });
  bad([](LayoutParams& p) { p.arm_length = 3.0 * p.packet_length; });
  bad([](LayoutParams& p) { p.gap = 0.0; });
  bad([](LayoutParams& p) { p.scatter_window = 5.0 * p.packet_length; });
  bad([](LayoutParams& p) { p.lead = 1e9; });                  // flight time vs spreading
  bad([](LayoutParams& p) { p.delta_L = std::nan(""); });
  bad([](LayoutParams& p) { p.packet_length = -1.0; });
  bad([](LayoutParams& p) { p.min_branch_separation = 1e6; });
}

TEST(Geometry, ScheduleOrder) {
  const Layout lay = build_layout(defaults());
  const auto s = event_schedule(lay, Interaction::annihilate);
  ASSERT_EQ(s.events.size(), 5u);
  EXPECT_EQ(s.events[0].t, s.events[1].t);
  EXPECT_EQ(s.events[2].event.kind, DiscreteEvent::Kind::annihilate);
  EXPECT_GT(s.events[2].t, s.events[0].t);
  EXPECT_LT(s.events[2].t, s.events[3].t);
  EXPECT_EQ(s.events[3].t, s.events[4].t);  // symmetric layout: outputs tie
  EXPECT_EQ(event_schedule(lay, Interaction::none).events.size(), 4u);
  EXPECT_EQ(event_schedule(lay, Interaction::dephase, 0.3).events[2].event.phi, 0.3);
}

TEST(Geometry, ArmExtensionDelaysOutput) {
  const Layout plus = build_layout(defaults(10.0));
  const auto s = event_schedule(plus);
  EXPECT_EQ(s.events[3].event.target, Target::A);
  EXPECT_EQ(s.events[4].event.target, Target::B);
  EXPECT_NEAR(plus.t_output(Side::B) - plus.t_output(Side::A), 10.0 * 1500.0 / 0.8, 1e-6);

  const Layout minus = build_layout(defaults(-10.0));
  const auto m = event_schedule(minus);
  EXPECT_EQ(m.events[3].event.target, Target::B);
  EXPECT_NEAR(minus.t_output(Side::A) - minus.t_output(Side::B), 10.0 * 1500.0 / 0.8, 1e-6);
}

TEST(Geometry, PacketCentersFollowPaths) {
  const Layout lay = build_layout(defaults());
  for (Side s : {Side::A, Side::B}) {
    expect_near_vec(lay.center({s, Stage::arm1}, lay.t_input()), lay.splitter(s, SplitterKind::input),
                    1e-9);
    expect_near_vec(lay.center({s, Stage::arm2}, lay.t_output(s)),
                    lay.splitter(s, SplitterKind::output), 1e-9);
  }
  // inner arms run side by side, gap apart, through the interaction time
  const double t = lay.t_interaction();
  const Vec2 a2 = lay.center({Side::A, Stage::arm2}, t);
  const Vec2 b2 = lay.center({Side::B, Stage::arm2}, t);
  EXPECT_NEAR((a2 - b2).norm(), 4.0 * lay.ell(), 1e-9);
}

TEST(Geometry, ArmRoutesGiveTheSameOutputMap) {
  // Unfolding the out1 ray back to the emitter line through arm 1 (input
  // splitter, mirror 1) or through arm 2 (mirror 2, output splitter) must
  // give the same isometry.
  for (double dl : {0.0, 10.0, -10.0}) {
    const Layout lay = build_layout(defaults(dl));
    for (Side s : {Side::A, Side::B}) {
      const auto e1 = lay.elements({s, Stage::arm1});  // input splitter, mirror 1, output splitter
      const auto e2 = lay.elements({s, Stage::arm2});  // input splitter, mirror 2, output splitter
      ASSERT_EQ(e1.size(), 3u);
      ASSERT_EQ(e2.size(), 3u);
      EXPECT_TRUE(e1[0].reflects);
      EXPECT_FALSE(e2[0].reflects);
      auto refl = [](const OpticalElement& e) { return Isometry::reflection(e.point, e.axis); };
      const Isometry via1 = refl(e1[0]).then_after(refl(e1[1]));
      const Isometry via2 = refl(e2[1]).then_after(refl(e2[2]));
      for (int i = 0; i < 4; ++i) EXPECT_NEAR(via1.q[i], via2.q[i], 1e-12);
      expect_near_vec(via1.b, via2.b, 1e-12 * lay.t_final());
      // and it maps the out1 packet center onto the free-flight center
      const double t = lay.t_final();
      const Vec2 free = lay.path({s, Stage::input}).vertices().front() + Vec2{lay.speed() * t, 0.0};
      expect_near_vec(via1(lay.center({s, Stage::out1}, t)), free, 1e-9 * lay.t_final());
    }
  }
}

TEST(Geometry, LorentzIntervalInvariance) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1e5, 1e5), vel(-0.99, 0.99);
  for (int i = 0; i < 1000; ++i) {
    const SpacetimeEvent e{u(rng), u(rng)};
    const double v = vel(rng);
    const auto b = boost_event(e, v);
    const double scale = e.t * e.t + e.x * e.x;
    EXPECT_NEAR(interval(b), interval(e), 1e-12 * scale * lorentz_gamma(v) * lorentz_gamma(v));
  }
}

TEST(Geometry, LorentzComposition) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1e5, 1e5), vel(-0.5, 0.5);
  for (int i = 0; i < 1000; ++i) {
    const SpacetimeEvent e{u(rng), u(rng)};
    const double v1 = vel(rng), v2 = vel(rng);
    const auto twice = boost_event(boost_event(e, v1), v2);
    const auto once = boost_event(e, (v1 + v2) / (1.0 + v1 * v2));
    const double scale = std::abs(e.t) + std::abs(e.x);
    EXPECT_NEAR(twice.t, once.t, 1e-12 * scale);
    EXPECT_NEAR(twice.x, once.x, 1e-12 * scale);
    const auto back = boost_event(boost_event(e, v1), -v1);
    EXPECT_NEAR(back.t, e.t, 1e-12 * scale);
    EXPECT_NEAR(back.x, e.x, 1e-12 * scale);
  }
  const SpacetimeEvent e{3.0, 1.0};
  const auto id = boost_event(e, 0.0);
  EXPECT_EQ(id.t, e.t);
  EXPECT_EQ(id.x, e.x);
}

TEST(Geometry, SuperluminalBoostThrows) {
  EXPECT_THROW(lorentz_gamma(1.0), SuperluminalBoost);
  EXPECT_THROW(lorentz_gamma(-1.5), SuperluminalBoost);
  EXPECT_THROW(lorentz_gamma(std::nan("")), SuperluminalBoost);
  EXPECT_THROW(boost_event({0.0, 0.0}, 2.0), SuperluminalBoost);
  EXPECT_NEAR(lorentz_gamma(0.6), 1.25, 1e-15);
}

TEST(Geometry, CrossingOrderFlipsWithVelocity) {
  const Layout lay = build_layout(defaults());
  EXPECT_EQ(crossing_order(lay, 0.0).order, CrossingOrder::simultaneous);
  for (double v : {0.01, 0.05, 0.1, 0.5}) {
    const auto p = crossing_order(lay, v);
    const auto m = crossing_order(lay, -v);
    EXPECT_EQ(p.order, CrossingOrder::A_first);
    EXPECT_EQ(m.order, CrossingOrder::B_first);
    EXPECT_NEAR(p.delay, -m.delay, 1e-9 * std::abs(p.delay));
    // the delay is -gamma v dx for simultaneous lab events
    const auto [ea, eb] = output_events(lay);
    EXPECT_NEAR(p.delay, -lorentz_gamma(v) * v * (eb.x - ea.x), 1e-9 * std::abs(p.delay));
  }
  EXPECT_THROW(crossing_order(build_layout(defaults(1.0)), 0.1), ConfigError);
}

TEST(Geometry, EffectiveLayoutSign) {
  const Layout lay = build_layout(defaults());
  for (double v : {-0.1, -0.05, 0.05, 0.1}) {
    const Layout eff = effective_layout(lay, v);
    EXPECT_EQ(eff.params().delta_L > 0.0, v > 0.0);
    EXPECT_NEAR(eff.params().delta_L, lay.speed() * crossing_order(lay, v).delay, 1e-9);
    // B's output crossing is later exactly when v > 0
    EXPECT_EQ(eff.t_output(Side::B) > eff.t_output(Side::A), v > 0.0);
  }
  EXPECT_THROW(effective_layout(lay, 1.2), SuperluminalBoost);
}

TEST(Geometry, WindowEdgesAndMirrors) {
  const Layout lay = build_layout(defaults());
  const auto edges = lay.window_edges();
  EXPECT_TRUE(std::is_sorted(edges.begin(), edges.end()));
  EXPECT_EQ(std::adjacent_find(edges.begin(), edges.end()), edges.end());
  const double w = lay.window() / lay.speed();
  EXPECT_NEAR(edges.front(), lay.t_input() - w, 1e-9);
  // the annihilation time sits clear of every window
  for (double e : edges) EXPECT_GT(std::abs(e - lay.t_interaction()), 0.0);
  for (double t : lay.mirror_times()) {
    EXPECT_GT(t, lay.t_input());
    EXPECT_LT(t, lay.t_output(Side::A));
  }
}

TEST(Geometry, BoostIdentitiesOnRandomEvents) {
  const auto e = probes::boost_errors(10000, 31);
  EXPECT_LE(e.interval, 1e-12);
  EXPECT_LE(e.composition, 1e-12);
  EXPECT_LE(e.inverse, 1e-12);
}
