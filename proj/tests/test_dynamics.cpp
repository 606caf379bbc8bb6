#include <gtest/gtest.h>

#include <cmath>

#include "diagcoag/dynamics.hpp"
#include "diagcoag/pipeline.hpp"

using namespace diagcoag;

TEST(Dynamics, GridHalvesExactly) {
  const auto f = make_field(make_kernel(0.0), 0.37, 16, 10);
  EXPECT_EQ(f.size(), 161u);
  for (std::size_t k = 16; k < f.size(); ++k) EXPECT_EQ(f.xi[k], 2.0 * f.xi[k - 16]);
}

TEST(Dynamics, StationaryPowerLaw) {
  for (double g : {-1.0, 0.0, 0.5}) {
    auto f = make_field(make_kernel(g), std::ldexp(1.0, -20));
    set_power_law(f, 2.0, 0.5 * (3.0 + g));
    const auto r = coag_rhs(f);
    for (std::size_t k = 16; k < f.size(); ++k) {
      const double scale = std::pow(f.xi[k], 1.0 + g) * f.f[k] * f.f[k];
      EXPECT_LE(std::abs(r[k]) / scale, 1e-12);
    }
    // One step leaves the interior unchanged. The missing influx below the
    // grid reaches one octave further per RK4 stage, so skip four more.
    const auto s = step(f, 0.5 * stable_dt(f));
    for (std::size_t k = 5 * 16; k < f.size(); ++k) {
      EXPECT_NEAR(s.f[k], f.f[k], 1e-10 * f.f[k]);
    }
  }
}

TEST(Dynamics, ZeroFieldIsStationary) {
  auto f = make_field(make_kernel(0.0), 1.0, 4, 5);
  for (double v : coag_rhs(f)) EXPECT_EQ(v, 0.0);
  const auto s = step(f, 0.3);
  for (double v : s.f) EXPECT_EQ(v, 0.0);
  const auto m = moments(f);
  EXPECT_EQ(m.number, 0.0);
  EXPECT_EQ(m.mass, 0.0);
}

TEST(Dynamics, SingleNodeMovesUpOneOctave) {
  auto f = make_field(make_kernel(0.0), 1.0, 4, 5);
  set_pulse(f, 6, 2.0);
  const auto r = coag_rhs(f);
  const double xi = f.xi[6];
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (k == 6) {
      EXPECT_DOUBLE_EQ(r[k], -xi * 4.0);
    } else if (k == 10) {
      EXPECT_DOUBLE_EQ(r[k], 0.25 * (xi) * 4.0);  // (1/4)(xi_10/2)^(1+gamma) f_6^2
    } else {
      EXPECT_EQ(r[k], 0.0);
    }
  }
}

TEST(Dynamics, EulerOracleOnThreeNodes) {
  // m_d = 1, nodes 1, 2, 4, gamma = 0. With f = (1, 0, 0) and dt = 0.01:
  // RK4 agrees with the hand-computed Taylor series of the 3-node system to O(dt^5).
  auto f = make_field(make_kernel(0.0), 1.0, 1, 2);
  set_pulse(f, 0, 1.0);
  const double dt = 0.01;
  const auto s = step(f, dt);
  // f0' = -f0^2  ->  f0 = 1/(1+t).
  EXPECT_NEAR(s.f[0], 1.0 / (1.0 + dt), 1e-11);
  // f1' = (1/4) * 1 * f0^2 - 2 f1^2, so f1 = dt/4 - dt^2/4 + O(dt^3).
  EXPECT_NEAR(s.f[1], 0.25 * dt - 0.25 * dt * dt, 1e-6);
  // Cascade: mass reaches node 2 only at O(dt^3).
  EXPECT_GT(s.f[2], 0.0);
  EXPECT_LT(s.f[2], 1e-6);
}

TEST(Dynamics, MassBalanceAndNumberDecrease) {
  auto f = make_field(make_kernel(0.5), std::ldexp(1.0, -10), 16, 12);
  set_pulse(f, 8 * 16, 3.0);
  const auto m0 = moments(f);
  double prev_n = m0.number;
  double t0 = f.t;
  for (int i = 0; i < 40; ++i) {
    f = step(f, stable_dt(f));
    const auto m = moments(f);
    EXPECT_LE(m.number, prev_n);
    prev_n = m.number;
  }
  const auto m = moments(f);
  EXPECT_LE(std::abs(m.mass + f.outflow - m0.mass) / (m0.mass * (f.t - t0)), 1e-8);
}

TEST(Dynamics, StepRejectsNegativeAndCollapses) {
  auto f = make_field(make_kernel(0.0), 1.0, 4, 5);
  set_pulse(f, 6, 1.0);
  StepInfo info;
  const auto s = step(f, 1e3, &info);  // far above the stability limit
  EXPECT_GT(info.halvings, 0);
  for (double v : s.f) EXPECT_GE(v, 0.0);
  EXPECT_THROW(step(f, -1.0), DomainError);
  set_pulse(f, 6, 1e300);
  EXPECT_THROW(step(f, 1e300), StepCollapse);
}

TEST(Dynamics, ProfileSeededCollapse) {
  const auto p = make_params(0.0, 2.0);
  const auto run = build_profile(p);
  auto f = make_field(p.kernel, std::ldexp(1.0, -20));
  set_from_profile(f, run.profile);
  const auto rep = track_collapse(f, run.profile, p.beta, geometric_times(1.0, 4.0, 6));
  EXPECT_LT(rep.distances.front(), 1e-12);
  EXPECT_LT(rep.max_distance(), 0.05);
  for (double d : rep.distances) EXPECT_GE(d, 0.0);
  EXPECT_DOUBLE_EQ(rep.times.back(), 4.0);
}

TEST(Dynamics, ConstantProfileIsExactlySelfSimilar) {
  const auto p = make_params(-1.0, 1.5);
  ProfileOptions o;
  o.c = 0.0;
  const auto run = build_profile(p, o);
  auto f = make_field(p.kernel, std::ldexp(1.0, -20));
  set_from_profile(f, run.profile);
  const auto rep = track_collapse(f, run.profile, p.beta, geometric_times(1.0, 4.0, 4));
  EXPECT_LT(rep.max_distance(), 1e-6);
}

TEST(Dynamics, WindowErrors) {
  const auto p = make_params(0.0, 2.0);
  const auto run = build_profile(p);
  auto f = make_field(p.kernel, 1.0, 16, 4);
  set_from_profile(f, run.profile);
  EXPECT_THROW(self_similar_distance(f, run.profile, 2.0, {1e-3, 1.0}), RangeError);
  f.t = 0.5;
  EXPECT_THROW(self_similar_distance(f, run.profile, 2.0, {2.0, 4.0}), DomainError);
}
