#include <gtest/gtest.h>

#include <cmath>

#include "diagcoag/pipeline.hpp"

using namespace diagcoag;

TEST(ProfileIntegrator, RhsAtConstantSolution) {
  const auto p = make_params(0.5, 4.0);
  const double A = p.stationary_value();
  EXPECT_EQ(rhs(3.0, A, A, p), 0.0);
  // Generic point: -beta x h' = theta hd^2 - h^2 + h.
  const double x = 2.0, h = 0.7, hd = 1.1;
  EXPECT_NEAR(-p.beta * x * rhs(x, h, hd, p), p.theta() * hd * hd - h * h + h, 1e-14);
}

TEST(ProfileIntegrator, ConstantSeedStaysConstant) {
  const auto p = make_params(-1.0, 1.5);
  ProfileOptions o;
  o.c = 0.0;
  const auto run = build_profile(p, o);
  const double A = p.stationary_value();
  EXPECT_GE(std::log10(run.profile.x_max() / run.profile.x_min()), 12.0);
  for (double v : run.profile.h) EXPECT_NEAR(v, A, 1e-10 * A);
}

TEST(ProfileIntegrator, MonotoneAndPositive) {
  for (auto [g, b] : {std::pair{0.0, 2.0}, {-1.0, 0.75}, {0.5, 12.0}}) {
    const auto p = make_params(g, b);
    const auto run = build_profile(p);
    const Profile& pr = run.raw;
    const double A = p.stationary_value();
    for (std::size_t k = 0; k < pr.size(); ++k) {
      ASSERT_GT(pr.h[k], 0.0);
      ASSERT_LT(pr.dev[k], 0.0);
      ASSERT_LE(pr.h[k], A);
      // Near x = 0 the decrease is resolved by h - A, far out by h itself.
      if (k > 0) ASSERT_TRUE(pr.h[k] < pr.h[k - 1] || pr.dev[k] < pr.dev[k - 1]) << pr.x[k];
    }
  }
}

TEST(ProfileIntegrator, SatisfiesDelayEquationAtNodes) {
  // Fourth-order centred difference of the stored h against the equation,
  // away from the seed.
  const auto p = make_params(0.0, 2.0);
  const auto run = build_profile(p, {});
  const Profile& pr = run.raw;
  const auto m = static_cast<std::size_t>(pr.m);
  for (std::size_t k = pr.size() / 2; k + 2 < pr.size(); k += 211) {
    const double slope =
        (-pr.h[k + 2] + 8.0 * pr.h[k + 1] - 8.0 * pr.h[k - 1] + pr.h[k - 2]) / (12.0 * pr.dtau);
    const double expect = pr.x[k] * rhs(pr.x[k], pr.h[k], pr.h[k - m], p);
    EXPECT_NEAR(slope, expect, 1e-7 * std::abs(expect) + 1e-14);
  }
}

TEST(ProfileIntegrator, FourthOrderConvergence) {
  // h at a fixed raw x for m = 32, 64, 128 (same z and x_max).
  const auto p = make_params(0.0, 2.0);
  auto h_end = [&](int m) {
    ProfileOptions o;
    o.m = m;
    o.z = 0.125;
    o.x_max = std::ldexp(0.125, 40);
    o.normalize = false;
    return build_profile(p, o).raw.h.back();
  };
  const double a = h_end(32), b = h_end(64), c = h_end(128);
  const double ratio = (a - b) / (b - c);
  EXPECT_GT(ratio, 16.0 / std::sqrt(2.0));
  EXPECT_LT(ratio, 16.0 * std::sqrt(2.0));
}

TEST(ProfileIntegrator, NormalizationAndRescale) {
  const auto p = make_params(0.0, 2.0);
  const auto run = build_profile(p);
  EXPECT_TRUE(run.profile.normalized);
  EXPECT_NEAR(run.profile.value(1.0), 0.5, 1e-12);
  // rescale moves the grid, not the values.
  const Profile r = rescale(run.raw, 3.0);
  EXPECT_NEAR(r.value(2.0), run.raw.value(6.0), 1e-12);
  EXPECT_NEAR(r.derivative(2.0), 3.0 * run.raw.derivative(6.0), 1e-9 * std::abs(r.derivative(2.0)));
  // Normalization removes the amplitude c: c and 2^mu c give the same profile.
  ProfileOptions o;
  o.c = std::pow(2.0, p.mu);
  const auto run2 = build_profile(p, o);
  for (double x : {0.01, 0.5, 1.0, 10.0, 1e3}) {
    EXPECT_NEAR(run2.profile.value(x), run.profile.value(x), 1e-9 * run.profile.value(x)) << x;
  }
}

TEST(ProfileIntegrator, Errors) {
  const auto p = make_params(0.0, 2.0);
  const auto run = build_profile(p);
  EXPECT_THROW(integrate(run.raw, run.raw.z), DomainError);
  EXPECT_THROW(run.raw.value(run.raw.x_max() * 2.0), RangeError);
  Profile shortseed = run.raw;
  shortseed.h.resize(10);
  shortseed.dh.resize(10);
  shortseed.x.resize(10);
  shortseed.dev.resize(10);
  shortseed.p.resize(10);
  EXPECT_THROW(integrate(shortseed, 1e6), DomainError);
  ProfileOptions o;
  o.c = -1.0;
  EXPECT_THROW(build_profile(p, o), DomainError);
  EXPECT_THROW(half_point(build_profile(p, ProfileOptions{.c = 0.0}).profile), RangeError);
}
