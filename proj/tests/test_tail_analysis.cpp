#include <gtest/gtest.h>

#include <cmath>

#include "diagcoag/pipeline.hpp"
#include "diagcoag/tail_analysis.hpp"

using namespace diagcoag;

namespace {

const ProfileRun& reference() {
  static const ProfileRun run = build_profile(make_params(0.0, 2.0));
  return run;
}

}  // namespace

TEST(TailAnalysis, FitSlopeOnExactPowerLaw) {
  Profile pr;
  pr.params = make_params(0.0, 2.0);
  pr.m = 16;
  pr.dtau = M_LN2 / 16;
  pr.tau0 = 0.0;
  for (int k = 0; k <= 16 * 30; ++k) {
    pr.h.push_back(std::exp(-0.5 * pr.tau(k)));
  }
  pr.sync_nodes();
  EXPECT_NEAR(fit_slope(pr, 1.0, pr.x_max()), -0.5, 1e-12);
  EXPECT_THROW(fit_slope(pr, 0.5, pr.x_max()), DomainError);
  EXPECT_THROW(fit_slope(pr, 1.0, 50.0), DomainError);
}

TEST(TailAnalysis, PhiMatchesIndependentQuadrature) {
  // Phi(x) = int_0^x h(s) ds for gamma = 0, by a fine trapezoid in log s
  // on the interpolant plus the exact integral below x_min.
  const Profile& pr = reference().profile;
  const double A = pr.params.stationary_value();
  for (double x : {0.1, 1.0, 30.0}) {
    const double lo = pr.x_min();
    double sum = A * lo + pr.dev.front() * lo / (1.0 + pr.params.mu);
    const int n = 200000;
    const double L = std::log(x / lo);
    for (int i = 0; i <= n; ++i) {
      const double s = lo * std::exp(L * i / n);
      const double w = (i == 0 || i == n) ? 0.5 : 1.0;
      sum += w * (L / n) * s * pr.value(s);
    }
    EXPECT_NEAR(phi_of(pr, x), sum, 1e-8 * sum) << x;
  }
}

TEST(TailAnalysis, ReferenceBoundsHold) {
  const auto rep = analyze_tail(reference().profile);
  EXPECT_TRUE(rep.upper_bound_ok);
  EXPECT_TRUE(rep.lower_bound_ok);
  EXPECT_TRUE(rep.lower_literal_ok);  // e = 1 here, so both forms coincide
  EXPECT_TRUE(rep.hineq_ok);
  EXPECT_TRUE(rep.cauchy_ok());
  EXPECT_TRUE(rep.d_in_range());
  EXPECT_TRUE(rep.slope_ok(2.0));
  EXPECT_NEAR(rep.slope_fit, -0.5, 0.005);
  EXPECT_LE(rep.max_integral_residual, 1e-6);
  EXPECT_LE(rep.derivative_bound_ratio, 1.0);
  EXPECT_NEAR(rep.d_lower, rep.c0 / 2.0, 1e-15);
}

TEST(TailAnalysis, DCauchyEnvelope) {
  const Profile& pr = reference().profile;
  const auto d = estimate_d(pr);
  const auto p = p_of(pr);
  // Every p(x) with x >= x0 stays inside d +- 2 x0^(-1/beta).
  for (std::size_t k = 0; k < pr.size(); k += 500) {
    if (pr.x[k] < 2.0) continue;
    EXPECT_LE(std::abs(p[k] - d.d_estimate), 2.0 * std::pow(pr.x[k], -0.5) * (1 + 1e-9));
  }
  EXPECT_TRUE(d.converged);
}

TEST(TailAnalysis, LowerBoundNeedsExcessFactor) {
  // gamma = -1, beta = 0.6: e = (1-gamma)(beta - beta_star) = 0.2. The
  // bound with the factor holds; without it h drops below it in the tail.
  const auto run = build_profile(make_params(-1.0, 0.6));
  const auto b = check_bounds(run.profile);
  EXPECT_TRUE(b.lower_ok);
  EXPECT_GT(b.lower_margin, 0.0);
  EXPECT_FALSE(b.lower_literal_ok);
  EXPECT_LT(b.lower_literal_margin, -1.0);
  const auto rep = analyze_tail(run.profile);
  EXPECT_TRUE(rep.d_in_range());
  EXPECT_FALSE(rep.d_in_literal_range());
}

TEST(TailAnalysis, ResidualFlagsCorruption) {
  Profile pr = reference().profile;
  const auto samples = nodes_in(pr, 1e-4, 1e4);
  EXPECT_LE(integral_residual(pr, samples), 1e-6);
  std::size_t k = 0;
  while (pr.x[k] < 10.0) ++k;
  pr.h[k] *= 1.001;
  EXPECT_GT(integral_residual(pr, samples), 1e-5);
}

TEST(TailAnalysis, Preconditions) {
  EXPECT_THROW(analyze_tail(reference().raw), PreconditionError);
  ProfileOptions o;
  o.c = 0.0;
  EXPECT_THROW(analyze_tail(build_profile(make_params(0.0, 2.0), o).profile),
               PreconditionError);
}

TEST(TailAnalysis, DegenerateSkipsIntegralChain) {
  const auto run = build_profile(make_params(0.0, 1.0));
  const auto rep = analyze_tail(run.profile);
  EXPECT_TRUE(rep.hineq_skipped);
  EXPECT_TRUE(rep.upper_bound_ok);
  EXPECT_LE(rep.max_integral_residual, 1e-6);
  EXPECT_LT(rep.residual_hi_used, 1e4);
}

TEST(TailAnalysis, JsonReport) {
  const auto j = to_json(analyze_tail(reference().profile));
  for (const char* key : {"d_estimate", "d_error_bound", "c0", "slope_fit", "rho_check",
                          "cauchy_max_violation", "upper_bound_ok", "lower_bound_ok",
                          "hineq_ok", "max_integral_residual"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_NEAR(j.at("rho_check").get<double>(), 0.5, 0.005);
}
