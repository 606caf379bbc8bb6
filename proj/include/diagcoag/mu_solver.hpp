#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "diagcoag/params.hpp"

namespace diagcoag {

/// F(mu) = (1 - 2^(gamma-1-mu)) / (1 - theta). Increasing from F(0) = 1 to
/// 1/(1-theta).
inline double F_of(const KernelParams& kernel, double mu_arg) {
  // -expm1 keeps the numerator accurate when gamma-1-mu is close to 0.
  const double num = -std::expm1((kernel.gamma - 1.0 - mu_arg) * M_LN2);
  return num / (1.0 - kernel.theta);
}

inline double F_of(const SimilarityParams& params, double mu_arg) {
  return F_of(params.kernel, mu_arg);
}

/// dF/dmu.
inline double F_prime(const KernelParams& kernel, double mu_arg) {
  return M_LN2 * std::exp2(kernel.gamma - 1.0 - mu_arg) / (1.0 - kernel.theta);
}

/// G(mu) = (1 + beta mu)/2 - F(mu); its positive root is the bifurcation
/// exponent.
inline double G_of(const KernelParams& kernel, double beta, double mu_arg) {
  return 0.5 * (1.0 + beta * mu_arg) - F_of(kernel, mu_arg);
}

struct MuSolveReport {
  double mu = 0.0;
  double residual = 0.0;
  int iterations = 0;
  std::pair<double, double> bracket{0.0, 0.0};
  /// G at the bracket midpoint minus the chord value there; <= 0 for convex G.
  double convexity_sample = 0.0;
  bool degenerate = false;
};

namespace detail {
inline constexpr double kMuResidualTol = 1e-13;
inline constexpr double kMuBisectionWidth = 1e-6;
}  // namespace detail

/// Unique positive root of (1 + beta mu)/2 = F(mu).
///
/// G(0) = -1/2 for every admissible input and G grows linearly for large mu,
/// so the bracket [0, 2^k] is found by doubling. Bisection narrows it to
/// width 1e-6, then safeguarded Newton steps polish the residual to 1e-13.
inline MuSolveReport solve_mu(double gamma, double beta) {
  const KernelParams kernel = make_kernel(gamma);
  const double beta_star = beta_star_of(gamma);
  if (!(beta > 0.0) || beta < beta_star) {
    throw DomainError("beta must be >= beta_star = " + std::to_string(beta_star) +
                      " (got " + std::to_string(beta) + ")");
  }
  auto G = [&](double m) { return G_of(kernel, beta, m); };

  MuSolveReport report;
  report.degenerate = (beta == beta_star);

  double lo = 0.0;
  double hi = 1.0;
  int doublings = 0;
  while (G(hi) <= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 1100 || !std::isfinite(hi)) {
      std::ostringstream msg;
      msg << "solve_mu: bracket failure for gamma=" << gamma << " beta=" << beta
          << " (G(" << hi << ") = " << G(hi) << ")";
      throw Error(msg.str());
    }
  }
  report.bracket = {lo, hi};
  {
    const double mid = 0.5 * (lo + hi);
    report.convexity_sample = G(mid) - 0.5 * (G(lo) + G(hi));
  }

  int iter = 0;
  while (hi - lo > detail::kMuBisectionWidth) {
    const double mid = 0.5 * (lo + hi);
    (G(mid) < 0.0 ? lo : hi) = mid;
    ++iter;
  }

  double mu = 0.5 * (lo + hi);
  for (int k = 0; k < 50; ++k) {
    const double g = G(mu);
    if (std::abs(g) <= 0.25 * detail::kMuResidualTol) break;
    const double dg = 0.5 * beta - F_prime(kernel, mu);
    double next = mu - g / dg;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    (G(next) < 0.0 ? lo : hi) = next;
    mu = next;
    ++iter;
  }
  report.mu = mu;
  report.residual = std::abs(G(mu));
  report.iterations = iter;
  return report;
}

}  // namespace diagcoag
