#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "diagcoag/errors.hpp"
#include "diagcoag/log_grid.hpp"
#include "diagcoag/params.hpp"
#include "diagcoag/profile.hpp"

namespace diagcoag {

namespace detail {

/// dh/dtau = (h^2 - theta h(x/2)^2 - h)/beta written in terms of h and the
/// deviation dev = h - A:
///   h^2 - theta hd^2 - h = (1-theta) h dev + theta (dev - dev_d)(h + hd).
/// The constant solution is stationary in floating point and the small-x
/// approach to A is not lost to cancellation.
inline double rate_tau(double h, double dev, double h_half, double dev_half,
                       const SimilarityParams& p) {
  const double theta = p.theta();
  return ((1.0 - theta) * h * dev + theta * (dev - dev_half) * (h + h_half)) / p.beta;
}

inline double rate_tau(double h, double h_half, const SimilarityParams& p) {
  const double A = p.stationary_value();
  return rate_tau(h, h - A, h_half, h_half - A, p);
}

/// Tail form: q(s) = e^(s/beta) h(tau_n + s) removes the linear decay -h/beta,
///   dq/ds = e^(s/beta) (h^2 - theta h_d^2) / beta,  h = e^(-s/beta) q,
/// so the stepping error no longer accumulates along x^(-1/beta).
inline double rate_q(double s, double q, double h_half, const SimilarityParams& p) {
  const double grow = std::exp(s / p.beta);
  const double h = q / grow;
  return grow * (h * h - p.theta() * h_half * h_half) / p.beta;
}

}  // namespace detail

/// h'(x) from  -beta x h' - h = theta h(x/2)^2 - h(x)^2.
inline double rhs(double x, double h_at_x, double h_at_half, const SimilarityParams& params) {
  return detail::rate_tau(h_at_x, h_at_half, params) / x;
}

/// Continues `seed` from its last node to x_max with classical RK4 in
/// tau = log x (method of steps). Full-step delays land exactly on stored
/// nodes (m nodes per octave); half-step delays use cubic Hermite
/// interpolation of (h, dh/dtau) on the delayed cell.
///
/// Once h < A/2 the step is taken on the integrating-factor form
/// (see detail::rate_q), which keeps p = x^(1/beta) h accurate far out.
///
/// For non-constant seeds every accepted node must satisfy 0 < h < A,
/// h < previous h and h' < 0; otherwise InvariantViolation is thrown with
/// the offending x.
inline Profile integrate(const Profile& seed, double x_max) {
  const int m = seed.m;
  const auto mz = static_cast<std::size_t>(m);
  if (seed.size() < mz + 1) {
    throw DomainError("integrate: seed shorter than one octave cannot serve delays");
  }
  if (!(x_max >= 4.0 * seed.z)) throw DomainError("integrate: need x_max >= 4 z");

  const SimilarityParams& params = seed.params;
  const double A = params.stationary_value();
  const double dt = seed.dtau;
  const bool check = !seed.is_constant();

  Profile out = seed;
  out.complete_derived();
  const double tau_end = std::log(x_max);
  const auto extra = static_cast<std::size_t>(
      std::max(0.0, std::ceil((tau_end - out.tau(out.size() - 1)) / dt - 1e-9)));
  out.h.reserve(out.size() + extra);
  out.dh.reserve(out.size() + extra);
  out.dev.reserve(out.size() + extra);
  out.p.reserve(out.size() + extra);
  out.x.reserve(out.size() + extra);

  // dh/dtau kept alongside for the interpolation of delayed values.
  std::vector<double> slope(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) slope[k] = out.slope_tau(k);
  slope.reserve(out.size() + extra);

  for (std::size_t step = 0; step < extra; ++step) {
    const std::size_t n = out.size() - 1;
    const std::size_t d = n - mz;  // node at x_n / 2
    const double hn = out.h[n];
    const double vn = out.dev[n];
    const double h0 = out.h[d];
    const double v0 = out.dev[d];
    const double h1 = out.h[d + 1];
    const double v1 = out.dev[d + 1];
    const double hm = hermite(0.5 * dt, dt, h0, h1, slope[d], slope[d + 1]);
    const double vm = hermite(0.5 * dt, dt, v0, v1, slope[d], slope[d + 1]);

    double inc;
    double next_p;
    const double xn = std::exp(out.tau(n + 1));
    if (vn > -0.5 * A) {
      auto rate = [&](double a, double hd, double vd) {
        return detail::rate_tau(hn + a, vn + a, hd, vd, params);
      };
      const double k1 = rate(0.0, h0, v0);
      const double k2 = rate(0.5 * dt * k1, hm, vm);
      const double k3 = rate(0.5 * dt * k2, hm, vm);
      const double k4 = rate(dt * k3, h1, v1);
      inc = dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      next_p = std::pow(xn, 1.0 / params.beta) * (hn + inc);
    } else {
      const double k1 = detail::rate_q(0.0, hn, h0, params);
      const double k2 = detail::rate_q(0.5 * dt, hn + 0.5 * dt * k1, hm, params);
      const double k3 = detail::rate_q(0.5 * dt, hn + 0.5 * dt * k2, hm, params);
      const double k4 = detail::rate_q(dt, hn + dt * k3, h1, params);
      const double dq = dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      inc = (hn + dq) * std::exp(-dt / params.beta) - hn;
      next_p = out.p[n] + out.p[n] / hn * dq;
    }
    const double next = hn + inc;
    const double next_dev = vn + inc;
    const double next_slope = detail::rate_tau(next, next_dev, h1, v1, params);

    if (check) {
      if (!(next > 0.0)) throw InvariantViolation("integrate: positivity violated", xn);
      if (!(inc < 0.0) || !(next_slope < 0.0) || !(next_dev < 0.0)) {
        throw InvariantViolation("integrate: monotone decrease violated", xn);
      }
    }
    out.h.push_back(next);
    out.dev.push_back(next_dev);
    out.p.push_back(next_p);
    out.dh.push_back(next_slope / xn);
    out.x.push_back(xn);
    slope.push_back(next_slope);
  }
  return out;
}

}  // namespace diagcoag
