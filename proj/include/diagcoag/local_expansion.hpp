#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "diagcoag/errors.hpp"
#include "diagcoag/log_grid.hpp"
#include "diagcoag/mu_solver.hpp"
#include "diagcoag/params.hpp"
#include "diagcoag/profile.hpp"

namespace diagcoag {

// Near x = 0 the profile is written h(x) = A + x^mu (-c + j(x)), A = 1/(1-theta),
// and the correction j is the fixed point of
//
//   T[j](x) = x^-(1-gamma+mu)/beta * ( 2A  int_{x/2}^x s^(mu-gamma) j ds
//                                    +    int_{x/2}^x s^(2mu-gamma) (j-c)^2 ds
//                                    + e  int_0^x     s^(mu-gamma) j ds ),
//
// e = (1-gamma)(beta-beta_star), in the space of functions with finite norm
// sup x^-eps |j(x)| on (0, z].

/// Correction j on a geometric grid over [z 2^-octaves, z].
struct ExpansionGrid {
  double z = 0.0;
  int m = 64;  ///< nodes per octave
  double tau0 = 0.0;
  double dtau = M_LN2 / 64;
  std::vector<double> nodes;
  std::vector<double> j_values;
  double c = 1.0;
  double epsilon = 0.5;
  double weighted_norm = 0.0;

  // Fixed-point bookkeeping (filled by fixed_point).
  double ball_radius = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::vector<double> change_history;  ///< weighted norm of T[j] - j per sweep

  std::size_t size() const { return nodes.size(); }
};

inline double weighted_sup(const std::vector<double>& nodes,
                           const std::vector<double>& values, double epsilon) {
  double norm = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    norm = std::max(norm, std::pow(nodes[k], -epsilon) * std::abs(values[k]));
  }
  return norm;
}

/// Grid with j = 0 on [z 2^-octaves, z], nodes_per_octave nodes per octave.
inline ExpansionGrid make_expansion_grid(double z, double c, double epsilon,
                                         int nodes_per_octave, int octaves = 20) {
  require_even_octave(nodes_per_octave);
  if (!(z > 0.0)) throw DomainError("expansion: z must be positive");
  if (octaves < 2) throw DomainError("expansion: need at least two octaves");
  ExpansionGrid grid;
  grid.z = z;
  grid.m = nodes_per_octave;
  grid.c = c;
  grid.epsilon = epsilon;
  grid.dtau = octave_step(nodes_per_octave);
  const int n = octaves * nodes_per_octave + 1;
  grid.tau0 = std::log(z) - octaves * M_LN2;
  grid.nodes.resize(n);
  for (int k = 0; k < n; ++k) {
    grid.nodes[k] = z * std::exp2(static_cast<double>(k - (n - 1)) / nodes_per_octave);
  }
  grid.j_values.assign(n, 0.0);
  return grid;
}

/// kappa(eps) = [2F(mu+eps) + (1-gamma)beta - 1] / (beta (1-gamma+mu+eps)):
/// weighted-norm bound of the linear part of T. Equals 1 at eps = 0.
inline double contraction_margin(const SimilarityParams& params, double epsilon) {
  const double g = params.gamma();
  const double num = 2.0 * F_of(params, params.mu + epsilon) +
                     (1.0 - g) * params.beta - 1.0;
  return num / (params.beta * (1.0 - g + params.mu + epsilon));
}

/// Coefficients of the self-map estimate
///   ||T[j]|| <= (kappa + q1 z^mu) ||j|| + q2 z^(mu+eps) ||j||^2 + q0 c^2 z^(mu-eps)
/// and the smallest ball radius R it maps into itself (0 if none exists).
struct SelfMapBound {
  double kappa = 0.0;
  double linear_z_coef = 0.0;  ///< q1: z^mu coefficient of the linear factor
  double quadratic_coef = 0.0;  ///< q2
  double constant_coef = 0.0;  ///< q0 c^2
  double kappa_eff = 0.0;       ///< kappa + q1 z^mu
  double radius = 0.0;          ///< 0 when no invariant ball exists
  double lipschitz = std::numeric_limits<double>::infinity();

  bool has_ball() const { return radius > 0.0; }
};

inline SelfMapBound self_map_bound(const SimilarityParams& params, double c, double z,
                                   double epsilon) {
  const double g = params.gamma();
  const double mu = params.mu;
  const double beta = params.beta;
  auto octave_integral = [](double p) { return -std::expm1(-p * M_LN2) / p; };

  SelfMapBound b;
  b.kappa = contraction_margin(params, epsilon);
  b.linear_z_coef = 2.0 * std::abs(c) * octave_integral(1.0 - g + 2.0 * mu + epsilon) / beta;
  b.quadratic_coef = octave_integral(1.0 - g + 2.0 * mu + 2.0 * epsilon) / beta;
  b.constant_coef = c * c * octave_integral(1.0 - g + 2.0 * mu) / beta;

  const double zq = std::pow(z, mu);
  b.kappa_eff = b.kappa + b.linear_z_coef * zq;
  const double quad = b.quadratic_coef * std::pow(z, mu + epsilon);
  const double a0 = b.constant_coef * std::pow(z, mu - epsilon);
  const double gap = 1.0 - b.kappa_eff;
  if (gap <= 0.0) return b;
  if (a0 == 0.0) {
    b.radius = std::numeric_limits<double>::min();
    b.lipschitz = b.kappa_eff;
    return b;
  }
  const double disc = gap * gap - 4.0 * quad * a0;
  if (disc <= 0.0) return b;
  // Smallest root of quad R^2 - gap R + a0 = 0, written without cancellation.
  b.radius = 2.0 * a0 / (gap + std::sqrt(disc));
  b.lipschitz = b.kappa_eff + 2.0 * quad * b.radius;
  return b;
}

/// Largest z = 2^-k (k >= 1) such that kappa + q1 z^mu stays below 0.95
/// (or halfway between kappa and 1 when kappa itself exceeds 0.9), an
/// invariant ball exists, and the ball keeps |j| <= 0.1 c on (0, z].
inline double default_z(const SimilarityParams& params, double c, double epsilon) {
  const double kappa = contraction_margin(params, epsilon);
  const double threshold = std::max(0.95, 0.5 * (1.0 + kappa));
  for (int k = 1; k <= 1000; ++k) {
    const double z = std::ldexp(1.0, -k);
    const SelfMapBound b = self_map_bound(params, c, z, epsilon);
    if (b.kappa_eff > threshold || !b.has_ball()) continue;
    if (c > 0.0 && b.radius * std::pow(z, epsilon) > 0.1 * c) continue;
    return z;
  }
  throw ConvergenceError("default_z: no admissible z >= 2^-1000");
}

/// One application of T on the grid. Integrals are composite Simpson in
/// tau = log s over whole octaves; below the first node j is continued as
/// j(x_0) (s/x_0)^mu.
inline ExpansionGrid apply_T(const ExpansionGrid& grid, const SimilarityParams& params) {
  const int m = grid.m;
  const std::size_t n = grid.size();
  if (n < 2 || !(grid.dtau > 0.0) ||
      !(grid.nodes[1] > grid.nodes[0] * (1.0 + 1e-14))) {
    throw ConvergenceError("apply_T: degenerate grid (node spacing collapsed)");
  }
  const double g = params.gamma();
  const double mu = params.mu;
  const double A = params.stationary_value();
  const double lin_p = 1.0 - g + mu;
  const double sq_p = 1.0 - g + 2.0 * mu;
  const double excess = params.excess();

  // Integrands relative to the evaluation point: (s/x)^p with s/x = 2^(-r/m).
  const std::vector<double> sw = octave_simpson_weights(m);
  std::vector<double> w_lin(m + 1);
  std::vector<double> w_sq(m + 1);
  for (int r = 0; r <= m; ++r) {
    w_lin[r] = sw[r] * grid.dtau * std::exp2(-lin_p * r / m);
    w_sq[r] = sw[r] * grid.dtau * std::exp2(-sq_p * r / m);
  }

  // Extended values: index i + m holds j at x_0 2^(i/m), i = -m .. n-1.
  std::vector<double> ext(n + m);
  const double j0 = grid.j_values.front();
  for (int i = -m; i < 0; ++i) ext[i + m] = j0 * std::exp2(mu * i / m);
  std::copy(grid.j_values.begin(), grid.j_values.end(), ext.begin() + m);

  // cum[k] = x_k^-(1-gamma+mu) int_0^{x_k} s^(mu-gamma) j ds, built octave by
  // octave; the first octave starts from the exact integral of the power law.
  std::vector<double> cum(n);
  const double drop = std::exp2(-lin_p);
  ExpansionGrid out = grid;
  for (std::size_t k = 0; k < n; ++k) {
    double lin = 0.0;
    double sq = 0.0;
    for (int r = 0; r <= m; ++r) {
      const double jv = ext[k + m - r];
      lin += w_lin[r] * jv;
      sq += w_sq[r] * (jv - grid.c) * (jv - grid.c);
    }
    double below;
    if (k < static_cast<std::size_t>(m)) {
      below = j0 * std::pow(0.5 * grid.nodes[k] / grid.nodes[0], mu) * drop /
              (1.0 - g + 2.0 * mu);
    } else {
      below = drop * cum[k - m];
    }
    cum[k] = below + lin;
    out.j_values[k] = (2.0 * A * lin + std::pow(grid.nodes[k], mu) * sq + excess * cum[k]) /
                      params.beta;
  }
  out.weighted_norm = weighted_sup(out.nodes, out.j_values, out.epsilon);
  return out;
}

struct ExpansionOptions {
  double c = 1.0;
  std::optional<double> z;        ///< default_z when empty
  std::optional<double> epsilon;  ///< mu/2 when empty
  int nodes_per_octave = 64;
  int octaves = 20;
  double tol = 1e-12;
  int max_iter = 20000;
};

/// Iterates j <- T[j] from j = 0 until the weighted change is <= tol.
/// Throws ConvergenceError when the iterate leaves the invariant ball of
/// self_map_bound (z too large) or max_iter is reached.
inline ExpansionGrid fixed_point(const SimilarityParams& params, const ExpansionOptions& opt) {
  if (opt.c < 0.0) throw DomainError("expansion amplitude c must be >= 0");
  const double eps = opt.epsilon.value_or(0.5 * params.mu);
  if (!(eps > 0.0 && eps < params.mu)) {
    throw DomainError("epsilon must lie in (0, mu)");
  }
  const double z = opt.z.value_or(default_z(params, opt.c, eps));
  ExpansionGrid grid = make_expansion_grid(z, opt.c, eps, opt.nodes_per_octave, opt.octaves);
  const SelfMapBound bound = self_map_bound(params, opt.c, z, eps);
  grid.ball_radius = bound.radius;

  for (int it = 1; it <= opt.max_iter; ++it) {
    ExpansionGrid next = apply_T(grid, params);
    double change = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      change = std::max(change, std::pow(grid.nodes[k], -eps) *
                                    std::abs(next.j_values[k] - grid.j_values[k]));
    }
    next.change_history = std::move(grid.change_history);
    next.change_history.push_back(change);
    next.iterations = it;
    grid = std::move(next);
    if (!std::isfinite(grid.weighted_norm) || grid.weighted_norm > grid.ball_radius) {
      std::ostringstream msg;
      msg << "fixed_point: iterate left the ball (norm " << grid.weighted_norm
          << " > R = " << grid.ball_radius << ") at z = " << z
          << "; choose a smaller z";
      throw ConvergenceError(msg.str());
    }
    if (change <= opt.tol) return grid;
  }
  throw ConvergenceError("fixed_point: no convergence after " +
                         std::to_string(opt.max_iter) + " iterations");
}

/// Profile segment h = A + x^mu (-c + j) on the expansion grid. dh/dx comes
/// from the delay ODE so that it matches what the integrator continues.
/// For c > 0, throws InvariantViolation unless 0 < h < A and h strictly
/// decreases (z too large for the local picture).
inline Profile h_from_expansion(const ExpansionGrid& grid, const SimilarityParams& params) {
  const double A = params.stationary_value();
  const double mu = params.mu;
  const double theta = params.theta();
  const std::size_t n = grid.size();
  const int m = grid.m;

  Profile p;
  p.params = params;
  p.c = grid.c;
  p.z = grid.z;
  p.m = m;
  p.dtau = grid.dtau;
  p.tau0 = std::log(grid.nodes.front());
  p.x = grid.nodes;
  p.h.resize(n);
  p.dh.resize(n);
  p.dev.resize(n);
  p.p.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    p.dev[k] = std::pow(grid.nodes[k], mu) * (grid.j_values[k] - grid.c);
    p.h[k] = A + p.dev[k];
    p.p[k] = std::pow(grid.nodes[k], 1.0 / params.beta) * p.h[k];
  }
  for (std::size_t k = 0; k < n; ++k) {
    double dev_half;
    if (k >= static_cast<std::size_t>(m)) {
      dev_half = p.dev[k - m];
    } else {
      const double xs = 0.5 * grid.nodes[k];
      const double js = grid.j_values.front() * std::pow(xs / grid.nodes.front(), mu);
      dev_half = std::pow(xs, mu) * (js - grid.c);
    }
    const double hk = p.h[k];
    const double dtau_rate = ((1.0 - theta) * hk * p.dev[k] +
                              theta * (p.dev[k] - dev_half) * (hk + A + dev_half)) /
                             params.beta;
    p.dh[k] = dtau_rate / grid.nodes[k];
  }

  if (grid.c > 0.0) {
    for (std::size_t k = 0; k < n; ++k) {
      if (!(p.h[k] > 0.0 && p.dev[k] < 0.0)) {
        throw InvariantViolation("expansion: h outside (0, 1/(1-theta))", p.x[k]);
      }
      if (!(p.dh[k] < 0.0) || (k > 0 && !(p.dev[k] < p.dev[k - 1]))) {
        throw InvariantViolation("expansion: h not decreasing", p.x[k]);
      }
    }
  }
  return p;
}

}  // namespace diagcoag
