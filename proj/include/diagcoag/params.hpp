#pragma once

#include <cmath>
#include <string>

#include "diagcoag/errors.hpp"

namespace diagcoag {

/// Diagonal kernel K(xi, eta) = delta(xi - eta) xi^(1+gamma). Only the
/// homogeneity is stored; theta = 2^(gamma-1) is cached.
struct KernelParams {
  double gamma = 0.0;
  double theta = 0.5;

  /// Value of the constant (power-law) solution h = 1/(1-theta).
  double stationary_value() const { return 1.0 / (1.0 - theta); }
};

inline KernelParams make_kernel(double gamma) {
  if (!(gamma < 1.0)) {
    throw DomainError("gamma must be < 1 (got " + std::to_string(gamma) + ")");
  }
  return KernelParams{gamma, std::exp2(gamma - 1.0)};
}

inline double beta_star_of(double gamma) { return 1.0 / (1.0 - gamma); }

/// Tail index rho = gamma + 1/beta.
inline double rho_from_beta(double gamma, double beta) {
  return gamma + 1.0 / beta;
}

/// Inverse of rho_from_beta on the open interval rho in (gamma, 1).
inline double beta_from_rho(double gamma, double rho) {
  make_kernel(gamma);
  if (!(rho > gamma && rho < 1.0)) {
    throw DomainError("rho must lie in (gamma, 1) = (" + std::to_string(gamma) +
                      ", 1) (got " + std::to_string(rho) + ")");
  }
  return 1.0 / (rho - gamma);
}

/// Self-similarity exponents of the family. Built by make_params (core.hpp),
/// which also solves for mu.
struct SimilarityParams {
  KernelParams kernel;
  double beta = 0.0;
  double beta_star = 0.0;
  double rho = 0.0;
  double mu = 0.0;
  /// beta == beta_star: accepted, but outside the range the existence
  /// theorem covers.
  bool degenerate = false;

  double gamma() const { return kernel.gamma; }
  double theta() const { return kernel.theta; }
  double stationary_value() const { return kernel.stationary_value(); }
  /// (1-gamma)(beta-beta_star), the coefficient of the cumulative term.
  double excess() const { return (1.0 - kernel.gamma) * (beta - beta_star); }
};

}  // namespace diagcoag
