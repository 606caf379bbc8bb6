#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "diagcoag/errors.hpp"
#include "diagcoag/log_grid.hpp"
#include "diagcoag/params.hpp"

namespace diagcoag {

/// Rescaled self-similar profile h(x) = x^(1+gamma) g(x), sampled on a grid
/// uniform in tau = log x with m nodes per octave.
///
/// Below the first node the profile is continued by its leading small-x
/// behaviour h ~ A + (h_0 - A)(x/x_0)^mu, A = 1/(1-theta). Nothing is stored
/// above the last node.
struct Profile {
  SimilarityParams params;
  double c = 1.0;  ///< bifurcation amplitude in the current x coordinate
  double z = 0.0;  ///< right end of the local expansion, current coordinate
  int m = 64;      ///< nodes per octave
  double tau0 = 0.0;
  double dtau = M_LN2 / 64;
  std::vector<double> x;
  std::vector<double> h;
  std::vector<double> dh;  ///< dh/dx
  /// h - A, carried separately so that the approach to A at small x is
  /// resolved below the spacing of doubles near A.
  std::vector<double> dev;
  /// p = x^(1/beta) h. In the tail it is accumulated from its own increments,
  /// which keeps differences p(x) - p(x0) meaningful below the rounding
  /// level of x^(1/beta) h.
  std::vector<double> p;
  bool normalized = false;
  /// Accumulated rescaling: this profile equals raw(scale * x).
  double scale = 1.0;

  std::size_t size() const { return h.size(); }
  double x_min() const { return x.front(); }
  double x_max() const { return x.back(); }
  double tau(std::size_t k) const { return tau0 + static_cast<double>(k) * dtau; }
  /// dh/dtau at node k.
  double slope_tau(std::size_t k) const { return x[k] * dh[k]; }
  /// c == 0 selects the constant (power-law) solution.
  bool is_constant() const { return c == 0.0; }

  /// Fills dev and p from h where they are missing (e.g. profiles read back
  /// from a table).
  void complete_derived() {
    const double A = params.stationary_value();
    if (dev.size() != h.size()) {
      dev.resize(h.size());
      for (std::size_t k = 0; k < h.size(); ++k) dev[k] = h[k] - A;
    }
    if (p.size() != h.size()) {
      p.resize(h.size());
      for (std::size_t k = 0; k < h.size(); ++k) {
        p[k] = std::pow(x[k], 1.0 / params.beta) * h[k];
      }
    }
  }

  /// Recomputes x from tau0/dtau after nodes were appended or shifted.
  void sync_nodes() {
    x.resize(h.size());
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::exp(tau(k));
  }

  /// h below the first node, from the leading-order expansion.
  double extrapolate_below(double xv) const {
    return params.stationary_value() + dev.front() * std::pow(xv / x.front(), params.mu);
  }

  /// h at an arbitrary x <= x_max (cubic Hermite in tau between nodes).
  double value(double xv) const {
    if (!(xv > 0.0)) throw RangeError("profile evaluated at non-positive x");
    const double t = std::log(xv);
    if (t <= tau0) return extrapolate_below(xv);
    const double pos = (t - tau0) / dtau;
    auto k = static_cast<std::size_t>(pos);
    if (k + 1 >= size()) {
      if (k + 1 == size() && pos - static_cast<double>(k) < 1e-9) return h.back();
      throw RangeError("profile evaluated beyond x_max = " + std::to_string(x_max()));
    }
    const double s = t - tau(k);
    return hermite(s, dtau, h[k], h[k + 1], slope_tau(k), slope_tau(k + 1));
  }

  /// dh/dx at an arbitrary x inside the stored domain.
  double derivative(double xv) const {
    const double t = std::log(xv);
    const double pos = (t - tau0) / dtau;
    if (pos < 0.0 || pos > static_cast<double>(size() - 1)) {
      throw RangeError("profile derivative requested outside the stored domain");
    }
    auto k = std::min(static_cast<std::size_t>(pos), size() - 2);
    const double s = t - tau(k);
    return hermite_slope(s, dtau, h[k], h[k + 1], slope_tau(k), slope_tau(k + 1)) /
           xv;
  }

  /// Profile g(x) = x^-(1+gamma) h(x) of the original similarity variable.
  double g(double xv) const { return std::pow(xv, -(1.0 + params.gamma())) * value(xv); }
};

/// h(x) -> h(a x): shifts the grid by log a and leaves node values unchanged.
inline Profile rescale(const Profile& profile, double a) {
  if (!(a > 0.0)) throw DomainError("rescale factor must be positive");
  Profile out = profile;
  out.tau0 -= std::log(a);
  out.sync_nodes();
  for (double& d : out.dh) d *= a;
  const double pf = std::pow(a, -1.0 / profile.params.beta);
  for (double& v : out.p) v *= pf;
  out.scale *= a;
  out.z /= a;
  out.c *= std::pow(a, profile.params.mu);
  return out;
}

/// Location a with h(a) = 1/2 (bisection on the monotone interpolant).
inline double half_point(const Profile& profile) {
  if (profile.is_constant() || !(profile.h.front() > 0.5) || !(profile.h.back() < 0.5)) {
    throw RangeError("h = 1/2 is not attained inside the stored domain");
  }
  const auto it = std::find_if(profile.h.begin(), profile.h.end(),
                               [](double v) { return v < 0.5; });
  const auto k = static_cast<std::size_t>(it - profile.h.begin()) - 1;
  double lo = 0.0;
  double hi = profile.dtau;
  auto at = [&](double s) {
    return hermite(s, profile.dtau, profile.h[k], profile.h[k + 1],
                   profile.slope_tau(k), profile.slope_tau(k + 1));
  };
  for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
    const double mid = 0.5 * (lo + hi);
    (at(mid) > 0.5 ? lo : hi) = mid;
  }
  return std::exp(profile.tau(k) + 0.5 * (lo + hi));
}

/// Rescales so that h(1) = 1/2.
inline Profile normalize(const Profile& profile) {
  Profile out = rescale(profile, half_point(profile));
  out.normalized = true;
  return out;
}

}  // namespace diagcoag
