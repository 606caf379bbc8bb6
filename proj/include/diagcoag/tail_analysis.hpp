#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "diagcoag/errors.hpp"
#include "diagcoag/log_grid.hpp"
#include "diagcoag/profile.hpp"
#include "json.hpp"

namespace diagcoag {

// Large-x structure of a normalized profile (h(1) = 1/2):
//   supersolution      h(x) <= 1/(1 + x^(1/beta))                 x >= 1
//   compensated tail   p(x) = x^(1/beta) h(x) -> d,  |p(x) - p(x0)| <= 2 x0^(-1/beta)
//   Phi(x) = int_0^x s^-gamma h(s) ds,  c0 = Phi(1)
//   integral inequality beta x^(1-gamma) h > (1-gamma)(beta-beta_star) Phi(x)
//   lower bound        h(x) >= e (c0/beta) x^(-1/beta)              x >= 1
//   where e = (1-gamma)(beta-beta_star) is the coefficient of Phi in the
//   integral inequality. Dropping e gives the stronger form (c0/beta) x^(-1/beta),
//   which is reported separately as the "literal" lower bound; it coincides
//   with the derived one when e = 1 and can fail when e < 1.

inline constexpr double kBoundSlack = 1e-9;

/// p(x) = x^(1/beta) h(x) at every node (the stored tail-accumulated values
/// when present).
inline std::vector<double> p_of(const Profile& profile) {
  if (profile.p.size() == profile.size()) return profile.p;
  std::vector<double> p(profile.size());
  const double inv_beta = 1.0 / profile.params.beta;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::pow(profile.x[k], inv_beta) * profile.h[k];
  }
  return p;
}

namespace detail {

/// Phi at every node, stored scaled as Phi(x_k) x_k^-(1-gamma).
struct PhiTable {
  std::vector<double> scaled;
};

inline double phi_scaled_below(const Profile& profile, double xv) {
  const double g = profile.params.gamma();
  const double A = profile.params.stationary_value();
  const double D = profile.dev.front();
  const double mu = profile.params.mu;
  return A / (1.0 - g) +
         D * std::pow(xv / profile.x.front(), mu) / (1.0 - g + mu);
}

/// h at node index k of the grid extended below x_0 (k may be negative).
inline double h_extended(const Profile& profile, long k) {
  if (k >= 0) return profile.h[static_cast<std::size_t>(k)];
  return profile.extrapolate_below(std::exp(profile.tau0 + static_cast<double>(k) * profile.dtau));
}

/// Octave Simpson sums of (s/x_k)^p h(s)^power over [x_k/2, x_k], in tau.
inline double octave_sum(const Profile& profile, std::size_t k, double p, int power,
                         std::span<const double> weights) {
  const int m = profile.m;
  double sum = 0.0;
  for (int r = 0; r <= m; ++r) {
    const double hv = h_extended(profile, static_cast<long>(k) - r);
    sum += weights[r] * std::exp2(-p * r / m) * (power == 2 ? hv * hv : hv);
  }
  return sum * profile.dtau;
}

inline PhiTable build_phi(const Profile& profile) {
  const double g = profile.params.gamma();
  const int m = profile.m;
  const auto w = octave_simpson_weights(m);
  const double drop = std::exp2(-(1.0 - g));
  PhiTable t;
  t.scaled.resize(profile.size());
  for (std::size_t k = 0; k < profile.size(); ++k) {
    const double below =
        k < static_cast<std::size_t>(m)
            ? drop * phi_scaled_below(profile, 0.5 * profile.x[k])
            : drop * t.scaled[k - m];
    t.scaled[k] = below + octave_sum(profile, k, 1.0 - g, 1, w);
  }
  return t;
}

/// Phi(x) from the node table plus a three-point Simpson on the partial cell.
inline double phi_at(const Profile& profile, const PhiTable& table, double xv) {
  const double g = profile.params.gamma();
  if (xv <= profile.x_min()) {
    return std::pow(xv, 1.0 - g) * phi_scaled_below(profile, xv);
  }
  const double tv = std::log(xv);
  auto k = static_cast<std::size_t>((tv - profile.tau0) / profile.dtau);
  k = std::min(k, profile.size() - 1);
  const double tk = profile.tau(k);
  const double span = tv - tk;
  const double base = table.scaled[k] * std::pow(profile.x[k], 1.0 - g);
  if (span <= 0.0) return base;
  auto f = [&](double t) { return std::exp((1.0 - g) * t) * profile.value(std::exp(t)); };
  return base + span / 6.0 * (f(tk) + 4.0 * f(tk + 0.5 * span) + f(tv));
}

inline void require_normalized(const Profile& profile, const char* who) {
  if (profile.is_constant() || !profile.normalized) {
    throw PreconditionError(std::string(who) + ": requires a normalized fat-tail profile (h(1) = 1/2)");
  }
}

}  // namespace detail

/// Phi(x) = int_0^x s^-gamma h(s) ds. Below x_min the leading small-x form
/// of h is integrated exactly.
inline double phi_of(const Profile& profile, double x) {
  return detail::phi_at(profile, detail::build_phi(profile), x);
}

/// Phi at every node.
inline std::vector<double> cumulative_phi(const Profile& profile) {
  const auto t = detail::build_phi(profile);
  std::vector<double> out(profile.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = t.scaled[k] * std::pow(profile.x[k], 1.0 - profile.params.gamma());
  }
  return out;
}

struct DEstimate {
  double d_estimate = 0.0;
  double d_error_bound = 0.0;
  bool converged = false;  ///< error bound <= 0.1 d
};

/// d ~ p(x_max) with the rigorous bound 2 x_max^(-1/beta).
inline DEstimate estimate_d(const Profile& profile) {
  detail::require_normalized(profile, "estimate_d");
  if (profile.x_max() < 2.0) throw RangeError("estimate_d: needs x_max >= 2");
  DEstimate e;
  const double inv_beta = 1.0 / profile.params.beta;
  e.d_estimate = profile.p.size() == profile.size()
                     ? profile.p.back()
                     : std::pow(profile.x_max(), inv_beta) * profile.h.back();
  e.d_error_bound = 2.0 * std::pow(profile.x_max(), -inv_beta);
  e.converged = e.d_error_bound <= 0.1 * e.d_estimate;
  return e;
}

/// Least-squares slope of log h against log x over the nodes in [x_lo, x_hi].
inline double fit_slope(const Profile& profile, double x_lo, double x_hi) {
  if (!(x_lo >= 1.0) || x_hi > profile.x_max() * (1.0 + 1e-12) || !(x_hi >= 100.0 * x_lo)) {
    throw DomainError("fit_slope: window too narrow or outside [1, x_max]");
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < profile.size(); ++k) {
    if (profile.x[k] < x_lo || profile.x[k] > x_hi) continue;
    const double lx = std::log(profile.x[k]);
    const double ly = std::log(profile.h[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 3) throw DomainError("fit_slope: fewer than three nodes in window");
  const double nn = static_cast<double>(n);
  return (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
}

struct BoundsReport {
  bool upper_ok = true;
  bool lower_ok = true;
  bool hineq_ok = true;
  /// beta == beta_star: the integral inequality (and the lower bound built
  /// on it) are vacuous and were not checked.
  bool hineq_skipped = false;
  double c0 = 0.0;
  double upper_margin = std::numeric_limits<double>::infinity();  ///< min (bound-h)/bound
  double lower_margin = std::numeric_limits<double>::infinity();  ///< min (h-bound)/h
  /// Same for the literal bound (c0/beta) x^(-1/beta), for information.
  double lower_literal_margin = std::numeric_limits<double>::infinity();
  bool lower_literal_ok = true;
  double hineq_margin = std::numeric_limits<double>::infinity();  ///< min (lhs-rhs)/lhs
  double upper_worst_x = 0.0;
  double lower_worst_x = 0.0;
  double hineq_worst_x = 0.0;
  std::size_t nodes_checked = 0;

  bool all_ok() const { return upper_ok && lower_ok && hineq_ok; }
};

/// Checks the supersolution bound, the lower bound e (c0/beta) x^(-1/beta) and
/// the integral inequality at every node x >= 1 with relative slack 1e-9.
inline BoundsReport check_bounds(const Profile& profile) {
  detail::require_normalized(profile, "check_bounds");
  const auto& P = profile.params;
  const double inv_beta = 1.0 / P.beta;
  const auto table = detail::build_phi(profile);

  BoundsReport r;
  r.hineq_skipped = P.degenerate || P.excess() <= 0.0;
  r.c0 = detail::phi_at(profile, table, 1.0);
  for (std::size_t k = 0; k < profile.size(); ++k) {
    const double x = profile.x[k];
    if (x < 1.0) continue;
    ++r.nodes_checked;
    const double h = profile.h[k];
    const double xp = std::pow(x, inv_beta);

    const double upper = 1.0 / (1.0 + xp);
    const double um = (upper - h) / upper;
    if (um < r.upper_margin) {
      r.upper_margin = um;
      r.upper_worst_x = x;
    }
    if (r.hineq_skipped) continue;

    const double literal = r.c0 / (P.beta * xp);
    const double lm = (h - P.excess() * literal) / h;
    if (lm < r.lower_margin) {
      r.lower_margin = lm;
      r.lower_worst_x = x;
    }
    r.lower_literal_margin = std::min(r.lower_literal_margin, (h - literal) / h);
    // Both sides divided by x^(1-gamma).
    const double lhs = P.beta * h;
    const double rhs = P.excess() * table.scaled[k];
    const double hm = (lhs - rhs) / lhs;
    if (hm < r.hineq_margin) {
      r.hineq_margin = hm;
      r.hineq_worst_x = x;
    }
  }
  r.upper_ok = r.upper_margin >= -kBoundSlack;
  r.lower_ok = r.hineq_skipped || r.lower_margin >= -kBoundSlack;
  r.lower_literal_ok = r.hineq_skipped || r.lower_literal_margin >= -kBoundSlack;
  r.hineq_ok = r.hineq_skipped || r.hineq_margin > -kBoundSlack;
  return r;
}

/// Max over samples of |LHS - RHS| / LHS for
///   beta x^(1-gamma) h(x) = int_{x/2}^x s^-gamma h^2 ds + (1-gamma)(beta-beta_star) Phi(x),
/// with both integrals by composite Simpson (m intervals per octave) in log s.
inline double integral_residual(const Profile& profile, std::span<const double> samples,
                             std::vector<double>* per_sample = nullptr) {
  const auto& P = profile.params;
  const double g = P.gamma();
  const int m = profile.m;
  const auto table = detail::build_phi(profile);
  std::vector<double> f(static_cast<std::size_t>(m) + 1);
  double worst = 0.0;
  if (per_sample) per_sample->clear();
  for (double x : samples) {
    const double tx = std::log(x);
    for (int r = 0; r <= m; ++r) {
      const double t = tx - profile.dtau * r;
      const double hv = profile.value(std::exp(t));
      f[r] = std::exp((1.0 - g) * (t - tx)) * hv * hv;
    }
    // Everything scaled by x^-(1-gamma).
    const double square = simpson(f, profile.dtau);
    const double phi = detail::phi_at(profile, table, x) * std::pow(x, -(1.0 - g));
    const double lhs = P.beta * profile.value(x);
    const double res = std::abs(lhs - square - P.excess() * phi) / std::abs(lhs);
    if (per_sample) per_sample->push_back(res);
    worst = std::max(worst, res);
  }
  return worst;
}

/// Nodes of the profile inside [lo, hi].
inline std::vector<double> nodes_in(const Profile& profile, double lo, double hi) {
  std::vector<double> out;
  for (double x : profile.x) {
    if (x >= lo && x <= hi) out.push_back(x);
  }
  return out;
}

struct CauchyReport {
  double max_ratio = 0.0;  ///< max over x0 >= 2 of sup_{x>=x0} |p(x)-p(x0)| / (2 x0^(-1/beta))
  double max_derivative_ratio = 0.0;  ///< max of beta |p'(x)| / (2 x^-(1+1/beta)), x >= 2
};

inline CauchyReport cauchy_check(const Profile& profile) {
  detail::require_normalized(profile, "cauchy_check");
  const double inv_beta = 1.0 / profile.params.beta;
  const auto p = p_of(profile);
  const auto m = static_cast<std::size_t>(profile.m);
  const double theta = profile.params.theta();
  CauchyReport rep;
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t k = profile.size(); k-- > 0;) {
    const double x = profile.x[k];
    if (x < 2.0) break;
    hi = std::max(hi, p[k]);
    lo = std::min(lo, p[k]);
    const double spread = std::max(hi - p[k], p[k] - lo);
    rep.max_ratio = std::max(rep.max_ratio, spread / (2.0 * std::pow(x, -inv_beta)));
    // beta x p' = x^(1/beta) (h^2 - theta h(x/2)^2): taken from the equation
    // itself because h/(beta x) + h' cancels to below rounding far out.
    const double hd = k >= m ? profile.h[k - m] : profile.value(0.5 * x);
    const double bdp = std::pow(x, inv_beta - 1.0) *
                       std::abs(profile.h[k] * profile.h[k] - theta * hd * hd);
    rep.max_derivative_ratio =
        std::max(rep.max_derivative_ratio, bdp / (2.0 * std::pow(x, -(1.0 + inv_beta))));
  }
  return rep;
}

struct TailReport {
  double d_estimate = 0.0;
  double d_error_bound = 0.0;
  bool d_converged = false;
  double c0 = 0.0;
  double slope_fit = 0.0;
  double slope_window_lo = 0.0;
  double slope_window_hi = 0.0;
  double rho_check = 0.0;  ///< gamma - slope_fit, compare with rho
  double cauchy_max_violation = 0.0;  ///< max Cauchy ratio - 1 (<= 1e-9 passes)
  double derivative_bound_ratio = 0.0;
  bool upper_bound_ok = false;
  bool lower_bound_ok = false;
  bool lower_literal_ok = false;
  bool hineq_ok = false;
  bool hineq_skipped = false;
  double max_integral_residual = 0.0;
  double residual_hi_used = 0.0;  ///< upper end of the residual samples actually used
  BoundsReport bounds;

  /// Admissible range of d: the lower bound on h gives d >= e c0 / beta,
  /// the supersolution gives d <= 1.
  double d_lower = 0.0;
  /// c0 / beta, the lower end without the factor e.
  double d_lower_literal = 0.0;

  bool slope_ok(double beta) const { return std::abs(slope_fit + 1.0 / beta) <= 0.01 / beta; }
  bool cauchy_ok() const { return cauchy_max_violation <= kBoundSlack; }
  bool d_in_range() const {
    return d_estimate >= d_lower * (1.0 - kBoundSlack) && d_estimate <= 1.0 + kBoundSlack;
  }
  bool d_in_literal_range() const {
    return d_estimate >= d_lower_literal * (1.0 - kBoundSlack) && d_estimate <= 1.0 + kBoundSlack;
  }
};

struct TailOptions {
  double slope_decades = 4.0;
  double residual_lo = 1e-4;
  double residual_hi = 1e4;
  double residual_tol = 1e-6;
  /// beta == beta_star only: x h tends to zero by cancellation, so it carries
  /// an absolute error near 1e-9 and the relative residual is sampled only
  /// where x h >= degenerate_floor.
  double degenerate_floor = 1e-2;
};

/// Full tail report of a normalized profile.
inline TailReport analyze_tail(const Profile& profile, const TailOptions& opt = {}) {
  detail::require_normalized(profile, "analyze_tail");
  TailReport rep;
  const DEstimate d = estimate_d(profile);
  rep.d_estimate = d.d_estimate;
  rep.d_error_bound = d.d_error_bound;
  rep.d_converged = d.converged;

  rep.slope_window_hi = profile.x_max();
  rep.slope_window_lo = std::max(1.0, profile.x_max() * std::pow(10.0, -opt.slope_decades));
  rep.slope_fit = fit_slope(profile, rep.slope_window_lo, rep.slope_window_hi);
  rep.rho_check = profile.params.gamma() - rep.slope_fit;

  const CauchyReport cr = cauchy_check(profile);
  rep.cauchy_max_violation = cr.max_ratio - 1.0;
  rep.derivative_bound_ratio = cr.max_derivative_ratio;

  rep.bounds = check_bounds(profile);
  rep.c0 = rep.bounds.c0;
  rep.d_lower_literal = rep.c0 / profile.params.beta;
  rep.d_lower = std::max(0.0, profile.params.excess()) * rep.d_lower_literal;
  rep.upper_bound_ok = rep.bounds.upper_ok;
  rep.lower_bound_ok = rep.bounds.lower_ok;
  rep.lower_literal_ok = rep.bounds.lower_literal_ok;
  rep.hineq_ok = rep.bounds.hineq_ok;
  rep.hineq_skipped = rep.bounds.hineq_skipped;

  double hi = std::min(opt.residual_hi, profile.x_max());
  if (profile.params.degenerate) {
    for (std::size_t k = 0; k < profile.size(); ++k) {
      if (profile.x[k] >= 1.0 && profile.x[k] * profile.h[k] < opt.degenerate_floor) {
        hi = std::min(hi, profile.x[k]);
        break;
      }
    }
  }
  rep.residual_hi_used = hi;
  const auto samples = nodes_in(profile, std::max(opt.residual_lo, profile.x_min()), hi);
  rep.max_integral_residual = integral_residual(profile, samples);
  return rep;
}

inline nlohmann::json to_json(const TailReport& r) {
  return nlohmann::json{{"d_estimate", r.d_estimate},
                        {"d_error_bound", r.d_error_bound},
                        {"d_converged", r.d_converged},
                        {"c0", r.c0},
                        {"d_lower", r.d_lower},
                        {"d_lower_literal", r.d_lower_literal},
                        {"d_in_range", r.d_in_range()},
                        {"slope_fit", r.slope_fit},
                        {"slope_window", {r.slope_window_lo, r.slope_window_hi}},
                        {"rho_check", r.rho_check},
                        {"cauchy_max_violation", r.cauchy_max_violation},
                        {"derivative_bound_ratio", r.derivative_bound_ratio},
                        {"upper_bound_ok", r.upper_bound_ok},
                        {"lower_bound_ok", r.lower_bound_ok},
                        {"lower_literal_ok", r.lower_literal_ok},
                        {"hineq_ok", r.hineq_ok},
                        {"hineq_skipped", r.hineq_skipped},
                        {"upper_margin", r.bounds.upper_margin},
                        {"lower_margin", r.bounds.lower_margin},
                        {"lower_literal_margin", r.bounds.lower_literal_margin},
                        {"hineq_margin", r.bounds.hineq_margin},
                        {"max_integral_residual", r.max_integral_residual},
                        {"residual_hi_used", r.residual_hi_used}};
}

}  // namespace diagcoag
