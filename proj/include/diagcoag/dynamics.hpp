#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "diagcoag/errors.hpp"
#include "diagcoag/params.hpp"
#include "diagcoag/profile.hpp"
#include "json.hpp"

namespace diagcoag {

// Time-dependent diagonal coagulation
//   df/dt (xi) = (1/4) (xi/2)^(1+gamma) f(xi/2)^2 - xi^(1+gamma) f(xi)^2
// on a geometric grid xi_k = xi_min 2^(k/m_d). Clusters of size xi only merge
// with clusters of the same size, so the gain at node k comes from node k - m_d.

/// Number density f(xi, t) on a geometric grid.
struct NumberDensityField {
  KernelParams kernel;
  double xi_min = 1.0;
  int m_d = 16;  ///< nodes per octave
  std::vector<double> xi;
  std::vector<double> f;
  double t = 0.0;
  /// Mass that left through the top of the grid since construction.
  double outflow = 0.0;

  std::size_t size() const { return xi.size(); }
  double dtau() const { return M_LN2 / m_d; }
};

/// Geometric grid with K = m_d * octaves intervals, f = 0, t = t0. Nodes are
/// built with ldexp so that xi_{k+m_d} == 2 xi_k exactly.
inline NumberDensityField make_field(const KernelParams& kernel, double xi_min, int m_d = 16,
                                     int octaves = 40, double t0 = 1.0) {
  if (!(xi_min > 0.0)) throw DomainError("xi_min must be positive");
  if (m_d < 1 || octaves < 1) throw DomainError("grid needs m_d >= 1 and octaves >= 1");
  NumberDensityField field;
  field.kernel = kernel;
  field.xi_min = xi_min;
  field.m_d = m_d;
  field.t = t0;
  const auto n = static_cast<std::size_t>(m_d) * static_cast<std::size_t>(octaves) + 1;
  field.xi.resize(n);
  std::vector<double> base(static_cast<std::size_t>(m_d));
  for (int r = 0; r < m_d; ++r) base[r] = xi_min * std::exp2(static_cast<double>(r) / m_d);
  for (std::size_t k = 0; k < n; ++k) {
    field.xi[k] = std::ldexp(base[k % m_d], static_cast<int>(k / m_d));
  }
  field.f.assign(n, 0.0);
  return field;
}

/// Rate per node; no influx into the lowest octave.
inline std::vector<double> coag_rhs(const NumberDensityField& field,
                                    const std::vector<double>& f) {
  const double e = 1.0 + field.kernel.gamma;
  const auto m = static_cast<std::size_t>(field.m_d);
  std::vector<double> rate(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double w = std::pow(field.xi[k], e);
    double gain = 0.0;
    if (k >= m) gain = 0.25 * std::pow(0.5, e) * w * f[k - m] * f[k - m];
    rate[k] = gain - w * f[k] * f[k];
  }
  return rate;
}

inline std::vector<double> coag_rhs(const NumberDensityField& field) {
  return coag_rhs(field, field.f);
}

/// Mass per unit time leaving the grid: in the discrete balance the gain of
/// node k feeds node k + m_d, which for the top octave lies outside.
inline double loss_flux(const NumberDensityField& field, const std::vector<double>& f) {
  const double e = 3.0 + field.kernel.gamma;
  const std::size_t n = f.size();
  const auto m = static_cast<std::size_t>(field.m_d);
  double sum = 0.0;
  for (std::size_t k = n > m ? n - m : 0; k < n; ++k) {
    sum += std::pow(field.xi[k], e) * f[k] * f[k];
  }
  return field.dtau() * sum;
}

struct Moments {
  double number = 0.0;     ///< N = int f dxi
  double mass = 0.0;       ///< M = int xi f dxi
  double loss_flux = 0.0;  ///< mass per unit time leaving through the top
};

/// Moments with equal weights dtau in tau = log xi. With these weights the
/// gain and loss sums cancel node by node (the substitution xi -> xi/2 is
/// an index shift), so dM/dt = -loss_flux holds exactly on the grid.
inline Moments moments(const NumberDensityField& field) {
  Moments mo;
  const double dt = field.dtau();
  for (std::size_t k = 0; k < field.size(); ++k) {
    mo.number += dt * field.xi[k] * field.f[k];
    mo.mass += dt * field.xi[k] * field.xi[k] * field.f[k];
  }
  mo.loss_flux = loss_flux(field, field.f);
  return mo;
}

/// dt <= eta / max_k(xi_k^(1+gamma) f_k); infinity for f == 0.
inline double stable_dt(const NumberDensityField& field, double eta = 0.1) {
  double rate = 0.0;
  for (std::size_t k = 0; k < field.size(); ++k) {
    rate = std::max(rate, std::pow(field.xi[k], 1.0 + field.kernel.gamma) * field.f[k]);
  }
  return rate > 0.0 ? eta / rate : std::numeric_limits<double>::infinity();
}

struct StepInfo {
  double dt_used = 0.0;
  int halvings = 0;
};

/// One classical RK4 step. A step producing a negative or NaN value is
/// rejected and retried at half the step, at most 20 times; then StepCollapse.
inline NumberDensityField step(const NumberDensityField& field, double dt,
                               StepInfo* info = nullptr) {
  if (!(dt > 0.0)) throw DomainError("step: dt must be positive");
  const std::size_t n = field.size();
  const auto k1 = coag_rhs(field, field.f);
  const double o1 = loss_flux(field, field.f);
  std::vector<double> y(n);
  for (int halvings = 0; halvings <= 20; ++halvings, dt *= 0.5) {
    auto stage = [&](const std::vector<double>& k, double a) {
      for (std::size_t i = 0; i < n; ++i) y[i] = field.f[i] + a * k[i];
      return std::make_pair(coag_rhs(field, y), loss_flux(field, y));
    };
    const auto [k2, o2] = stage(k1, 0.5 * dt);
    const auto [k3, o3] = stage(k2, 0.5 * dt);
    const auto [k4, o4] = stage(k3, dt);

    NumberDensityField out = field;
    bool negative = false;
    for (std::size_t i = 0; i < n; ++i) {
      out.f[i] = field.f[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!(out.f[i] >= 0.0)) {
        negative = true;
        break;
      }
    }
    if (negative) continue;
    out.outflow += dt / 6.0 * (o1 + 2.0 * o2 + 2.0 * o3 + o4);
    out.t += dt;
    if (info) *info = {dt, halvings};
    return out;
  }
  throw StepCollapse("step: positivity lost after 20 step halvings at t = " +
                     std::to_string(field.t));
}

/// Steps with dt = min(stable_dt, t_end - t) until t_end.
inline NumberDensityField advance_to(NumberDensityField field, double t_end, double eta = 0.1) {
  while (field.t < t_end) {
    const double dt = std::min(stable_dt(field, eta), t_end - field.t);
    const double target = field.t + dt;
    field = step(field, dt);
    // Land exactly on t_end when the full step was accepted.
    if (target >= t_end && field.t >= t_end * (1.0 - 1e-15)) field.t = t_end;
  }
  return field;
}

// Initial data.

/// f(xi, t) = t^-(1+(1+gamma)beta) g(xi / t^beta) with g = x^-(1+gamma) h from
/// the profile. Above the stored domain h is continued by p(x_max) x^(-1/beta).
inline void set_from_profile(NumberDensityField& field, const Profile& profile) {
  const double g1 = 1.0 + field.kernel.gamma;
  const double beta = profile.params.beta;
  const double t = field.t;
  const double amp = std::pow(t, -(1.0 + g1 * beta));
  const double tb = std::pow(t, beta);
  const double p_end = profile.p.size() == profile.size()
                           ? profile.p.back()
                           : std::pow(profile.x_max(), 1.0 / beta) * profile.h.back();
  for (std::size_t k = 0; k < field.size(); ++k) {
    const double x = field.xi[k] / tb;
    const double h = x <= profile.x_max() ? profile.value(x) : p_end * std::pow(x, -1.0 / beta);
    field.f[k] = amp * std::pow(x, -g1) * h;
  }
}

/// f = B xi^-a. With a = (3+gamma)/2 this is stationary.
inline void set_power_law(NumberDensityField& field, double B, double a) {
  for (std::size_t k = 0; k < field.size(); ++k) field.f[k] = B * std::pow(field.xi[k], -a);
}

/// All density at one node.
inline void set_pulse(NumberDensityField& field, std::size_t k0, double amplitude = 1.0) {
  if (k0 >= field.size()) throw DomainError("pulse node outside the grid");
  std::fill(field.f.begin(), field.f.end(), 0.0);
  field.f[k0] = amplitude;
}

// Collapse onto the self-similar form.

/// sup over field nodes with x = xi_k / t^beta inside `window` of
/// |t^(1+(1+gamma)beta) f(xi_k) - g(x)| / g(x).
inline double self_similar_distance(const NumberDensityField& field, const Profile& profile,
                                    double beta, std::pair<double, double> window) {
  const double t = field.t;
  if (!(t >= 1.0)) throw DomainError("self_similar_distance: needs t >= 1");
  const double tb = std::pow(t, beta);
  const double lo_grid = field.xi.front() / tb;
  const double hi_grid = field.xi.back() / tb;
  if (window.first < lo_grid || window.second > hi_grid || window.second > profile.x_max() ||
      !(window.first < window.second)) {
    throw RangeError("self_similar_distance: window leaves the rescaled grid or profile");
  }
  const double g1 = 1.0 + field.kernel.gamma;
  const double amp = std::pow(t, 1.0 + g1 * beta);
  double worst = 0.0;
  for (std::size_t k = 0; k < field.size(); ++k) {
    const double x = field.xi[k] / tb;
    if (x < window.first || x > window.second) continue;
    const double g = std::pow(x, -g1) * profile.value(x);
    worst = std::max(worst, std::abs(amp * field.f[k] - g) / g);
  }
  return worst;
}

/// Middle two quartiles (in log x) of the rescaled grid common to all t in
/// [t_start, t_end], further limited to the stored profile.
inline std::pair<double, double> default_window(const NumberDensityField& field,
                                                const Profile& profile, double beta,
                                                double t_start, double t_end) {
  const double lo = field.xi.front() / std::pow(t_start, beta);
  const double hi = std::min(field.xi.back() / std::pow(t_end, beta), profile.x_max());
  if (!(hi > lo)) throw RangeError("no common rescaled domain over the requested times");
  const double span = std::log(hi / lo);
  return {lo * std::exp(0.25 * span), lo * std::exp(0.75 * span)};
}

struct CollapseReport {
  std::vector<double> times;
  std::vector<double> distances;
  std::pair<double, double> window{0.0, 0.0};
  std::vector<Moments> moments;
  std::vector<double> outflow;

  double max_distance() const {
    double d = 0.0;
    for (double v : distances) d = std::max(d, v);
    return d;
  }
};

/// Evolves `field` through the increasing `times` (all >= field.t) and
/// records D(t) at each, starting with the initial state.
inline CollapseReport track_collapse(NumberDensityField& field, const Profile& profile,
                                     double beta, const std::vector<double>& times,
                                     double eta = 0.1,
                                     std::vector<NumberDensityField>* snapshots = nullptr) {
  if (times.empty()) throw DomainError("track_collapse: no output times");
  CollapseReport rep;
  rep.window = default_window(field, profile, beta, field.t, times.back());
  auto record = [&] {
    rep.times.push_back(field.t);
    rep.distances.push_back(self_similar_distance(field, profile, beta, rep.window));
    rep.moments.push_back(moments(field));
    rep.outflow.push_back(field.outflow);
    if (snapshots) snapshots->push_back(field);
  };
  record();
  for (double t : times) {
    if (t < field.t) throw DomainError("track_collapse: times must be increasing");
    if (t == field.t) continue;
    field = advance_to(std::move(field), t, eta);
    record();
  }
  return rep;
}

/// n + 1 geometric times from t0 to t1.
inline std::vector<double> geometric_times(double t0, double t1, int n) {
  std::vector<double> out;
  for (int i = 0; i <= n; ++i) out.push_back(t0 * std::pow(t1 / t0, static_cast<double>(i) / n));
  out.back() = t1;
  return out;
}

inline nlohmann::json to_json(const CollapseReport& r) {
  nlohmann::json j{{"times", r.times},
                   {"distances", r.distances},
                   {"window", {r.window.first, r.window.second}},
                   {"max_distance", r.max_distance()}};
  nlohmann::json mo = nlohmann::json::array();
  for (std::size_t i = 0; i < r.moments.size(); ++i) {
    mo.push_back({{"number", r.moments[i].number},
                  {"mass", r.moments[i].mass},
                  {"loss_flux", r.moments[i].loss_flux},
                  {"outflow", r.outflow[i]}});
  }
  j["moments"] = mo;
  return j;
}

}  // namespace diagcoag
