#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "diagcoag/core.hpp"
#include "diagcoag/errors.hpp"
#include "diagcoag/local_expansion.hpp"
#include "diagcoag/profile.hpp"
#include "diagcoag/profile_integrator.hpp"

namespace diagcoag {

struct ProfileOptions {
  double c = 1.0;
  std::optional<double> z;
  std::optional<double> epsilon;
  int m = 64;
  int octaves = 20;  ///< depth of the local expansion grid below z
  /// Raw (unnormalized) right end. Empty: max(2^40 z, tail requirement).
  std::optional<double> x_max;
  double tol = 1e-12;
  int max_iter = 20000;
  int max_refinements = 2;  ///< restarts at doubled m after an invariant abort
  bool normalize = true;
  /// Auto x_max asks for x_lo^(-1/beta) <= tail_accuracy at the bottom of the
  /// slope window, x_lo = x_max / 10^slope_decades (normalized coordinate).
  double tail_accuracy = 5e-3;
  double slope_decades = 4.0;
  int max_octaves = 6000;
};

/// Stages of one profile construction.
struct ProfileRun {
  SimilarityParams params;
  ExpansionGrid expansion;
  double kappa = 0.0;
  Profile raw;      ///< unnormalized, c as requested
  Profile profile;  ///< normalized when possible, else == raw
  int m_used = 64;
  /// The automatic tail requirement exceeded the octave budget or the double
  /// range and x_max was clamped to that limit.
  bool tail_clamped = false;
  std::string stage;  ///< last stage reached (for diagnostics)
};

/// Failure of a pipeline stage; `stage` names it (expansion, integrate, normalize).
class PipelineError : public Error {
 public:
  PipelineError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

namespace detail {

inline Profile seed_profile(const SimilarityParams& params, const ProfileOptions& opt, int m,
                            double z, double eps, ExpansionGrid& expansion) {
  ExpansionOptions eo;
  eo.c = opt.c;
  eo.z = z;
  eo.epsilon = eps;
  eo.nodes_per_octave = m;
  eo.octaves = opt.octaves;
  eo.tol = opt.tol;
  eo.max_iter = opt.max_iter;
  expansion = fixed_point(params, eo);
  return h_from_expansion(expansion, params);
}

}  // namespace detail

/// Solve for j, integrate the delay equation outwards and normalize.
inline ProfileRun build_profile(const SimilarityParams& params, const ProfileOptions& opt = {}) {
  ProfileRun run;
  run.params = params;
  if (opt.c < 0.0) throw DomainError("c must be >= 0");
  const double eps = opt.epsilon.value_or(0.5 * params.mu);
  if (!(eps > 0.0 && eps < params.mu)) throw DomainError("epsilon must lie in (0, mu)");
  run.kappa = contraction_margin(params, eps);

  double z = 0.0;
  try {
    z = opt.z.value_or(default_z(params, opt.c, eps));
  } catch (const Error& e) {
    throw PipelineError("expansion", e.what());
  }

  int m = opt.m;
  for (int attempt = 0;; ++attempt) {
    try {
      run.stage = "expansion";
      Profile seed;
      for (int shrink = 0;; ++shrink) {
        try {
          seed = detail::seed_profile(params, opt, m, z, eps, run.expansion);
          break;
        } catch (const InvariantViolation&) {
          if (opt.z || shrink >= 20) throw;
          z *= 0.5;
        }
      }

      run.stage = "integrate";
      const double base = std::ldexp(z, 40);
      Profile raw = integrate(seed, opt.x_max.value_or(base));
      if (!opt.x_max && !seed.is_constant()) {
        // All sizes in log2 so that extreme parameters cannot overflow.
        const double log2_cap = std::min(std::log2(z) + opt.max_octaves, 1000.0);
        while (!(raw.h.back() < 0.5)) {
          const double next = std::log2(raw.x_max()) + 40.0;
          if (next > log2_cap) throw RangeError("h = 1/2 not reached within max_octaves");
          raw = integrate(raw, std::exp2(next));
        }
        const double a = half_point(raw);
        double log2_needed = std::log2(base);
        if (!params.degenerate) {
          log2_needed = std::max(log2_needed, std::log2(a) - params.beta * std::log2(opt.tail_accuracy) +
                                                  opt.slope_decades * std::log2(10.0));
        } else {
          log2_needed = std::max(log2_needed, std::log2(a) + 6.0);
        }
        if (log2_needed > log2_cap) {
          log2_needed = log2_cap;
          run.tail_clamped = true;
        }
        const double needed = std::exp2(log2_needed);
        if (raw.x_max() < needed) raw = integrate(raw, needed);
      }
      run.raw = std::move(raw);
      run.m_used = m;
      break;
    } catch (const InvariantViolation& e) {
      if (attempt >= opt.max_refinements) throw PipelineError(run.stage, e.what());
      m *= 2;
    } catch (const PipelineError&) {
      throw;
    } catch (const Error& e) {
      throw PipelineError(run.stage, e.what());
    }
  }

  run.profile = run.raw;
  if (opt.normalize && !run.raw.is_constant()) {
    run.stage = "normalize";
    try {
      run.profile = normalize(run.raw);
    } catch (const Error& e) {
      throw PipelineError("normalize", e.what());
    }
  }
  run.stage = "done";
  return run;
}

}  // namespace diagcoag
