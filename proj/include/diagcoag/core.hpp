#pragma once

#include <string>

#include "diagcoag/mu_solver.hpp"
#include "diagcoag/params.hpp"
#include "json.hpp"

namespace diagcoag {

/// Builds the full parameter set for (gamma, beta) and solves for mu.
/// beta == beta_star is accepted and flagged `degenerate`.
inline SimilarityParams make_params(double gamma, double beta) {
  SimilarityParams p;
  p.kernel = make_kernel(gamma);
  p.beta_star = beta_star_of(gamma);
  if (!(beta >= p.beta_star)) {
    throw DomainError("beta must be >= beta_star = " + std::to_string(p.beta_star) +
                      " (got " + std::to_string(beta) + ")");
  }
  p.beta = beta;
  p.rho = rho_from_beta(gamma, beta);
  p.degenerate = (beta == p.beta_star);
  p.mu = solve_mu(gamma, beta).mu;
  return p;
}

inline nlohmann::json to_json(const SimilarityParams& p) {
  return nlohmann::json{{"gamma", p.gamma()},      {"beta", p.beta},
                        {"beta_star", p.beta_star}, {"theta", p.theta()},
                        {"rho", p.rho},            {"mu", p.mu}};
}

inline nlohmann::json to_json(const MuSolveReport& r) {
  return nlohmann::json{{"mu", r.mu},
                        {"residual", r.residual},
                        {"iterations", r.iterations},
                        {"bracket", {r.bracket.first, r.bracket.second}},
                        {"convexity_sample", r.convexity_sample},
                        {"degenerate", r.degenerate}};
}

}  // namespace diagcoag
