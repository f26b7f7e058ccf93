#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "rmlmc/rng.hpp"
#include "rmlmc/types.hpp"

namespace rmlmc {

// Scalar SDE dX = a(X,t) dt + b(X,t) dW with the diffusion derivative
// needed by the Milstein correction. All three callbacks are constant-time.
struct SdeModel {
  std::function<double(double, double)> drift;
  std::function<double(double, double)> diffusion;
  std::function<double(double, double)> diffusion_dx;
  double x0 = 1.0;
  double horizon = 1.0;
};

struct GbmParams {
  double r = 0.05;      // risk-free rate per year
  double sigma = 0.2;   // volatility per sqrt-year
  double strike = 1.0;
  double x0 = 1.0;
};

void validate(const GbmParams& params);

SdeModel make_gbm_model(const GbmParams& params, double horizon);

using Payoff = std::function<double(double)>;

// Discounted European call payoff x -> e^{-rT} max(x - K, 0).
Payoff make_discounted_call_payoff(double strike, double r, double horizon);

// Terminal value of the Milstein recursion at dyadic level `level`
// (2^level steps of size T 2^{-level}); increments are the caller's
// N(0, dt) draws, exactly 2^level of them.
double milstein_path(const SdeModel& model, int level, std::span<const double> increments);

// Sums adjacent pairs: the level-(i-1) increments of a level-i path.
std::vector<double> aggregate_pairwise(std::span<const double> increments);

// (Y_0, ..., Y_top) from a single fine Brownian path: level-i increments
// are pairwise-aggregated blocks of the fine ones, every level runs the
// Milstein recursion, and work = 2^{top+1} - 1 steps.
LevelPathBundle coupled_bundle(const SdeModel& model, const Payoff& payoff, int top_level,
                               RngStream& rng);
LevelPathBundle coupled_bundle_from_increments(const SdeModel& model, const Payoff& payoff,
                                               int top_level, std::span<const double> fine_increments);

// One independent draw of Y_level - Y_{level-1} (fine minus coarse on a
// shared path; plain Y_0 at level zero) and its cost in steps:
// 1 for level 0, 3 * 2^{level-1} otherwise.
std::pair<double, double> independent_delta(const SdeModel& model, const Payoff& payoff, int level,
                                            RngStream& rng);

double black_scholes_call(const GbmParams& params, double horizon);

} // namespace rmlmc
