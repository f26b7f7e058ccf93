#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "rmlmc/rng.hpp"
#include "rmlmc/types.hpp"

namespace rmlmc {

// Draws the random truncation level S with Pr(S >= i) = q_i for
// 0 <= i <= m and Pr(S <= m) = 1, by inverse transform on a single
// uniform from its own stream.
class TruncationSampler {
public:
  TruncationSampler(LevelDistribution q, RngStream stream)
      : q_(std::move(q)), stream_(std::move(stream)) {}

  int sample();

  const LevelDistribution& distribution() const { return q_; }
  std::uint64_t stream_id() const { return stream_.id(); }

private:
  LevelDistribution q_;
  RngStream stream_;
};

// Produces (Y_0, ..., Y_top) from one underlying random path.
using BundleGenerator = std::function<LevelPathBundle(int top_level, RngStream&)>;
// Produces one draw of Delta_i ~ Y_i - Y_{i-1} and its cost in steps.
using DeltaGenerator = std::function<std::pair<double, double>(int level, RngStream&)>;

// Randomized telescoping sum over a coupled level bundle:
//   value = sum_{i<=S} (Y_i - Y_{i-1}) / q_i,  Y_{-1} = 0.
// The level sampler and the path generator must use distinct streams;
// identical stream ids are rejected at construction.
class CoupledSumEstimator {
public:
  CoupledSumEstimator(LevelDistribution q, BundleGenerator bundle_gen, RngStream level_stream,
                      RngStream path_stream);

  EstimatorSample sample();

private:
  TruncationSampler level_sampler_;
  RngStream path_stream_;
  BundleGenerator bundle_gen_;
};

// Same telescoping form with each increment drawn independently:
//   value = sum_{i<=S} delta_i / q_i,  delta_i ~ Y_i - Y_{i-1}.
class IndependentSumEstimator {
public:
  IndependentSumEstimator(LevelDistribution q, DeltaGenerator delta_gen, RngStream level_stream,
                          RngStream delta_stream);

  EstimatorSample sample();

private:
  TruncationSampler level_sampler_;
  RngStream delta_stream_;
  DeltaGenerator delta_gen_;
};

// Variance of the truncated coupled sum from its moment profile:
//   sum_i (eta_i - eta_{i+1}) / q_i
// with eta_0 = Var(Y_m), eta_i = ||Y_{i-1} - Y_m||^2, eta_{m+1} = 0.
double coupled_variance_formula(const LevelDistribution& q, const MomentProfile& eta_bar);

// Same form for the independent sum, with
//   eta_i = (E(Y_{i-1} - Y_m))^2 + sum_{j>=i} Var(Y_j - Y_{j-1}).
double independent_variance_formula(const LevelDistribution& q, const MomentProfile& eta_tilde);

// Second moment of the truncated coupled sum, in its two algebraically
// equal forms. dist_sq[i] = ||Y_{i-1} - Y_m||^2 for i = 0..m+1, so
// dist_sq[0] = ||Y_m||^2 (uncentered) and dist_sq[m+1] = 0.
double coupled_second_moment_tail_form(const LevelDistribution& q, std::span<const double> dist_sq);
double coupled_second_moment_level_form(const LevelDistribution& q, std::span<const double> dist_sq);

// Diagnostic partial-sum report for the asymptotic series criteria. The
// verdict is heuristic: finite truncation cannot prove convergence.
struct ConditionReport {
  enum class Verdict { converging, diverging, inconclusive };

  std::vector<double> partial_sums; // nondecreasing
  Verdict verdict = Verdict::inconclusive;
  std::size_t n_terms = 0;      // terms actually evaluated
  double decay_exponent = 0.0;  // estimated p in increment ~ i^{-p}
};

struct ConditionOptions {
  std::size_t n_terms = 10000;
  double increment_tol = 1e-12;   // increments below this count as converged
  double divergence_bound = 5.0;  // partial sums above this with live increments diverge
};

using SequenceRule = std::function<double(std::size_t)>;

// Necessary-and-sufficient criterion for the coupled sum:
//   sum_i (1/q_{i+1} - 1/q_i) gamma_i,  gamma_i = ||Y_i - Y||^2.
ConditionReport check_coupled_condition(const SequenceRule& q, const SequenceRule& gamma,
                                        const ConditionOptions& options = {});

// The older sufficient criterion, for comparison:
//   sum_{i>=1} gamma_{i-1} / q_i.
ConditionReport check_rhee_glynn_condition(const SequenceRule& q, const SequenceRule& gamma,
                                           const ConditionOptions& options = {});

// Necessary-and-sufficient criterion for the independent sum:
//   sum_i ( Var(Y_i - Y_{i-1})/q_i + (1/q_{i+1} - 1/q_i) (E(Y_i - Y))^2 ).
ConditionReport check_independent_condition(const SequenceRule& q, const SequenceRule& var_delta,
                                            const SequenceRule& bias_sq,
                                            const ConditionOptions& options = {});

// Assembles the independent-sum moment profile from per-level increment
// variances and the bias terms bias[j] = E(Y_j - Y_m):
//   eta_0 = sum_{j<=m} var_delta[j]
//   eta_i = bias[i-1]^2 + sum_{j=i..m} var_delta[j],  1 <= i <= m
//   eta_{m+1} = 0.
MomentProfile mu_tilde_profile(std::span<const double> var_delta, std::span<const double> bias, int m);

} // namespace rmlmc
