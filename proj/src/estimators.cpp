#include "rmlmc/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rmlmc {

int TruncationSampler::sample() {
  const double u = stream_.uniform01();
  // S = max{ i : q_i > u }; q_0 = 1 > u always.
  for (int i = q_.top_level(); i > 0; --i) {
    if (q_[static_cast<std::size_t>(i)] > u) return i;
  }
  return 0;
}

CoupledSumEstimator::CoupledSumEstimator(LevelDistribution q, BundleGenerator bundle_gen,
                                         RngStream level_stream, RngStream path_stream)
    : level_sampler_(std::move(q), std::move(level_stream)),
      path_stream_(std::move(path_stream)),
      bundle_gen_(std::move(bundle_gen)) {
  if (level_sampler_.stream_id() == path_stream_.id()) {
    throw ContractViolation("level sampler and path generator must use distinct RNG streams");
  }
}

EstimatorSample CoupledSumEstimator::sample() {
  const int level = level_sampler_.sample();
  const LevelPathBundle bundle = bundle_gen_(level, path_stream_);
  if (bundle.y.size() < static_cast<std::size_t>(level) + 1) {
    throw ContractViolation("bundle provides " + std::to_string(bundle.y.size()) +
                            " levels, need " + std::to_string(level + 1));
  }
  const auto& q = level_sampler_.distribution();
  double value = 0.0;
  double previous = 0.0; // Y_{-1} = 0
  for (int i = 0; i <= level; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    value += (bundle.y[ui] - previous) / q[ui];
    previous = bundle.y[ui];
  }
  return {value, level, bundle.work};
}

IndependentSumEstimator::IndependentSumEstimator(LevelDistribution q, DeltaGenerator delta_gen,
                                                 RngStream level_stream, RngStream delta_stream)
    : level_sampler_(std::move(q), std::move(level_stream)),
      delta_stream_(std::move(delta_stream)),
      delta_gen_(std::move(delta_gen)) {
  if (level_sampler_.stream_id() == delta_stream_.id()) {
    throw ContractViolation("level sampler and increment generator must use distinct RNG streams");
  }
}

EstimatorSample IndependentSumEstimator::sample() {
  const int level = level_sampler_.sample();
  const auto& q = level_sampler_.distribution();
  double value = 0.0;
  double work = 0.0;
  for (int i = 0; i <= level; ++i) {
    const auto [delta, delta_work] = delta_gen_(i, delta_stream_);
    value += delta / q[static_cast<std::size_t>(i)];
    work += delta_work;
  }
  return {value, level, work};
}

namespace {

double variance_sum(const LevelDistribution& q, const MomentProfile& eta, const char* what) {
  if (eta.size() != q.size() + 1) {
    throw InputError(std::string(what) + ": profile needs m+2 entries for a length m+1 distribution");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    total += (eta[i] - eta[i + 1]) / q[i];
  }
  return total;
}

} // namespace

double coupled_variance_formula(const LevelDistribution& q, const MomentProfile& eta_bar) {
  return variance_sum(q, eta_bar, "coupled_variance_formula");
}

double independent_variance_formula(const LevelDistribution& q, const MomentProfile& eta_tilde) {
  return variance_sum(q, eta_tilde, "independent_variance_formula");
}

double coupled_second_moment_tail_form(const LevelDistribution& q, std::span<const double> dist_sq) {
  if (dist_sq.size() != q.size() + 1) {
    throw InputError("coupled_second_moment: dist_sq needs m+2 entries");
  }
  const std::size_t m = q.size() - 1;
  // ||Y_m||^2 + sum_{i=0}^{m-1} (1/q_{i+1} - 1/q_i) ||Y_i - Y_m||^2.
  double total = dist_sq[0];
  for (std::size_t i = 0; i + 1 <= m; ++i) {
    total += (1.0 / q[i + 1] - 1.0 / q[i]) * dist_sq[i + 1];
  }
  return total;
}

double coupled_second_moment_level_form(const LevelDistribution& q, std::span<const double> dist_sq) {
  if (dist_sq.size() != q.size() + 1) {
    throw InputError("coupled_second_moment: dist_sq needs m+2 entries");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    total += (dist_sq[i] - dist_sq[i + 1]) / q[i];
  }
  return total;
}

namespace {

// Accumulates partial sums of a nonnegative-term series and classifies
// the tail. Increments already below tolerance decide immediately;
// otherwise the decay exponent p of increment ~ i^{-p}, estimated across
// one doubling of the index, separates summable from divergent tails.
// What remains is reported as inconclusive.
template <typename Summand>
ConditionReport run_condition_check(Summand summand, const ConditionOptions& options) {
  ConditionReport report;
  report.partial_sums.reserve(std::min<std::size_t>(options.n_terms, 1 << 20));

  double sum = 0.0;
  std::size_t quiet_run = 0; // consecutive increments below tolerance
  bool aborted_nonfinite = false;

  for (std::size_t i = 0; i < options.n_terms; ++i) {
    const double term = summand(i);
    if (!std::isfinite(term)) {
      aborted_nonfinite = true;
      break;
    }
    if (term < 0.0) {
      throw InputError("condition series produced a negative term at index " + std::to_string(i));
    }
    sum += term;
    report.partial_sums.push_back(sum);
    quiet_run = (term <= options.increment_tol) ? quiet_run + 1 : 0;
    if (quiet_run >= 32) break; // settled well below tolerance
  }
  const std::size_t evaluated = report.partial_sums.size();
  report.n_terms = evaluated;
  if (evaluated == 0) return report;

  const double final_sum = report.partial_sums.back();
  const double final_inc =
      evaluated >= 2 ? report.partial_sums[evaluated - 1] - report.partial_sums[evaluated - 2]
                     : report.partial_sums[0];

  if (quiet_run >= 32 || final_inc <= options.increment_tol) {
    report.verdict = ConditionReport::Verdict::converging;
    report.decay_exponent = std::numeric_limits<double>::infinity();
    return report;
  }

  if (evaluated >= 16 && !aborted_nonfinite) {
    const std::size_t hi = evaluated - 1;
    const std::size_t lo = hi / 2;
    const double inc_hi = report.partial_sums[hi] - report.partial_sums[hi - 1];
    const double inc_lo = report.partial_sums[lo] - report.partial_sums[lo - 1];
    if (inc_hi > 0.0 && inc_lo > 0.0) {
      report.decay_exponent = std::log(inc_lo / inc_hi) /
                              std::log(static_cast<double>(hi) / static_cast<double>(lo));
      if (report.decay_exponent >= 1.1) {
        report.verdict = ConditionReport::Verdict::converging;
        return report;
      }
    }
  }

  if (final_sum > options.divergence_bound && final_inc > options.increment_tol) {
    report.verdict = ConditionReport::Verdict::diverging;
  }
  return report;
}

// Validates that q behaves like a level distribution along the evaluated
// prefix: positive, nonincreasing, q_0 = 1.
class CheckedQ {
public:
  explicit CheckedQ(const SequenceRule& q) : q_(q) {
    if (q_(0) != 1.0) throw InputError("level-distribution rule must have q_0 = 1");
  }

  double operator()(std::size_t i) {
    const double value = q_(i);
    if (std::isnan(value) || !(value > 0.0)) {
      throw InputError("level-distribution rule must be positive");
    }
    if (value > prev_) {
      throw InputError("level-distribution rule must be nonincreasing");
    }
    prev_ = value;
    return value;
  }

private:
  const SequenceRule& q_;
  double prev_ = 1.0;
};

double checked_nonneg(const SequenceRule& rule, std::size_t i, const char* what) {
  const double value = rule(i);
  if (std::isnan(value) || value < 0.0) {
    throw InputError(std::string(what) + " must be nonnegative");
  }
  return value;
}

} // namespace

ConditionReport check_coupled_condition(const SequenceRule& q, const SequenceRule& gamma,
                                        const ConditionOptions& options) {
  CheckedQ checked(q);
  double q_i = checked(0);
  auto summand = [&, q_i](std::size_t i) mutable {
    const double q_next = checked(i + 1);
    const double term = (1.0 / q_next - 1.0 / q_i) * checked_nonneg(gamma, i, "gamma");
    q_i = q_next;
    return term;
  };
  return run_condition_check(summand, options);
}

ConditionReport check_rhee_glynn_condition(const SequenceRule& q, const SequenceRule& gamma,
                                           const ConditionOptions& options) {
  CheckedQ checked(q);
  checked(0);
  // Terms of sum_{j>=1} gamma_{j-1} / q_j, evaluated at j = i + 1.
  auto summand = [&](std::size_t i) {
    return checked_nonneg(gamma, i, "gamma") / checked(i + 1);
  };
  return run_condition_check(summand, options);
}

ConditionReport check_independent_condition(const SequenceRule& q, const SequenceRule& var_delta,
                                            const SequenceRule& bias_sq,
                                            const ConditionOptions& options) {
  CheckedQ checked(q);
  double q_i = checked(0);
  auto summand = [&, q_i](std::size_t i) mutable {
    const double q_next = checked(i + 1);
    const double term = checked_nonneg(var_delta, i, "var_delta") / q_i +
                        (1.0 / q_next - 1.0 / q_i) * checked_nonneg(bias_sq, i, "bias_sq");
    q_i = q_next;
    return term;
  };
  return run_condition_check(summand, options);
}

MomentProfile mu_tilde_profile(std::span<const double> var_delta, std::span<const double> bias, int m) {
  if (m < 0) throw InputError("mu_tilde_profile needs m >= 0");
  const auto um = static_cast<std::size_t>(m);
  if (var_delta.size() < um + 1 || bias.size() < um + 1) {
    throw InputError("mu_tilde_profile inputs need at least m+1 entries");
  }
  for (std::size_t j = 0; j <= um; ++j) {
    if (std::isnan(var_delta[j]) || var_delta[j] < 0.0) {
      throw InputError("mu_tilde_profile: increment variances must be nonnegative");
    }
  }
  std::vector<double> eta(um + 2, 0.0);
  // Tail sums of the increment variances, accumulated once from the top.
  double tail = 0.0;
  for (std::size_t i = um + 1; i-- > 0;) {
    if (i <= um) tail += var_delta[i];
    eta[i] = (i == 0 ? 0.0 : bias[i - 1] * bias[i - 1]) + tail;
  }
  return MomentProfile(std::move(eta));
}

} // namespace rmlmc
