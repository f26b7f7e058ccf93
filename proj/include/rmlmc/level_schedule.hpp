#pragma once

#include "rmlmc/types.hpp"

namespace rmlmc {

// Greatest convex minorant of the points (t_i, gamma_i), computed by
// backward induction in amortized O(m): each index is pushed and popped
// at most once (ops counter in the result). Fills support and
// gamma_prime; interior points are interpolated on their segment.
// Requires gamma_i > 0 for i <= m.
HullResult lower_hull(const CostProfile& t, const MomentProfile& gamma);

// Lower hull plus the segment slopes theta_i and the work-variance
// optimal truncation-level distribution q*_i = sqrt(theta_i / theta_0).
HullResult optimal_distribution(const CostProfile& t, const MomentProfile& gamma);

// Work-variance product
//   R(q) = (sum_i q_i (t_{i+1} - t_i)) * (sum_i (gamma_i - gamma_{i+1}) / q_i),
// the expected sampling cost times the estimator variance for a matching
// moment profile.
double objective_R(const LevelDistribution& q, const CostProfile& t, const MomentProfile& gamma);

// Independent minimizer of objective_R for cross-validation: nested grid
// refinement over the ratio coordinates s_i = q_i / q_{i-1} followed by
// exact single-coordinate descent sweeps, from several starts. Small m
// only (m <= 10); converges to relative tolerance 1e-6.
LevelDistribution optimal_distribution_oracle(const CostProfile& t, const MomentProfile& gamma);

// Geometric tail extension q_i = 2^{-3(i-m)/2} q_m for i >= m. i = m
// returns q_m itself (exponent zero); i < m is rejected.
double extend_tail(const LevelDistribution& q_star, int m, int i);

} // namespace rmlmc
