#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "rmlmc/errors.hpp"

namespace rmlmc {

// Expected-work sequence t_0, ..., t_{m+1} in simulated time steps.
// t_0 = 0 and t is strictly increasing; t_{i+1} is the expected cost of
// generating the first i+1 approximation levels.
class CostProfile {
public:
  explicit CostProfile(std::vector<double> t);

  const std::vector<double>& values() const { return t_; }
  double operator[](std::size_t i) const { return t_[i]; }
  std::size_t size() const { return t_.size(); }
  // Truncation level m; the profile has m+2 entries.
  int top_level() const { return static_cast<int>(t_.size()) - 2; }

private:
  std::vector<double> t_;
};

// Residual second-moment sequence gamma_0, ..., gamma_{m+1} feeding the
// work-variance objective. Entries are nonnegative and the terminal entry
// is structurally zero (the constructor forces it rather than trusting
// input). Schedule optimization additionally requires gamma_i > 0 for
// i <= m; profiles violating that are rejected by those operations, not
// by this type, so estimated profiles with zero components can still be
// represented and inspected.
class MomentProfile {
public:
  explicit MomentProfile(std::vector<double> gamma);

  const std::vector<double>& values() const { return gamma_; }
  double operator[](std::size_t i) const { return gamma_[i]; }
  std::size_t size() const { return gamma_.size(); }
  int top_level() const { return static_cast<int>(gamma_.size()) - 2; }

  bool strictly_positive_head() const;

private:
  std::vector<double> gamma_;
};

// Survival probabilities q_0, ..., q_m of the random truncation level:
// q_0 = 1, nonincreasing, positive. Point masses p_i = q_i - q_{i+1}
// (with q_{m+1} := 0) are nonnegative and sum to one.
class LevelDistribution {
public:
  explicit LevelDistribution(std::vector<double> q);

  const std::vector<double>& values() const { return q_; }
  double operator[](std::size_t i) const { return q_[i]; }
  std::size_t size() const { return q_.size(); }
  int top_level() const { return static_cast<int>(q_.size()) - 1; }

  std::vector<double> point_masses() const;

private:
  std::vector<double> q_;
};

// Push/pop tally of the backward hull induction; the linear-time bound is
// asserted on this counter, not on wall-clock time.
struct HullOpCounts {
  std::size_t pushes = 0;
  std::size_t pops = 0;
  std::size_t total() const { return pushes + pops; }
};

// Output of the hull computation. lower_hull fills support and
// gamma_prime only; optimal_distribution also fills theta and q_star.
struct HullResult {
  std::vector<std::size_t> support; // increasing, contains 0 and m+1
  std::vector<double> gamma_prime;  // length m+2, convex minorant values
  std::vector<double> theta;        // length m+1, segment slopes (filled by optimal_distribution)
  std::optional<LevelDistribution> q_star;
  HullOpCounts ops;
};

// One coupled realization (Y_0, ..., Y_n) sharing a single driving path,
// with the number of time steps simulated to produce it.
struct LevelPathBundle {
  std::vector<double> y;
  double work = 0.0;
};

// One estimator draw: the telescoped value, the sampled truncation level,
// and the steps actually simulated.
struct EstimatorSample {
  double value = 0.0;
  int level = 0;
  double work = 0.0;
};

} // namespace rmlmc
