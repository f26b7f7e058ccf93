#include "rmlmc/level_schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace rmlmc {

namespace {

void check_shapes(const CostProfile& t, const MomentProfile& gamma) {
  if (t.size() != gamma.size()) {
    throw InputError("cost and moment profiles must have equal length, got " +
                     std::to_string(t.size()) + " and " + std::to_string(gamma.size()));
  }
  if (!gamma.strictly_positive_head()) {
    throw DegenerateProfileError("moment profile must be strictly positive below the terminal entry");
  }
}

// True when the middle point (tb, gb) lies strictly below the segment
// from (ta, ga) to (tc, gc), ta < tb < tc. Cross-product form avoids the
// division; ties (collinear points) count as not-below, so collinear
// middles get discarded from the support.
bool strictly_below(double ta, double ga, double tb, double gb, double tc, double gc) {
  return (gb - ga) * (tc - ta) < (gc - ga) * (tb - ta);
}

} // namespace

HullResult lower_hull(const CostProfile& t, const MomentProfile& gamma) {
  check_shapes(t, gamma);
  const std::size_t n = t.size(); // m + 2 points
  const int m = t.top_level();

  HullResult result;
  // Backward induction over left endpoints; stack.back() is the leftmost
  // point of the hull built so far over {j, ..., m+1}.
  std::vector<std::size_t> stack;
  stack.reserve(n);
  stack.push_back(static_cast<std::size_t>(m + 1));
  stack.push_back(static_cast<std::size_t>(m));
  result.ops.pushes += 2;

  for (int j = m - 1; j >= 0; --j) {
    const auto uj = static_cast<std::size_t>(j);
    while (stack.size() >= 2) {
      const std::size_t b = stack[stack.size() - 1];
      const std::size_t c = stack[stack.size() - 2];
      if (strictly_below(t[uj], gamma[uj], t[b], gamma[b], t[c], gamma[c])) break;
      stack.pop_back();
      ++result.ops.pops;
    }
    stack.push_back(uj);
    ++result.ops.pushes;
  }

  result.support.assign(stack.rbegin(), stack.rend());

  // Interpolate gamma on consecutive support points.
  result.gamma_prime.resize(n);
  for (std::size_t s = 0; s + 1 < result.support.size(); ++s) {
    const std::size_t lo = result.support[s];
    const std::size_t hi = result.support[s + 1];
    const double slope_num = gamma[hi] - gamma[lo];
    const double slope_den = t[hi] - t[lo];
    result.gamma_prime[lo] = gamma[lo];
    for (std::size_t i = lo + 1; i < hi; ++i) {
      result.gamma_prime[i] = gamma[lo] + slope_num * ((t[i] - t[lo]) / slope_den);
    }
  }
  result.gamma_prime.back() = gamma[n - 1];
  return result;
}

HullResult optimal_distribution(const CostProfile& t, const MomentProfile& gamma) {
  HullResult result = lower_hull(t, gamma);
  const int m = t.top_level();

  // theta_i is the hull slope over the segment containing [t_i, t_{i+1}];
  // computed from the segment endpoints so it is exactly constant within
  // a segment.
  result.theta.resize(static_cast<std::size_t>(m) + 1);
  for (std::size_t s = 0; s + 1 < result.support.size(); ++s) {
    const std::size_t lo = result.support[s];
    const std::size_t hi = result.support[s + 1];
    const double slope = (gamma[hi] - gamma[lo]) / (t[hi] - t[lo]);
    for (std::size_t i = lo; i < hi && i <= static_cast<std::size_t>(m); ++i) {
      result.theta[i] = slope;
    }
  }

  const double theta0 = result.theta[0];
  if (!(theta0 < 0.0)) {
    throw DegenerateProfileError("leading hull slope is not negative; optimal distribution undefined");
  }
  std::vector<double> q(static_cast<std::size_t>(m) + 1);
  q[0] = 1.0;
  for (std::size_t i = 1; i < q.size(); ++i) {
    // Slopes within a segment are bit-equal, and across segments the hull
    // orders them; the clamp only absorbs division-rounding ties.
    q[i] = std::min(q[i - 1], std::sqrt(result.theta[i] / theta0));
  }
  result.q_star = LevelDistribution(std::move(q));
  return result;
}

double objective_R(const LevelDistribution& q, const CostProfile& t, const MomentProfile& gamma) {
  if (t.size() != gamma.size() || q.size() + 1 != t.size()) {
    throw InputError("objective_R: q needs m+1 entries and t, gamma m+2");
  }
  double work = 0.0;
  double variance = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    work += q[i] * (t[i + 1] - t[i]);
    variance += (gamma[i] - gamma[i + 1]) / q[i];
  }
  return work * variance;
}

namespace {

// Objective as a function of the ratio coordinates s_i = q_i / q_{i-1},
// i = 1..m, each in (0, 1]. The chain constraints become a box, so
// coordinate moves stay feasible and tied blocks shift together.
class RatioObjective {
public:
  RatioObjective(const CostProfile& t, const MomentProfile& gamma)
      : t_(t.values()), gamma_(gamma.values()), m_(t.top_level()) {}

  int m() const { return m_; }

  std::vector<double> to_q(const std::vector<double>& s) const {
    std::vector<double> q(static_cast<std::size_t>(m_) + 1);
    q[0] = 1.0;
    for (int i = 1; i <= m_; ++i) q[i] = q[i - 1] * s[static_cast<std::size_t>(i - 1)];
    return q;
  }

  double eval_q(const std::vector<double>& q) const {
    double work = 0.0;
    double variance = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      work += q[i] * (t_[i + 1] - t_[i]);
      variance += (gamma_[i] - gamma_[i + 1]) / q[i];
    }
    return work * variance;
  }

  double eval(const std::vector<double>& s) const { return eval_q(to_q(s)); }

  // Exact minimizer over coordinate k (0-based; controls s_{k+1}) with the
  // others fixed. Splitting work and variance into parts that scale with
  // s and parts that do not gives g(s) = (a + c s)(b + d / s) with
  // a, c, d > 0, so the minimum is at sqrt(a d / (c b)) clamped to (0, 1],
  // or at s = 1 when b <= 0.
  double coordinate_min(const std::vector<double>& s, std::size_t k) const {
    const std::vector<double> q = to_q(s);
    const double sk = s[k];
    double a = 0.0, c = 0.0, b = 0.0, d = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double dt = t_[i + 1] - t_[i];
      const double dg = gamma_[i] - gamma_[i + 1];
      if (i <= k) {
        a += q[i] * dt;
        b += dg / q[i];
      } else {
        c += q[i] * dt;
        d += dg / q[i];
      }
    }
    c /= sk;
    d *= sk;
    if (b <= 0.0) return 1.0;
    const double root = std::sqrt((a * d) / (c * b));
    return std::min(1.0, root);
  }

private:
  const std::vector<double>& t_;
  const std::vector<double>& gamma_;
  int m_;
};

// One pass of grid refinement: every coordinate in turn is set to the
// best value on a 50-point log grid spanning [lo_i, hi_i].
void grid_sweep(const RatioObjective& obj, std::vector<double>& s, const std::vector<double>& lo,
                const std::vector<double>& hi, int points) {
  for (std::size_t k = 0; k < s.size(); ++k) {
    double best_val = obj.eval(s);
    double best_s = s[k];
    const double llo = std::log(lo[k]);
    const double lhi = std::log(hi[k]);
    for (int g = 0; g < points; ++g) {
      const double frac = points > 1 ? static_cast<double>(g) / (points - 1) : 0.0;
      const double cand = std::min(1.0, std::exp(llo + frac * (lhi - llo)));
      s[k] = cand;
      const double val = obj.eval(s);
      if (val < best_val) {
        best_val = val;
        best_s = cand;
      }
    }
    s[k] = best_s;
  }
}

std::vector<double> refine_from(const RatioObjective& obj, std::vector<double> s) {
  const std::size_t dim = s.size();
  constexpr int kRounds = 3;
  constexpr int kPoints = 50;
  std::vector<double> lo(dim, 1e-9);
  std::vector<double> hi(dim, 1.0);
  for (int round = 0; round < kRounds; ++round) {
    grid_sweep(obj, s, lo, hi, kPoints);
    // Zoom each coordinate's grid around its current value.
    for (std::size_t k = 0; k < dim; ++k) {
      const double width = std::log(hi[k] / lo[k]) / (kPoints - 1);
      lo[k] = std::max(1e-12, s[k] * std::exp(-2.0 * width));
      hi[k] = std::min(1.0, s[k] * std::exp(2.0 * width));
    }
  }
  // Exact coordinate descent to polish the grid solution.
  double value = obj.eval(s);
  for (int sweep = 0; sweep < 20000; ++sweep) {
    double max_move = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double next = obj.coordinate_min(s, k);
      max_move = std::max(max_move, std::abs(next - s[k]) / std::max(next, s[k]));
      s[k] = next;
    }
    const double new_value = obj.eval(s);
    if (max_move < 1e-13 || value - new_value <= 1e-15 * value) {
      value = new_value;
      break;
    }
    value = new_value;
  }
  return s;
}

} // namespace

LevelDistribution optimal_distribution_oracle(const CostProfile& t, const MomentProfile& gamma) {
  check_shapes(t, gamma);
  const int m = t.top_level();
  if (m > 10) {
    throw InputError("optimal_distribution_oracle is restricted to m <= 10, got m = " + std::to_string(m));
  }
  if (m < 1) throw InputError("optimal_distribution_oracle needs m >= 1");

  const RatioObjective obj(t, gamma);
  const std::size_t dim = static_cast<std::size_t>(m);

  std::vector<std::vector<double>> starts;
  starts.emplace_back(dim, 1.0);                           // q == 1
  starts.emplace_back(dim, std::exp2(-1.5));               // q_i = 2^{-3i/2}
  starts.emplace_back(dim, 0.5);                           // q_i = 2^{-i}
  std::vector<double> steep(dim, 0.05);
  starts.push_back(std::move(steep));

  std::vector<double> best;
  double best_value = std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    std::vector<double> s = refine_from(obj, start);
    const double value = obj.eval(s);
    if (value < best_value) {
      best_value = value;
      best = std::move(s);
    }
  }
  return LevelDistribution(obj.to_q(best));
}

double extend_tail(const LevelDistribution& q_star, int m, int i) {
  if (q_star.top_level() != m) {
    throw InputError("extend_tail: distribution has top level " + std::to_string(q_star.top_level()) +
                     ", expected " + std::to_string(m));
  }
  if (i < m) throw InputError("extend_tail requires i >= m");
  return std::exp2(-1.5 * static_cast<double>(i - m)) * q_star[static_cast<std::size_t>(m)];
}

} // namespace rmlmc
