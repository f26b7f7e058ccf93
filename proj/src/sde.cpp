#include "rmlmc/sde.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rmlmc {

void validate(const GbmParams& params) {
  if (!(params.sigma > 0.0)) throw InputError("sigma must be positive");
  if (!(params.x0 > 0.0)) throw InputError("x0 must be positive");
  if (params.strike < 0.0) throw InputError("strike must be nonnegative");
}

SdeModel make_gbm_model(const GbmParams& params, double horizon) {
  validate(params);
  if (!(horizon > 0.0)) throw InputError("horizon must be positive");
  const double r = params.r;
  const double sigma = params.sigma;
  return SdeModel{
      [r](double x, double) { return r * x; },
      [sigma](double x, double) { return sigma * x; },
      [sigma](double, double) { return sigma; },
      params.x0,
      horizon,
  };
}

Payoff make_discounted_call_payoff(double strike, double r, double horizon) {
  const double discount = std::exp(-r * horizon);
  return [discount, strike](double x) { return discount * std::max(x - strike, 0.0); };
}

double milstein_path(const SdeModel& model, int level, std::span<const double> increments) {
  if (level < 0) throw InputError("level must be nonnegative");
  const std::size_t n = std::size_t{1} << level;
  if (increments.size() != n) {
    throw ContractViolation("milstein_path at level " + std::to_string(level) + " needs " +
                            std::to_string(n) + " increments, got " + std::to_string(increments.size()));
  }
  const double dt = model.horizon / static_cast<double>(n);
  double x = model.x0;
  double t = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dw = increments[k];
    const double b = model.diffusion(x, t);
    x += model.drift(x, t) * dt + b * dw +
         0.5 * b * model.diffusion_dx(x, t) * (dw * dw - dt);
    t = static_cast<double>(k + 1) * dt;
  }
  return x;
}

std::vector<double> aggregate_pairwise(std::span<const double> increments) {
  if (increments.size() < 2 || increments.size() % 2 != 0) {
    throw InputError("pairwise aggregation needs an even, positive number of increments");
  }
  std::vector<double> coarse(increments.size() / 2);
  for (std::size_t k = 0; k < coarse.size(); ++k) {
    coarse[k] = increments[2 * k] + increments[2 * k + 1];
  }
  return coarse;
}

LevelPathBundle coupled_bundle_from_increments(const SdeModel& model, const Payoff& payoff,
                                               int top_level, std::span<const double> fine_increments) {
  if (top_level < 0) throw InputError("top_level must be nonnegative");
  const std::size_t n = std::size_t{1} << top_level;
  if (fine_increments.size() != n) {
    throw ContractViolation("coupled bundle at top level " + std::to_string(top_level) + " needs " +
                            std::to_string(n) + " fine increments");
  }
  LevelPathBundle bundle;
  bundle.y.resize(static_cast<std::size_t>(top_level) + 1);
  std::vector<double> current(fine_increments.begin(), fine_increments.end());
  for (int level = top_level; level >= 0; --level) {
    bundle.y[static_cast<std::size_t>(level)] = payoff(milstein_path(model, level, current));
    if (level > 0) current = aggregate_pairwise(current);
  }
  bundle.work = static_cast<double>((std::uint64_t{1} << (top_level + 1)) - 1);
  return bundle;
}

LevelPathBundle coupled_bundle(const SdeModel& model, const Payoff& payoff, int top_level,
                               RngStream& rng) {
  if (top_level < 0) throw InputError("top_level must be nonnegative");
  const std::size_t n = std::size_t{1} << top_level;
  const double sd = std::sqrt(model.horizon / static_cast<double>(n));
  std::vector<double> fine(n);
  for (auto& dw : fine) dw = sd * rng.gaussian();
  return coupled_bundle_from_increments(model, payoff, top_level, fine);
}

std::pair<double, double> independent_delta(const SdeModel& model, const Payoff& payoff, int level,
                                            RngStream& rng) {
  if (level < 0) throw InputError("level must be nonnegative");
  if (level == 0) {
    const double dw = std::sqrt(model.horizon) * rng.gaussian();
    const double y0 = payoff(milstein_path(model, 0, std::span<const double>(&dw, 1)));
    return {y0, 1.0};
  }
  const std::size_t n = std::size_t{1} << level;
  const double sd = std::sqrt(model.horizon / static_cast<double>(n));
  std::vector<double> fine(n);
  for (auto& dw : fine) dw = sd * rng.gaussian();
  const double y_fine = payoff(milstein_path(model, level, fine));
  const std::vector<double> coarse = aggregate_pairwise(fine);
  const double y_coarse = payoff(milstein_path(model, level - 1, coarse));
  const double work = static_cast<double>(n + n / 2);
  return {y_fine - y_coarse, work};
}

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

} // namespace

double black_scholes_call(const GbmParams& params, double horizon) {
  validate(params);
  if (!(horizon > 0.0)) throw InputError("horizon must be positive");
  const double discount = std::exp(-params.r * horizon);
  if (params.strike == 0.0) return params.x0;
  const double sig_sqrt_t = params.sigma * std::sqrt(horizon);
  const double d1 = (std::log(params.x0 / params.strike) +
                     (params.r + 0.5 * params.sigma * params.sigma) * horizon) /
                    sig_sqrt_t;
  const double d2 = d1 - sig_sqrt_t;
  return params.x0 * normal_cdf(d1) - params.strike * discount * normal_cdf(d2);
}

} // namespace rmlmc
