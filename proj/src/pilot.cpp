#include "rmlmc/pilot.hpp"

#include <cmath>
#include <string>
#include <utility>

#include <json.hpp>

#include "rmlmc/parallel.hpp"
#include "rmlmc/moments.hpp"

namespace rmlmc {

namespace {

constexpr std::size_t kPilotShardSize = 250;
constexpr std::uint64_t kPilotStreamTag = 0x70696c6f74ULL; // "pilot"

// Everything the two profiles need, accumulated in one pass over the
// pilot bundles.
struct PilotAccumulators {
  MomentAccumulator y_top;                  // Y_m
  std::vector<MomentAccumulator> sq_diff;   // (Y_{i-1} - Y_m)^2, i = 1..m
  std::vector<MomentAccumulator> diff;      // (Y_{i-1} - Y_m),   i = 1..m
  std::vector<MomentAccumulator> delta;     // Y_j - Y_{j-1},     j = 0..m

  explicit PilotAccumulators(int m)
      : sq_diff(static_cast<std::size_t>(m)), diff(static_cast<std::size_t>(m)),
        delta(static_cast<std::size_t>(m) + 1) {}

  void add_bundle(const std::vector<double>& y) {
    const std::size_t m = y.size() - 1;
    const double y_m = y[m];
    y_top.add(y_m);
    for (std::size_t i = 1; i <= m; ++i) {
      const double d = y[i - 1] - y_m;
      sq_diff[i - 1].add(d * d);
      diff[i - 1].add(d);
    }
    double previous = 0.0;
    for (std::size_t j = 0; j <= m; ++j) {
      delta[j].add(y[j] - previous);
      previous = y[j];
    }
  }

  void merge(const PilotAccumulators& other) {
    y_top.merge(other.y_top);
    for (std::size_t i = 0; i < sq_diff.size(); ++i) sq_diff[i].merge(other.sq_diff[i]);
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i].merge(other.diff[i]);
    for (std::size_t j = 0; j < delta.size(); ++j) delta[j].merge(other.delta[j]);
  }
};

PilotAccumulators run_pilot_pass(const BundleGenerator& gen, const PilotConfig& config) {
  validate(config);
  const std::size_t n_shards = (config.n_pilot + kPilotShardSize - 1) / kPilotShardSize;
  std::vector<PilotAccumulators> shards(n_shards, PilotAccumulators(config.m));

  run_sharded(n_shards, config.workers, [&](std::size_t s) {
    RngStream stream(config.seed, {kPilotStreamTag, s});
    const std::size_t begin = s * kPilotShardSize;
    const std::size_t end = std::min(config.n_pilot, begin + kPilotShardSize);
    for (std::size_t run = begin; run < end; ++run) {
      const LevelPathBundle bundle = gen(config.m, stream);
      if (bundle.y.size() != static_cast<std::size_t>(config.m) + 1) {
        throw ContractViolation("pilot bundle must provide exactly m+1 levels");
      }
      shards[s].add_bundle(bundle.y);
    }
  });

  PilotAccumulators total(config.m);
  for (const auto& shard : shards) total.merge(shard);
  return total;
}

BundleGenerator model_bundle_gen(const SdeModel& model, const Payoff& payoff) {
  return [&model, &payoff](int top, RngStream& rng) { return coupled_bundle(model, payoff, top, rng); };
}

ProfileEstimate eta_bar_from(const PilotAccumulators& acc, int m) {
  ProfileEstimate profile;
  profile.values.resize(static_cast<std::size_t>(m) + 2, 0.0);
  profile.standard_errors.resize(static_cast<std::size_t>(m) + 2, 0.0);
  profile.values[0] = acc.y_top.variance();
  profile.standard_errors[0] = acc.y_top.se_variance();
  for (int i = 1; i <= m; ++i) {
    profile.values[static_cast<std::size_t>(i)] = acc.sq_diff[static_cast<std::size_t>(i - 1)].mean();
    profile.standard_errors[static_cast<std::size_t>(i)] =
        acc.sq_diff[static_cast<std::size_t>(i - 1)].se_mean();
  }
  return profile;
}

ProfileEstimate eta_tilde_from(const PilotAccumulators& acc, int m) {
  const auto um = static_cast<std::size_t>(m);
  std::vector<double> var_delta(um + 1), se_var(um + 1);
  for (std::size_t j = 0; j <= um; ++j) {
    var_delta[j] = acc.delta[j].variance();
    se_var[j] = acc.delta[j].se_variance();
  }
  std::vector<double> bias(um + 1, 0.0), se_bias(um + 1, 0.0);
  for (std::size_t j = 0; j + 1 <= um; ++j) {
    bias[j] = acc.diff[j].mean(); // E(Y_j - Y_m) from the (i = j+1) slot
    se_bias[j] = acc.diff[j].se_mean();
  }

  ProfileEstimate profile;
  profile.values = mu_tilde_profile(var_delta, bias, m).values();
  profile.standard_errors.resize(um + 2, 0.0);
  // First-order error propagation; pilot components share bundles, so
  // cross terms are ignored.
  for (std::size_t i = 0; i <= um; ++i) {
    double var_sum = 0.0;
    for (std::size_t j = std::max<std::size_t>(i, 1); j <= um; ++j) var_sum += se_var[j] * se_var[j];
    if (i == 0) var_sum += se_var[0] * se_var[0];
    if (i >= 1) {
      const double dbias = 2.0 * bias[i - 1] * se_bias[i - 1];
      var_sum += dbias * dbias;
    }
    profile.standard_errors[i] = std::sqrt(var_sum);
  }
  return profile;
}

void require_positive_head(const ProfileEstimate& profile, const char* name) {
  for (std::size_t i = 0; i + 1 < profile.values.size(); ++i) {
    if (!(profile.values[i] > 0.0)) {
      throw DegenerateProfileError(std::string(name) + "[" + std::to_string(i) +
                                   "] is not positive; model too degenerate to schedule");
    }
  }
}

} // namespace

void validate(const PilotConfig& config) {
  if (config.m < 1) throw InputError("pilot needs m >= 1");
  if (config.n_pilot < 2) throw InputError("pilot needs at least 2 runs per component");
  if (config.workers < 1) throw InputError("pilot needs workers >= 1");
}

CostProfile coupled_cost_profile(int m) {
  if (m < 0) throw InputError("cost profile needs m >= 0");
  std::vector<double> t(static_cast<std::size_t>(m) + 2);
  t[0] = 0.0;
  for (int i = 0; i <= m; ++i) {
    t[static_cast<std::size_t>(i) + 1] = t[static_cast<std::size_t>(i)] + std::exp2(i);
  }
  return CostProfile(std::move(t));
}

CostProfile independent_cost_profile(int m) {
  if (m < 0) throw InputError("cost profile needs m >= 0");
  std::vector<double> t(static_cast<std::size_t>(m) + 2);
  t[0] = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double step = (i == 0) ? 1.0 : 3.0 * std::exp2(i - 1);
    t[static_cast<std::size_t>(i) + 1] = t[static_cast<std::size_t>(i)] + step;
  }
  return CostProfile(std::move(t));
}

PilotProfiles estimate_profiles(const BundleGenerator& gen, const PilotConfig& config) {
  const PilotAccumulators acc = run_pilot_pass(gen, config);
  return PilotProfiles{eta_bar_from(acc, config.m), eta_tilde_from(acc, config.m),
                       acc.y_top.mean()};
}

ProfileEstimate estimate_eta_bar(const BundleGenerator& gen, const PilotConfig& config) {
  ProfileEstimate profile = eta_bar_from(run_pilot_pass(gen, config), config.m);
  require_positive_head(profile, "eta_bar");
  return profile;
}

ProfileEstimate estimate_eta_bar(const SdeModel& model, const Payoff& payoff,
                                 const PilotConfig& config) {
  return estimate_eta_bar(model_bundle_gen(model, payoff), config);
}

ProfileEstimate estimate_eta_tilde(const BundleGenerator& gen, const PilotConfig& config) {
  ProfileEstimate profile = eta_tilde_from(run_pilot_pass(gen, config), config.m);
  require_positive_head(profile, "eta_tilde");
  return profile;
}

ProfileEstimate estimate_eta_tilde(const SdeModel& model, const Payoff& payoff,
                                   const PilotConfig& config) {
  return estimate_eta_tilde(model_bundle_gen(model, payoff), config);
}

std::pair<LevelDistribution, LevelDistribution> build_schedules(const ProfileEstimate& eta_bar,
                                                                const ProfileEstimate& eta_tilde,
                                                                const CostProfile& cost_bar,
                                                                const CostProfile& cost_tilde) {
  const HullResult coupled = optimal_distribution(cost_bar, MomentProfile(eta_bar.values));
  const HullResult independent = optimal_distribution(cost_tilde, MomentProfile(eta_tilde.values));
  return {*coupled.q_star, *independent.q_star};
}

PilotResult run_pilot(const BundleGenerator& gen, const PilotConfig& config) {
  PilotProfiles profiles = estimate_profiles(gen, config);
  require_positive_head(profiles.eta_bar, "eta_bar");
  require_positive_head(profiles.eta_tilde, "eta_tilde");

  auto [q_coupled, q_independent] =
      build_schedules(profiles.eta_bar, profiles.eta_tilde, coupled_cost_profile(config.m),
                      independent_cost_profile(config.m));

  return PilotResult{config.m,
                     config.n_pilot,
                     config.seed,
                     std::move(profiles.eta_bar),
                     std::move(profiles.eta_tilde),
                     std::move(q_coupled),
                     std::move(q_independent),
                     profiles.y_top_mean};
}

PilotResult run_pilot(const SdeModel& model, const Payoff& payoff, const PilotConfig& config) {
  return run_pilot(model_bundle_gen(model, payoff), config);
}

std::string PilotResult::to_json() const {
  nlohmann::json j{
      {"m", m},
      {"n_pilot", n_pilot},
      {"seed", seed},
      {"eta_bar", eta_bar.values},
      {"eta_bar_se", eta_bar.standard_errors},
      {"eta_tilde", eta_tilde.values},
      {"eta_tilde_se", eta_tilde.standard_errors},
      {"q_star_coupled", q_star_coupled.values()},
      {"q_star_independent", q_star_independent.values()},
      {"y_top_mean", y_top_mean},
  };
  return j.dump(2);
}

PilotResult PilotResult::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  PilotResult result{
      j.at("m").get<int>(),
      j.at("n_pilot").get<std::size_t>(),
      j.at("seed").get<std::uint64_t>(),
      ProfileEstimate{j.at("eta_bar").get<std::vector<double>>(),
                      j.at("eta_bar_se").get<std::vector<double>>()},
      ProfileEstimate{j.at("eta_tilde").get<std::vector<double>>(),
                      j.at("eta_tilde_se").get<std::vector<double>>()},
      LevelDistribution(j.at("q_star_coupled").get<std::vector<double>>()),
      LevelDistribution(j.at("q_star_independent").get<std::vector<double>>()),
      j.at("y_top_mean").get<double>(),
  };
  return result;
}

} // namespace rmlmc
