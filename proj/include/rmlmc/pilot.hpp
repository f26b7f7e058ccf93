#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rmlmc/estimators.hpp"
#include "rmlmc/level_schedule.hpp"
#include "rmlmc/sde.hpp"
#include "rmlmc/types.hpp"

namespace rmlmc {

struct PilotConfig {
  int m = 13;
  std::size_t n_pilot = 10000; // independent runs per profile component
  std::uint64_t seed = 1;
  int workers = 1;
};

void validate(const PilotConfig& config);

// Estimated moment profile with per-component standard errors.
struct ProfileEstimate {
  std::vector<double> values;          // length m+2, terminal entry 0
  std::vector<double> standard_errors; // same length
};

struct PilotResult {
  int m = 0;
  std::size_t n_pilot = 0;
  std::uint64_t seed = 0;
  ProfileEstimate eta_bar;
  ProfileEstimate eta_tilde;
  LevelDistribution q_star_coupled;
  LevelDistribution q_star_independent;
  double y_top_mean = 0.0; // pilot estimate of E[Y_m], diagnostic only

  std::string to_json() const;
  static PilotResult from_json(const std::string& text);
};

// Expected-step profiles of the two estimators at truncation level m:
// a coupled bundle through level i costs 2^{i+1} - 1 steps cumulative;
// an independent increment costs 1 at level 0 and 3 * 2^{i-1} above.
CostProfile coupled_cost_profile(int m);
CostProfile independent_cost_profile(int m);

// Raw single-pass estimates of both profiles, before any degeneracy
// check; bundles come from gen(m, stream).
struct PilotProfiles {
  ProfileEstimate eta_bar;
  ProfileEstimate eta_tilde;
  double y_top_mean = 0.0;
};
PilotProfiles estimate_profiles(const BundleGenerator& gen, const PilotConfig& config);

// Coupled-sum profile from n_pilot coupled bundles at top level m:
// eta_0 is the sample variance of Y_m and eta_i the sample mean of
// (Y_{i-1} - Y_m)^2. Any nonpositive component is a degenerate profile
// and is rejected.
ProfileEstimate estimate_eta_bar(const SdeModel& model, const Payoff& payoff,
                                 const PilotConfig& config);
ProfileEstimate estimate_eta_bar(const BundleGenerator& gen, const PilotConfig& config);

// Independent-sum profile from the same kind of bundles, assembled via
// mu_tilde_profile from increment variances and bias estimates.
ProfileEstimate estimate_eta_tilde(const SdeModel& model, const Payoff& payoff,
                                   const PilotConfig& config);
ProfileEstimate estimate_eta_tilde(const BundleGenerator& gen, const PilotConfig& config);

// Optimal schedules for both estimators from estimated profiles.
std::pair<LevelDistribution, LevelDistribution> build_schedules(const ProfileEstimate& eta_bar,
                                                                const ProfileEstimate& eta_tilde,
                                                                const CostProfile& cost_bar,
                                                                const CostProfile& cost_tilde);

// Full pilot pass: both profiles are estimated from one shared set of
// bundles, then turned into schedules.
PilotResult run_pilot(const SdeModel& model, const Payoff& payoff, const PilotConfig& config);
PilotResult run_pilot(const BundleGenerator& gen, const PilotConfig& config);

} // namespace rmlmc
