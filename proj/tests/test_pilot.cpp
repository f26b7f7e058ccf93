#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rmlmc/pilot.hpp"

using namespace rmlmc;

namespace {

constexpr double kA0 = 0.3, kB0 = 0.8, kA1 = 0.5, kB1 = 1.0;

BundleGenerator synthetic_bundle_gen() {
  return [](int top, RngStream& rng) {
    const double z = rng.gaussian();
    LevelPathBundle bundle;
    bundle.y = {kA0 + kB0 * z, kA1 + kB1 * z};
    bundle.y.resize(static_cast<std::size_t>(top) + 1);
    bundle.work = (top == 0) ? 1.0 : 3.0;
    return bundle;
  };
}

const GbmParams kPaperParams{0.05, 0.2, 1.0, 1.0};

} // namespace

TEST_CASE("cost profiles count simulated steps") {
  const CostProfile bar = coupled_cost_profile(3);
  CHECK(bar.values() == std::vector<double>{0, 1, 3, 7, 15});
  const CostProfile tilde = independent_cost_profile(3);
  CHECK(tilde.values() == std::vector<double>{0, 1, 4, 10, 22});
}

TEST_CASE("synthetic model profiles match closed forms within 4 SEs") {
  const PilotConfig config{1, 20000, 77, 1};
  const PilotProfiles profiles = estimate_profiles(synthetic_bundle_gen(), config);

  const double eta_bar_0 = kB1 * kB1;
  const double eta_bar_1 = (kA0 - kA1) * (kA0 - kA1) + (kB0 - kB1) * (kB0 - kB1);
  CHECK(std::abs(profiles.eta_bar.values[0] - eta_bar_0) <
        4.0 * profiles.eta_bar.standard_errors[0]);
  CHECK(std::abs(profiles.eta_bar.values[1] - eta_bar_1) <
        4.0 * profiles.eta_bar.standard_errors[1]);
  CHECK(profiles.eta_bar.values[2] == 0.0);

  const double eta_tilde_0 = kB0 * kB0 + (kB1 - kB0) * (kB1 - kB0);
  const double eta_tilde_1 = (kA0 - kA1) * (kA0 - kA1) + (kB1 - kB0) * (kB1 - kB0);
  CHECK(std::abs(profiles.eta_tilde.values[0] - eta_tilde_0) <
        4.0 * profiles.eta_tilde.standard_errors[0]);
  CHECK(std::abs(profiles.eta_tilde.values[1] - eta_tilde_1) <
        4.0 * profiles.eta_tilde.standard_errors[1]);
  CHECK(profiles.eta_tilde.values[2] == 0.0);

  CHECK(std::abs(profiles.y_top_mean - kA1) < 4.0 * (kB1 / std::sqrt(20000.0)));
}

TEST_CASE("deterministic bundles give the pure-bias profile exactly") {
  const std::vector<double> c{2.0, 1.4, 1.1};
  BundleGenerator gen = [&c](int top, RngStream&) {
    LevelPathBundle bundle;
    bundle.y.assign(c.begin(), c.begin() + top + 1);
    bundle.work = 1.0;
    return bundle;
  };
  const PilotConfig config{2, 64, 5, 1};
  const PilotProfiles profiles = estimate_profiles(gen, config);
  CHECK(profiles.eta_tilde.values[0] == 0.0);
  CHECK(profiles.eta_tilde.values[1] == (c[0] - c[2]) * (c[0] - c[2]));
  CHECK(profiles.eta_tilde.values[2] == (c[1] - c[2]) * (c[1] - c[2]));
  CHECK(profiles.eta_tilde.values[3] == 0.0);

  // A flat variance head cannot be scheduled.
  CHECK_THROWS_AS(estimate_eta_tilde(gen, config), DegenerateProfileError);
  CHECK_THROWS_AS(estimate_eta_bar(gen, config), DegenerateProfileError);
}

TEST_CASE("constant payoff is rejected as degenerate") {
  const SdeModel model = make_gbm_model(kPaperParams, 1.0);
  const Payoff constant = [](double) { return 1.0; };
  const PilotConfig config{3, 32, 9, 1};
  CHECK_THROWS_AS(estimate_eta_bar(model, constant, config), DegenerateProfileError);
}

TEST_CASE("build_schedules composes with the hull optimizer") {
  const ProfileEstimate fig1{{20, 22, 14, 5, 4, 1, 0}, std::vector<double>(7, 0.0)};
  const CostProfile t({0, 1, 2, 3, 4, 5, 6});
  const auto [q_coupled, q_independent] = build_schedules(fig1, fig1, t, t);
  const HullResult hull = optimal_distribution(t, MomentProfile(fig1.values));
  for (std::size_t i = 0; i < q_coupled.size(); ++i) {
    CHECK(q_coupled[i] == (*hull.q_star)[i]);
    CHECK(q_independent[i] == (*hull.q_star)[i]);
  }
}

TEST_CASE("pilot result serialization round-trips") {
  const PilotConfig config{1, 512, 2024, 1};
  const PilotResult result = run_pilot(synthetic_bundle_gen(), config);
  const std::string text = result.to_json();
  const PilotResult parsed = PilotResult::from_json(text);
  CHECK(parsed.to_json() == text);
}

TEST_CASE("pilot is reproducible and worker-count invariant") {
  const SdeModel model = make_gbm_model(kPaperParams, 1.0);
  const Payoff payoff = make_discounted_call_payoff(1.0, 0.05, 1.0);
  const PilotConfig one{6, 1500, 31337, 1};
  PilotConfig two = one;
  two.workers = 3;
  const std::string a = run_pilot(model, payoff, one).to_json();
  const std::string b = run_pilot(model, payoff, one).to_json();
  const std::string c = run_pilot(model, payoff, two).to_json();
  CHECK(a == b);
  CHECK(a == c);
}

TEST_CASE("gbm pilot at the paper's scale") {
  const SdeModel model = make_gbm_model(kPaperParams, 1.0);
  const Payoff payoff = make_discounted_call_payoff(1.0, 0.05, 1.0);
  const PilotConfig config{13, 10000, 4001, 2};
  const PilotResult pilot = run_pilot(model, payoff, config);

  // Milstein strong order 1: eta_bar ratios near 4 in the mid range.
  for (int i = 4; i <= 9; ++i) {
    const double ratio = pilot.eta_bar.values[static_cast<std::size_t>(i)] /
                         pilot.eta_bar.values[static_cast<std::size_t>(i) + 1];
    CHECK(ratio > 2.5);
    CHECK(ratio < 6.0);
  }

  // eta_tilde sane: finite head, near-monotone tail.
  CHECK(pilot.eta_tilde.values[0] > 0.0);
  CHECK(std::isfinite(pilot.eta_tilde.values[0]));
  int inversions = 0;
  for (std::size_t i = 1; i + 2 < pilot.eta_tilde.values.size(); ++i) {
    if (pilot.eta_tilde.values[i] < pilot.eta_tilde.values[i + 1]) ++inversions;
  }
  CHECK(inversions <= 2);

  // The optimized schedule dominates the standard geometric choices.
  const CostProfile t_bar = coupled_cost_profile(13);
  const MomentProfile eta_bar(pilot.eta_bar.values);
  const double best = objective_R(pilot.q_star_coupled, t_bar, eta_bar);
  for (const double ratio : {1.0, std::exp2(-1.5), 0.5}) {
    std::vector<double> q(14, 1.0);
    for (std::size_t i = 1; i < q.size(); ++i) q[i] = q[i - 1] * ratio;
    CHECK(best <= objective_R(LevelDistribution(std::move(q)), t_bar, eta_bar) * (1 + 1e-9));
  }

  // Same dominance for the independent-sum schedule.
  const CostProfile t_tilde = independent_cost_profile(13);
  const MomentProfile eta_tilde(pilot.eta_tilde.values);
  const double best_tilde = objective_R(pilot.q_star_independent, t_tilde, eta_tilde);
  for (const double ratio : {1.0, std::exp2(-1.5), 0.5}) {
    std::vector<double> q(14, 1.0);
    for (std::size_t i = 1; i < q.size(); ++i) q[i] = q[i - 1] * ratio;
    CHECK(best_tilde <= objective_R(LevelDistribution(std::move(q)), t_tilde, eta_tilde) * (1 + 1e-9));
  }
}
