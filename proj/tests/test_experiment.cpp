#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "rmlmc/experiment.hpp"

using namespace rmlmc;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig config;
  config.gbm = GbmParams{0.05, 0.2, 1.0, 1.0};
  config.horizon = 1.0;
  config.m = 6;
  config.n_pilot = 2000;
  config.n_replications = 20000;
  config.seed = 99;
  config.workers = 1;
  return config;
}

bool reports_equal(const ExperimentReport& a, const ExperimentReport& b) {
  return a.estimator == b.estimator && a.n == b.n && a.price == b.price &&
         a.std_err == b.std_err && a.work_total == b.work_total && a.work_ci90 == b.work_ci90 &&
         a.work_normalized_variance == b.work_normalized_variance && a.seed == b.seed &&
         a.m == b.m && a.q_top == b.q_top && a.tail_rule == b.tail_rule;
}

} // namespace

TEST_CASE("constant model yields a zero-variance report") {
  const double c = 0.375;
  BundleGenerator gen = [c](int top, RngStream&) {
    LevelPathBundle bundle;
    bundle.y.assign(static_cast<std::size_t>(top) + 1, c);
    bundle.work = static_cast<double>((1 << (top + 1)) - 1);
    return bundle;
  };
  const LevelDistribution q({1.0, 0.5, 0.25});
  const ReplicationStats stats = run_replications_coupled(q, gen, 100, 7, 1);
  const ExperimentReport report = make_report(EstimatorKind::coupled, stats, q, 7, 2);
  CHECK(report.n == 100);
  CHECK(report.price == c);
  CHECK(report.std_err == 0.0);
  CHECK(report.work_normalized_variance == 0.0);
  CHECK(report.work_total > 0.0);
}

TEST_CASE("report serialization") {
  ExperimentReport a;
  a.estimator = "Coupled Sum";
  a.n = 12345;
  a.price = 0.10450583572185;
  a.std_err = 1.6182730194e-4;
  a.work_total = 13741.0;
  a.work_ci90 = 192.33281;
  a.work_normalized_variance = 0.0301822;
  a.seed = 424242;
  a.m = 13;
  a.q_top = 3.14159e-7;
  a.tail_rule = "q_i = 2^(-3(i-m)/2) q_m for i > m (recorded, never sampled: S <= m)";
  ExperimentReport b = a;
  b.estimator = "Independent Sum";
  b.price = 0.104488123772;
  const std::vector<ExperimentReport> reports{a, b};

  SUBCASE("json round-trip is bit exact") {
    const std::string text = emit_report(reports, OutputFormat::json);
    const std::vector<ExperimentReport> parsed = parse_reports_json(text);
    REQUIRE(parsed.size() == 2);
    CHECK(reports_equal(parsed[0], a));
    CHECK(reports_equal(parsed[1], b));
  }

  SUBCASE("csv keeps full double precision") {
    const std::string text = emit_report(reports, OutputFormat::csv);
    std::istringstream lines(text);
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) ++count;
    CHECK(count == 3); // header + 2 rows
    const std::vector<ExperimentReport> parsed = parse_reports_csv(text);
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].price == a.price);
    CHECK(parsed[0].std_err == a.std_err);
    CHECK(parsed[0].work_total == a.work_total);
    CHECK(parsed[1].price == b.price);
    CHECK(parsed[1].work_normalized_variance == b.work_normalized_variance);
  }

  SUBCASE("table mirrors the six columns") {
    const std::string text = emit_report(reports, OutputFormat::table);
    std::istringstream lines(text);
    std::string header;
    std::getline(lines, header);
    CHECK(header.find("Estimator") != std::string::npos);
    CHECK(header.find("price") != std::string::npos);
    CHECK(header.find("Std") != std::string::npos);
    CHECK(header.find("Work x Std^2") != std::string::npos);
    std::string row;
    int rows = 0;
    while (std::getline(lines, row)) {
      if (!row.empty()) ++rows;
    }
    CHECK(rows == 2);
    CHECK(text.find("Coupled Sum") != std::string::npos);
    CHECK(text.find("Independent Sum") != std::string::npos);
  }

  SUBCASE("empty report list is a usage error") {
    CHECK_THROWS_AS(emit_report({}, OutputFormat::table), InputError);
  }
}

TEST_CASE("config validation") {
  ExperimentConfig config = small_config();
  config.n_replications = 99;
  CHECK_THROWS_AS(validate(config), InputError);
  config = small_config();
  config.run_coupled = false;
  config.run_independent = false;
  CHECK_THROWS_AS(validate(config), InputError);
  config = small_config();
  config.gbm.sigma = 0.0;
  CHECK_THROWS_AS(validate(config), InputError);
}

TEST_CASE("experiment is deterministic and worker-count invariant") {
  ExperimentConfig config = small_config();
  config.n_replications = 5000;
  const ExperimentOutput first = run_experiment(config);
  const ExperimentOutput second = run_experiment(config);
  ExperimentConfig threaded = config;
  threaded.workers = 3;
  const ExperimentOutput third = run_experiment(threaded);

  const std::string a = emit_report(first.reports, OutputFormat::json);
  const std::string b = emit_report(second.reports, OutputFormat::json);
  const std::string c = emit_report(third.reports, OutputFormat::json);
  CHECK(a == b);
  CHECK(a == c);
}

TEST_CASE("pilot results can be reused across runs") {
  ExperimentConfig config = small_config();
  config.n_replications = 2000;
  const ExperimentOutput full = run_experiment(config);
  const ExperimentOutput reused = run_experiment(config, full.pilot);
  CHECK(emit_report(full.reports, OutputFormat::json) ==
        emit_report(reused.reports, OutputFormat::json));

  // m mismatch is rejected
  ExperimentConfig other = config;
  other.m = 5;
  CHECK_THROWS_AS(run_experiment(other, full.pilot), InputError);
}

TEST_CASE("small end-to-end run lands near the reference price") {
  ExperimentConfig config = small_config();
  const ExperimentOutput output = run_experiment(config);
  REQUIRE(output.reports.size() == 2);
  const double reference = black_scholes_call(config.gbm, config.horizon);
  for (const auto& report : output.reports) {
    CHECK(report.n == config.n_replications);
    CHECK(report.std_err > 0.0);
    CHECK(report.work_total >= static_cast<double>(config.n_replications));
    // m = 6 leaves visible discretization bias, so this is a sanity band,
    // not the acceptance tolerance.
    CHECK(std::abs(report.price - reference) < 0.01);
    CHECK(report.work_normalized_variance ==
          report.work_total * report.std_err * report.std_err);
  }
}

TEST_CASE("step cap aborts with a resource error") {
  ExperimentConfig config = small_config();
  config.n_replications = 50000;
  config.max_steps = 1000;
  CHECK_THROWS_AS(run_experiment(config), ResourceCapError);
}
