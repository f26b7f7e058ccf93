#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rmlmc/estimators.hpp"
#include "rmlmc/moments.hpp"
#include "rmlmc/pilot.hpp"
#include "rmlmc/sde.hpp"

namespace rmlmc {

enum class EstimatorKind { coupled, independent };
enum class OutputFormat { table, json, csv };

const char* to_string(EstimatorKind kind);

struct ExperimentConfig {
  GbmParams gbm;
  double horizon = 1.0;
  int m = 13;
  std::size_t n_pilot = 10000;
  std::size_t n_replications = 1'000'000;
  bool run_coupled = true;
  bool run_independent = true;
  std::uint64_t seed = 1;
  int workers = 1;
  std::uint64_t max_steps = 0; // 0 = no cap
};

void validate(const ExperimentConfig& config);

struct ExperimentReport {
  std::string estimator;
  std::size_t n = 0;
  double price = 0.0;
  double std_err = 0.0;                  // standard error of the mean
  double work_total = 0.0;               // steps summed over replications
  double work_ci90 = 0.0;                // 90% CI half-width for work_total
  double work_normalized_variance = 0.0; // work_total * std_err^2
  // reproducibility metadata
  std::uint64_t seed = 0;
  int m = 0;
  double q_top = 0.0;       // q_m actually sampled
  std::string tail_rule;    // extension rule beyond m, recorded not sampled
};

// Merged replication statistics; shards are combined in index order, so
// the result is bit-identical for any worker count.
struct ReplicationStats {
  MomentAccumulator value;
  MomentAccumulator work;
  double work_sum = 0.0;
};

ReplicationStats run_replications_coupled(const LevelDistribution& q, const BundleGenerator& gen,
                                          std::size_t n, std::uint64_t seed, int workers,
                                          std::uint64_t max_steps = 0);
ReplicationStats run_replications_independent(const LevelDistribution& q, const DeltaGenerator& gen,
                                              std::size_t n, std::uint64_t seed, int workers,
                                              std::uint64_t max_steps = 0);

ExperimentReport make_report(EstimatorKind kind, const ReplicationStats& stats,
                             const LevelDistribution& q, std::uint64_t seed, int m);

struct ExperimentOutput {
  PilotResult pilot;
  std::vector<ExperimentReport> reports;
};

// Full pipeline: pilot, schedules, n replications per selected estimator.
ExperimentOutput run_experiment(const ExperimentConfig& config);
// Same, reusing a previously computed pilot (its m must match).
ExperimentOutput run_experiment(const ExperimentConfig& config, PilotResult pilot);

std::string emit_report(const std::vector<ExperimentReport>& reports, OutputFormat format);
std::vector<ExperimentReport> parse_reports_json(const std::string& text);
std::vector<ExperimentReport> parse_reports_csv(const std::string& text);

} // namespace rmlmc
