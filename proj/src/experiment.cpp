#include "rmlmc/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "rmlmc/parallel.hpp"

namespace rmlmc {

namespace {

constexpr std::size_t kReplicationShardSize = 4096;
constexpr std::uint64_t kCoupledTag = 0x636f7570ULL;  // "coup"
constexpr std::uint64_t kIndependentTag = 0x696e6465ULL; // "inde"
constexpr double kZ90 = 1.6448536269514722; // two-sided 90% normal quantile

struct ShardStats {
  MomentAccumulator value;
  MomentAccumulator work;
  double work_sum = 0.0;
};

// Generic replication loop; make_sampler(shard) builds a sampler owning
// the shard's streams, so shards can run on any worker without sharing
// mutable state.
template <typename MakeSampler>
ReplicationStats run_replication_loop(std::size_t n, int workers, std::uint64_t max_steps,
                                      MakeSampler make_sampler) {
  if (n == 0) throw InputError("replication count must be positive");
  const std::size_t n_shards = (n + kReplicationShardSize - 1) / kReplicationShardSize;
  std::vector<ShardStats> shards(n_shards);
  std::atomic<std::uint64_t> steps_used{0};
  std::atomic<bool> capped{false};

  run_sharded(n_shards, workers, [&](std::size_t s) {
    if (capped.load(std::memory_order_relaxed)) return;
    auto sampler = make_sampler(s);
    ShardStats& stats = shards[s];
    const std::size_t begin = s * kReplicationShardSize;
    const std::size_t end = std::min(n, begin + kReplicationShardSize);
    for (std::size_t r = begin; r < end; ++r) {
      const EstimatorSample sample = sampler();
      stats.value.add(sample.value);
      stats.work.add(sample.work);
      stats.work_sum += sample.work;
      if (max_steps > 0) {
        const auto used = steps_used.fetch_add(static_cast<std::uint64_t>(sample.work)) +
                          static_cast<std::uint64_t>(sample.work);
        if (used > max_steps) {
          capped.store(true, std::memory_order_relaxed);
          return;
        }
      }
    }
  });

  if (capped.load()) {
    throw ResourceCapError("step budget of " + std::to_string(max_steps) +
                           " exhausted before finishing " + std::to_string(n) + " replications");
  }

  ReplicationStats total;
  for (const auto& shard : shards) {
    total.value.merge(shard.value);
    total.work.merge(shard.work);
    total.work_sum += shard.work_sum;
  }
  return total;
}

} // namespace

const char* to_string(EstimatorKind kind) {
  return kind == EstimatorKind::coupled ? "Coupled Sum" : "Independent Sum";
}

void validate(const ExperimentConfig& config) {
  validate(config.gbm);
  if (!(config.horizon > 0.0)) throw InputError("horizon must be positive");
  if (config.m < 1) throw InputError("m must be >= 1");
  if (config.n_replications < 100) {
    throw InputError("need at least 100 replications for the normal CI formulas");
  }
  if (!config.run_coupled && !config.run_independent) {
    throw InputError("at least one estimator must be selected");
  }
  if (config.workers < 1) throw InputError("workers must be >= 1");
}

ReplicationStats run_replications_coupled(const LevelDistribution& q, const BundleGenerator& gen,
                                          std::size_t n, std::uint64_t seed, int workers,
                                          std::uint64_t max_steps) {
  return run_replication_loop(n, workers, max_steps, [&](std::size_t shard) {
    CoupledSumEstimator estimator(q, gen, RngStream(seed, {kCoupledTag, shard, 0}),
                                  RngStream(seed, {kCoupledTag, shard, 1}));
    return [estimator]() mutable { return estimator.sample(); };
  });
}

ReplicationStats run_replications_independent(const LevelDistribution& q, const DeltaGenerator& gen,
                                              std::size_t n, std::uint64_t seed, int workers,
                                              std::uint64_t max_steps) {
  return run_replication_loop(n, workers, max_steps, [&](std::size_t shard) {
    IndependentSumEstimator estimator(q, gen, RngStream(seed, {kIndependentTag, shard, 0}),
                                      RngStream(seed, {kIndependentTag, shard, 1}));
    return [estimator]() mutable { return estimator.sample(); };
  });
}

ExperimentReport make_report(EstimatorKind kind, const ReplicationStats& stats,
                             const LevelDistribution& q, std::uint64_t seed, int m) {
  ExperimentReport report;
  report.estimator = to_string(kind);
  report.n = stats.value.count();
  report.price = stats.value.mean();
  report.std_err = stats.value.se_mean();
  report.work_total = stats.work_sum;
  const double n = static_cast<double>(stats.work.count());
  report.work_ci90 = kZ90 * std::sqrt(stats.work.variance() * n);
  report.work_normalized_variance = report.work_total * report.std_err * report.std_err;
  report.seed = seed;
  report.m = m;
  report.q_top = q[q.size() - 1];
  report.tail_rule = "q_i = 2^(-3(i-m)/2) q_m for i > m (recorded, never sampled: S <= m)";
  return report;
}

ExperimentOutput run_experiment(const ExperimentConfig& config) {
  validate(config);
  const SdeModel model = make_gbm_model(config.gbm, config.horizon);
  const Payoff payoff = make_discounted_call_payoff(config.gbm.strike, config.gbm.r, config.horizon);
  PilotConfig pilot_config{config.m, config.n_pilot, config.seed, config.workers};
  return run_experiment(config, run_pilot(model, payoff, pilot_config));
}

ExperimentOutput run_experiment(const ExperimentConfig& config, PilotResult pilot) {
  validate(config);
  if (pilot.m != config.m) {
    throw InputError("pilot was computed for m = " + std::to_string(pilot.m) +
                     ", experiment wants m = " + std::to_string(config.m));
  }
  const SdeModel model = make_gbm_model(config.gbm, config.horizon);
  const Payoff payoff = make_discounted_call_payoff(config.gbm.strike, config.gbm.r, config.horizon);

  ExperimentOutput output{std::move(pilot), {}};

  if (config.run_coupled) {
    const BundleGenerator gen = [&model, &payoff](int top, RngStream& rng) {
      return coupled_bundle(model, payoff, top, rng);
    };
    const ReplicationStats stats =
        run_replications_coupled(output.pilot.q_star_coupled, gen, config.n_replications,
                                 config.seed, config.workers, config.max_steps);
    output.reports.push_back(make_report(EstimatorKind::coupled, stats,
                                         output.pilot.q_star_coupled, config.seed, config.m));
  }
  if (config.run_independent) {
    const DeltaGenerator gen = [&model, &payoff](int level, RngStream& rng) {
      return independent_delta(model, payoff, level, rng);
    };
    const ReplicationStats stats =
        run_replications_independent(output.pilot.q_star_independent, gen, config.n_replications,
                                     config.seed, config.workers, config.max_steps);
    output.reports.push_back(make_report(EstimatorKind::independent, stats,
                                         output.pilot.q_star_independent, config.seed, config.m));
  }
  return output;
}

namespace {

std::string full_precision(double x) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", x);
  return buffer;
}

nlohmann::json report_to_json(const ExperimentReport& r) {
  return nlohmann::json{
      {"estimator", r.estimator},
      {"n", r.n},
      {"price", r.price},
      {"std", r.std_err},
      {"work_total", r.work_total},
      {"work_ci90", r.work_ci90},
      {"work_normalized_variance", r.work_normalized_variance},
      {"seed", r.seed},
      {"m", r.m},
      {"q_top", r.q_top},
      {"tail_rule", r.tail_rule},
  };
}

ExperimentReport report_from_json(const nlohmann::json& j) {
  ExperimentReport r;
  r.estimator = j.at("estimator").get<std::string>();
  r.n = j.at("n").get<std::size_t>();
  r.price = j.at("price").get<double>();
  r.std_err = j.at("std").get<double>();
  r.work_total = j.at("work_total").get<double>();
  r.work_ci90 = j.at("work_ci90").get<double>();
  r.work_normalized_variance = j.at("work_normalized_variance").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.m = j.at("m").get<int>();
  r.q_top = j.at("q_top").get<double>();
  r.tail_rule = j.at("tail_rule").get<std::string>();
  return r;
}

} // namespace

std::string emit_report(const std::vector<ExperimentReport>& reports, OutputFormat format) {
  if (reports.empty()) throw InputError("emit_report needs at least one report");
  std::ostringstream out;
  switch (format) {
    case OutputFormat::json: {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& r : reports) j.push_back(report_to_json(r));
      out << j.dump(2) << '\n';
      break;
    }
    case OutputFormat::csv: {
      out << "estimator,n,price,std,work_total,work_ci90,work_normalized_variance\n";
      for (const auto& r : reports) {
        out << r.estimator << ',' << r.n << ',' << full_precision(r.price) << ','
            << full_precision(r.std_err) << ',' << full_precision(r.work_total) << ','
            << full_precision(r.work_ci90) << ',' << full_precision(r.work_normalized_variance)
            << '\n';
      }
      break;
    }
    case OutputFormat::table: {
      char line[200];
      std::snprintf(line, sizeof(line), "%-16s %10s %-12s %-10s %-24s %s\n", "Estimator", "n",
                    "price", "Std", "Work", "Work x Std^2");
      out << line;
      for (const auto& r : reports) {
        char work[48];
        std::snprintf(work, sizeof(work), "%.4g +- %.2g", r.work_total, r.work_ci90);
        std::snprintf(line, sizeof(line), "%-16s %10zu %-12.6g %-10.3g %-24s %.3g\n",
                      r.estimator.c_str(), r.n, r.price, r.std_err, work,
                      r.work_normalized_variance);
        out << line;
      }
      break;
    }
  }
  return out.str();
}

std::vector<ExperimentReport> parse_reports_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  std::vector<ExperimentReport> reports;
  for (const auto& item : j) reports.push_back(report_from_json(item));
  return reports;
}

std::vector<ExperimentReport> parse_reports_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty csv");
  std::vector<ExperimentReport> reports;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string field;
    ExperimentReport r;
    std::getline(fields, r.estimator, ',');
    std::getline(fields, field, ',');
    r.n = std::stoull(field);
    std::getline(fields, field, ',');
    r.price = std::stod(field);
    std::getline(fields, field, ',');
    r.std_err = std::stod(field);
    std::getline(fields, field, ',');
    r.work_total = std::stod(field);
    std::getline(fields, field, ',');
    r.work_ci90 = std::stod(field);
    std::getline(fields, field, ',');
    r.work_normalized_variance = std::stod(field);
    reports.push_back(std::move(r));
  }
  return reports;
}

} // namespace rmlmc
