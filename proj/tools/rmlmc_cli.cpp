#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rmlmc/experiment.hpp"
#include "rmlmc/level_schedule.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitResourceCap = 4;

struct CliSettings {
  std::string model = "gbm";
  double r = 0.05;
  double sigma = 0.2;
  double horizon = 1.0;
  double strike = 1.0;
  double x0 = 1.0;
  int m = 13;
  std::size_t n_pilot = 10000;
  std::size_t n = 1'000'000;
  std::string estimator = "both";
  std::uint64_t seed = 1;
  int workers = 1;
  std::string format = "table";
  std::string out;
  std::uint64_t max_steps = 0;
  std::string pilot_in;
  std::string pilot_out;
  std::vector<double> t;
  std::vector<double> gamma;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw rmlmc::InputError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw rmlmc::InputError("cannot write " + path);
  out << text;
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> values;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    if (!token.empty()) values.push_back(std::stod(token));
  }
  return values;
}

// Applies one config entry; unknown keys are usage errors so typos fail
// loudly instead of silently running defaults.
void apply_config_entry(CliSettings& s, const std::string& key, const nlohmann::json& value) {
  auto as_u64 = [&]() { return value.is_string() ? std::stoull(value.get<std::string>()) : value.get<std::uint64_t>(); };
  auto as_size = [&]() { return value.is_string() ? static_cast<std::size_t>(std::stoull(value.get<std::string>())) : value.get<std::size_t>(); };
  auto as_int = [&]() { return value.is_string() ? std::stoi(value.get<std::string>()) : value.get<int>(); };
  auto as_double = [&]() { return value.is_string() ? std::stod(value.get<std::string>()) : value.get<double>(); };
  auto as_string = [&]() { return value.is_string() ? value.get<std::string>() : value.dump(); };
  auto as_list = [&]() {
    return value.is_array() ? value.get<std::vector<double>>() : parse_number_list(as_string());
  };

  if (key == "model") s.model = as_string();
  else if (key == "r") s.r = as_double();
  else if (key == "sigma") s.sigma = as_double();
  else if (key == "T") s.horizon = as_double();
  else if (key == "strike") s.strike = as_double();
  else if (key == "x0") s.x0 = as_double();
  else if (key == "m") s.m = as_int();
  else if (key == "n-pilot" || key == "n_pilot") s.n_pilot = as_size();
  else if (key == "n") s.n = as_size();
  else if (key == "estimator") s.estimator = as_string();
  else if (key == "seed") s.seed = as_u64();
  else if (key == "workers") s.workers = as_int();
  else if (key == "format") s.format = as_string();
  else if (key == "out") s.out = as_string();
  else if (key == "max-steps" || key == "max_steps") s.max_steps = as_u64();
  else if (key == "pilot-in" || key == "pilot_in") s.pilot_in = as_string();
  else if (key == "pilot-out" || key == "pilot_out") s.pilot_out = as_string();
  else if (key == "t") s.t = as_list();
  else if (key == "gamma") s.gamma = as_list();
  else throw rmlmc::InputError("unknown config key: " + key);
}

void load_config_file(CliSettings& s, const std::string& path) {
  const std::string text = read_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    const nlohmann::json j = nlohmann::json::parse(text);
    for (const auto& [key, value] : j.items()) apply_config_entry(s, key, value);
    return;
  }
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw rmlmc::InputError("config line is not key=value: " + line);
    auto trim = [](std::string v) {
      const auto a = v.find_first_not_of(" \t\r");
      const auto b = v.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : v.substr(a, b - a + 1);
    };
    apply_config_entry(s, trim(line.substr(0, eq)), nlohmann::json(trim(line.substr(eq + 1))));
  }
}

rmlmc::ExperimentConfig to_experiment_config(const CliSettings& s) {
  if (s.model != "gbm") throw rmlmc::InputError("only the gbm model ships; got " + s.model);
  rmlmc::ExperimentConfig config;
  config.gbm = rmlmc::GbmParams{s.r, s.sigma, s.strike, s.x0};
  config.horizon = s.horizon;
  config.m = s.m;
  config.n_pilot = s.n_pilot;
  config.n_replications = s.n;
  if (s.estimator == "coupled") {
    config.run_independent = false;
  } else if (s.estimator == "independent") {
    config.run_coupled = false;
  } else if (s.estimator != "both") {
    throw rmlmc::InputError("estimator must be coupled, independent or both");
  }
  config.seed = s.seed;
  config.workers = s.workers;
  config.max_steps = s.max_steps;
  return config;
}

rmlmc::OutputFormat parse_format(const std::string& name) {
  if (name == "table") return rmlmc::OutputFormat::table;
  if (name == "json") return rmlmc::OutputFormat::json;
  if (name == "csv") return rmlmc::OutputFormat::csv;
  throw rmlmc::InputError("format must be table, json or csv");
}

void add_model_flags(CLI::App* cmd, CliSettings& s) {
  cmd->add_option("--model", s.model, "model name (gbm)");
  cmd->add_option("--r", s.r, "risk-free rate per year");
  cmd->add_option("--sigma", s.sigma, "volatility per sqrt-year");
  cmd->add_option("--T", s.horizon, "maturity in years");
  cmd->add_option("--strike", s.strike, "option strike");
  cmd->add_option("--x0", s.x0, "spot price");
}

int run_price(const CliSettings& s) {
  const double price = rmlmc::black_scholes_call(rmlmc::GbmParams{s.r, s.sigma, s.strike, s.x0},
                                                 s.horizon);
  char line[64];
  std::snprintf(line, sizeof(line), "%.12g\n", price);
  write_output(s.out, line);
  return 0;
}

int run_hull(const CliSettings& s) {
  if (s.t.empty() || s.gamma.empty()) {
    throw rmlmc::InputError("hull needs --t and --gamma (or t/gamma in --config)");
  }
  const rmlmc::HullResult hull =
      rmlmc::optimal_distribution(rmlmc::CostProfile(s.t), rmlmc::MomentProfile(s.gamma));
  nlohmann::json j{
      {"support", hull.support},
      {"gamma_prime", hull.gamma_prime},
      {"theta", hull.theta},
      {"q_star", hull.q_star->values()},
  };
  write_output(s.out, j.dump(2) + "\n");
  return 0;
}

int run_pilot_cmd(const CliSettings& s) {
  if (s.model != "gbm") throw rmlmc::InputError("only the gbm model ships; got " + s.model);
  const rmlmc::GbmParams params{s.r, s.sigma, s.strike, s.x0};
  const rmlmc::SdeModel model = rmlmc::make_gbm_model(params, s.horizon);
  const rmlmc::Payoff payoff = rmlmc::make_discounted_call_payoff(s.strike, s.r, s.horizon);
  const rmlmc::PilotConfig config{s.m, s.n_pilot, s.seed, s.workers};
  const rmlmc::PilotResult result = rmlmc::run_pilot(model, payoff, config);
  write_output(s.out, result.to_json() + "\n");
  return 0;
}

int run_experiment_cmd(const CliSettings& s) {
  const rmlmc::ExperimentConfig config = to_experiment_config(s);
  std::optional<rmlmc::ExperimentOutput> output;
  if (!s.pilot_in.empty()) {
    output = rmlmc::run_experiment(config, rmlmc::PilotResult::from_json(read_file(s.pilot_in)));
  } else {
    output = rmlmc::run_experiment(config);
  }
  if (!s.pilot_out.empty()) {
    write_output(s.pilot_out, output->pilot.to_json() + "\n");
  }
  write_output(s.out, rmlmc::emit_report(output->reports, parse_format(s.format)));
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CliSettings settings;

  // The config file seeds the defaults, so it must load before parsing;
  // explicit flags then override it.
  try {
    for (int i = 1; i < argc; ++i) {
      const std::string arg = argv[i];
      if (arg == "--config" && i + 1 < argc) {
        load_config_file(settings, argv[i + 1]);
      } else if (arg.rfind("--config=", 0) == 0) {
        load_config_file(settings, arg.substr(9));
      }
    }
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return kExitUsage;
  }

  CLI::App app{"Unbiased randomized multilevel Monte Carlo toolkit"};
  app.require_subcommand(1);
  std::string config_path;

  CLI::App* price = app.add_subcommand("price", "Black-Scholes reference call price");
  add_model_flags(price, settings);
  price->add_option("--out", settings.out, "write result to file instead of stdout");

  CLI::App* hull = app.add_subcommand("hull", "optimal truncation-level distribution for given t/gamma");
  hull->add_option("--t", settings.t, "cost profile t_0..t_{m+1}")->delimiter(',');
  hull->add_option("--gamma", settings.gamma, "moment profile gamma_0..gamma_{m+1}")->delimiter(',');
  hull->add_option("--config", config_path, "config file (key=value or JSON)");
  hull->add_option("--out", settings.out, "write result to file instead of stdout");

  CLI::App* pilot = app.add_subcommand("pilot", "estimate moment profiles and schedules");
  add_model_flags(pilot, settings);
  pilot->add_option("--m", settings.m, "truncation level");
  pilot->add_option("--n-pilot", settings.n_pilot, "pilot runs per component");
  pilot->add_option("--seed", settings.seed, "RNG seed");
  pilot->add_option("--workers", settings.workers, "worker threads");
  pilot->add_option("--config", config_path, "config file (key=value or JSON)");
  pilot->add_option("--out", settings.out, "write result to file instead of stdout");

  CLI::App* run = app.add_subcommand("run", "full pilot + replication experiment");
  add_model_flags(run, settings);
  run->add_option("--m", settings.m, "truncation level");
  run->add_option("--n-pilot", settings.n_pilot, "pilot runs per component");
  run->add_option("--n", settings.n, "replications per estimator");
  run->add_option("--estimator", settings.estimator, "coupled, independent or both");
  run->add_option("--seed", settings.seed, "RNG seed");
  run->add_option("--workers", settings.workers, "worker threads");
  run->add_option("--format", settings.format, "table, json or csv");
  run->add_option("--max-steps", settings.max_steps, "abort after this many simulated steps (0 = off)");
  run->add_option("--pilot-in", settings.pilot_in, "reuse a saved pilot result (JSON)");
  run->add_option("--pilot-out", settings.pilot_out, "save the pilot result (JSON)");
  run->add_option("--config", config_path, "config file (key=value or JSON)");
  run->add_option("--out", settings.out, "write report to file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (price->parsed()) return run_price(settings);
    if (hull->parsed()) return run_hull(settings);
    if (pilot->parsed()) return run_pilot_cmd(settings);
    return run_experiment_cmd(settings);
  } catch (const rmlmc::DegenerateProfileError& error) {
    std::cerr << "degenerate pilot: " << error.what() << "\n";
    return kExitDegenerate;
  } catch (const rmlmc::ResourceCapError& error) {
    std::cerr << "resource cap: " << error.what() << "\n";
    return kExitResourceCap;
  } catch (const rmlmc::InputError& error) {
    std::cerr << "error: " << error.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
}
