#pragma once

#include "momlab/common.hpp"
#include "momlab/equivalence.hpp"
#include "momlab/optim.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace momlab {

/// Parses the TOML subset used by config files: comments, [section],
/// [[array.of.tables]], dotted section names, and key = value where value is
/// a string, number, boolean or single-line array of those.
nlohmann::json parse_toml(const std::string& text);

/// Reads a .json or .toml config file; throws IoError / ConfigError.
nlohmann::json load_config_file(const std::string& path);

/// Names of the shipped presets, and their JSON form.
std::vector<std::string> preset_names();
nlohmann::json preset(const std::string& name);

/// Recursive merge: objects merge key by key, everything else is replaced.
nlohmann::json merge_config(nlohmann::json base, const nlohmann::json& overlay);

struct ProblemConfig {
  std::string kind = "quadratic";  // quadratic | mlp
  std::int64_t dim = 100;
  double condition_number = 1e5;
  std::vector<int> layers = {2, 32, 32, 2};
  std::string activation = "tanh";
  std::string dataset = "two_moons";
  std::size_t n_samples = 200;
  double noise = 0.25;
  std::size_t heldout = 0;
  std::uint64_t data_seed = 2;
};

struct TrainingConfig {
  std::int64_t epochs = 1;
  std::int64_t iters_per_epoch = 1;
  std::string logging = "auto";  // auto | iteration | epoch
  std::vector<double> compare_momenta;  // single-phase runs, one per momentum
  bool reset_momentum = true;
};

struct DemoConfig {
  std::vector<double> momenta = {0.0, 0.5, 0.9, 0.95};
  std::int64_t iterations = 10000;
  double eta_min = 1e-7;
  double eta_max = 5e5;
  std::size_t eta_count = 50;
};

struct RandomSearchSpec {
  double mu = 0.0;
  double eta_min = 1e-3;
  double eta_max = 10.0;
};

struct SweepConfig {
  std::string mode = "grid";  // grid | random | transition
  double eta_min = 1e-7, eta_max = 5e5;
  std::size_t eta_count = 50;
  double one_minus_mu_min = 1e-3, one_minus_mu_max = 1.0;
  std::size_t one_minus_mu_count = 50;
  std::size_t repetitions = 1;
  std::vector<RandomSearchSpec> searches;
  std::size_t samples = 20;
  std::vector<std::int64_t> transitions;
  std::vector<std::uint64_t> seeds;
  std::size_t bins = 10;
  std::size_t max_runs = 5000;
  double max_steps = 2e8;
  bool allow_large = false;
};

struct EquivalenceConfig {
  std::vector<double> baseline_eta;
  std::vector<double> mus = {0.9, 0.99};
  double candidate_min = 1e-6;
  double candidate_max = 1.0;
  std::size_t candidates_per_decade = 20;
  std::string eta_units = "absolute";  // absolute | inverse_lambda_max
  std::string space = "raw";
};

struct ExperimentConfig {
  std::string name;     // preset or "custom"
  std::string command;  // quadratic-demo | train | equivalence | sweep
  std::uint64_t seed = 0;
  ProblemConfig problem;
  ScheduleSpec schedule;
  TrainingConfig training;
  DemoConfig demo;
  SweepConfig sweep;
  EquivalenceConfig equivalence;
  nlohmann::json snapshot;  // the validated, merged configuration
};

/// Strict validation: unknown keys, wrong types and out-of-range values all
/// raise ConfigError before any computation starts.
ExperimentConfig parse_experiment(const nlohmann::json& j);

/// Builds the problem an experiment runs on.
std::unique_ptr<Problem> make_problem(const ProblemConfig& p, std::uint64_t seed);

}  // namespace momlab
