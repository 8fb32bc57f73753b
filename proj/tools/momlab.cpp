// momlab: command-line front end for the momentum experiments.

#include "momlab/config.hpp"
#include "momlab/experiments.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kFailure = 1, kConfigError = 2, kIoError = 3 };

struct GlobalOptions {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned jobs = 1;
  bool dry_run = false;
  std::optional<std::int64_t> iterations;
  std::optional<std::int64_t> epochs;
  bool allow_large = false;
};

fs::path output_root() {
  if (const char* env = std::getenv("MOMLAB_OUT"); env && *env) return env;
  return "runs";
}

nlohmann::json build_config(const GlobalOptions& g, const std::string& command) {
  if (g.preset.empty() && g.config.empty()) throw momlab::ConfigError(command + ": pass --preset or --config");
  nlohmann::json j = g.preset.empty() ? nlohmann::json::object() : momlab::preset(g.preset);
  if (!g.config.empty()) j = momlab::merge_config(j, momlab::load_config_file(g.config));
  if (!j.is_object()) throw momlab::ConfigError("config must be a table");
  if (!j.contains("command")) j["command"] = command;
  if (j["command"] != command)
    throw momlab::ConfigError("config is for '" + j["command"].dump() + "', not '" + command + "'");
  if (g.seed) j["seed"] = *g.seed;
  if (g.iterations) {
    const bool quadratic = !j.contains("problem") || !j["problem"].contains("kind") || j["problem"]["kind"] == "quadratic";
    if (command == "quadratic-demo") {
      j["demo"]["iterations"] = *g.iterations;
    } else if (quadratic) {
      j["training"]["epochs"] = 1;
      j["training"]["iters_per_epoch"] = *g.iterations;
    } else {
      throw momlab::ConfigError("--iterations applies to quadratic problems; use --epochs");
    }
  }
  if (g.epochs) j["training"]["epochs"] = *g.epochs;
  if (g.allow_large) j["sweep"]["allow_large"] = true;
  return j;
}

int run_command(const GlobalOptions& g, const std::string& command) {
  const momlab::ExperimentConfig cfg = momlab::parse_experiment(build_config(g, command));
  const fs::path out = g.out.empty() ? output_root() / cfg.name : fs::path(g.out);
  if (g.dry_run) {
    std::cout << momlab::run_plan(cfg) << "output directory: " << out.string() << "\n";
    return kOk;
  }
  momlab::RunContext ctx{out, g.jobs};
  const auto files = momlab::run_experiment(cfg, ctx, std::cout);
  std::cout << "wrote " << files.size() << " files to " << out.string() << "\n";
  for (const auto& f : files) std::cout << "  " << f << "\n";
  return kOk;
}

int run_report(const GlobalOptions& g, const std::vector<std::string>& inputs) {
  const fs::path out = g.out.empty() ? output_root() / "report" : fs::path(g.out);
  std::vector<fs::path> paths(inputs.begin(), inputs.end());
  if (g.dry_run) {
    for (const auto& p : paths)
      if (!fs::exists(p)) throw momlab::IoError(p.string(), "input file not found");
    std::cout << "report over " << paths.size() << " inputs\noutput directory: " << out.string() << "\n";
    return kOk;
  }
  const auto files = momlab::run_report(paths, out, std::cout);
  std::cout << "wrote " << files.size() << " files to " << out.string() << "\n";
  for (const auto& f : files) std::cout << "  " << f << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heavy-ball momentum experiments: quadratics, toy networks, sweeps and reports"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "momlab 0.1.0");

  GlobalOptions g;
  app.add_option("--config", g.config, "Config file (.toml or .json)");
  app.add_option("--seed", g.seed, "Override the experiment seed");
  app.add_option("--out", g.out, "Output directory (default: $MOMLAB_OUT or ./runs, then the experiment name)");
  app.add_option("--jobs", g.jobs, "Worker threads for sweeps")->check(CLI::PositiveNumber);
  app.add_flag("--dry-run", g.dry_run, "Validate and print the run plan without computing");

  std::string preset_help = "Preset name:";
  for (const auto& n : momlab::preset_names()) preset_help += " " + n;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"quadratic-demo", "Tuned heavy ball on an ill-conditioned quadratic, one run per momentum"},
      {"train", "Train with a single- or multi-phase schedule"},
      {"equivalence", "Match momentum runs to plain gradient descent learning rates"},
      {"sweep", "Grid, random or transition-epoch sweep"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    sub->add_option("--preset", g.preset, preset_help);
    sub->add_option("--iterations", g.iterations, "Override the iteration count (quadratic problems)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--epochs", g.epochs, "Override the epoch count")->check(CLI::PositiveNumber);
    if (name == "sweep") sub->add_flag("--allow-large", g.allow_large, "Lift the sweep budget cap");
  }
  std::vector<std::string> inputs;
  auto* report = app.add_subcommand("report", "Render plots and summaries from trace or sweep CSV files");
  report->fallthrough();
  report->add_option("inputs", inputs, "CSV files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "report") return run_report(g, inputs);
    return run_command(g, command);
  } catch (const momlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const momlab::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const momlab::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
