#pragma once

#include "momlab/config.hpp"
#include "momlab/equivalence.hpp"
#include "momlab/report.hpp"
#include "momlab/sweep.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace momlab {

struct RunContext {
  std::filesystem::path out_dir;
  unsigned jobs = 1;
};

/// Tuned run for one momentum of the quadratic demo.
struct DemoRun {
  double mu = 0.0;
  double eta = 0.0;
  TrainTrace trace;
};

struct DemoResult {
  SweepResult tuning;
  std::vector<DemoRun> runs;  // in the order of demo.momenta
};

/// Grid-tunes eta per momentum on the final objective, then reruns each
/// winner with the same seeds and full logging.
DemoResult quadratic_demo(const Problem& problem, const ExperimentConfig& cfg, unsigned jobs);

/// The traces `train` produces: one per compare_momenta entry, or a single
/// run of the configured schedule. Data problems get two-pass alignment.
std::vector<TrainTrace> train_experiment(const Problem& problem, const ExperimentConfig& cfg);

/// Baseline and candidate learning rates, in absolute units.
std::vector<double> equivalence_baselines(const Problem& problem, const ExperimentConfig& cfg);
std::vector<double> equivalence_candidates(const Problem& problem, const ExperimentConfig& cfg);
CurveSetup equivalence_setup(const ExperimentConfig& cfg, unsigned jobs);

RunSetup sweep_setup(const ExperimentConfig& cfg, unsigned jobs);
SweepResult sweep_experiment(const Problem& problem, const ExperimentConfig& cfg, unsigned jobs);

/// Final losses of each phase of a two-phase schedule run alone for the whole
/// budget, one cell per (phase, seed), seeded like the transition sweep.
SweepResult single_phase_baselines(const Problem& problem, const ExperimentConfig& cfg, unsigned jobs);

/// Human-readable plan: run counts and estimated optimizer steps.
std::string run_plan(const ExperimentConfig& cfg);

/// Runs cfg.command and writes every artifact plus config.json into ctx.out_dir.
/// Returns the written file names, sorted.
std::vector<std::string> run_experiment(const ExperimentConfig& cfg, const RunContext& ctx, std::ostream& log);

/// Renders plots and summaries for trace or sweep CSV files.
std::vector<std::string> run_report(const std::vector<std::filesystem::path>& inputs,
                                    const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace momlab
