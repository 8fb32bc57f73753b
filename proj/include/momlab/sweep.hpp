#pragma once

#include "momlab/common.hpp"
#include "momlab/optim.hpp"

#include <nlohmann/json_fwd.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace momlab {

struct SweepGrid {
  std::vector<double> eta_values;
  std::vector<double> one_minus_mu_values;
  std::size_t repetitions = 1;

  /// Log-spaced grid, e.g. eta in [1e-7, 5e5] and 1-mu in [1e-3, 1] with 50 values each.
  static SweepGrid log_grid(double eta_lo, double eta_hi, std::size_t n_eta, double omm_lo, double omm_hi,
                            std::size_t n_mu, std::size_t repetitions = 1);
  void validate() const;
  std::size_t cell_count() const { return eta_values.size() * one_minus_mu_values.size() * repetitions; }
};

/// Shared settings for every run a sweep launches.
struct RunSetup {
  std::int64_t epochs = 1;
  std::int64_t iters_per_epoch = 1;
  BatchMode batch;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  bool reset_momentum_on_transition = true;
  // Guardrail against grids that are not desk scale.
  std::size_t max_runs = 5000;
  double max_steps = 2e8;
  bool allow_large = false;
};

enum class CellStatus { ok, diverged };

struct CellOutcome {
  std::optional<double> eta;
  std::optional<double> mu;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> transition;
  std::optional<double> final_loss;  // nullopt when diverged
  CellStatus status = CellStatus::ok;
  std::optional<std::int64_t> best_step;  // step of the lowest logged loss
  std::optional<double> heldout_accuracy;
  std::size_t repetition = 0;
};

struct BinSummary {
  std::int64_t lo = 0;  // [lo, hi) in epochs
  std::int64_t hi = 0;
  std::size_t runs = 0;
  std::size_t diverged = 0;
  std::optional<double> median_final_loss;
  std::optional<double> median_heldout_accuracy;
};

enum class SweepKind { grid, random, transition };

struct SweepResult {
  SweepKind kind = SweepKind::grid;
  std::vector<CellOutcome> cells;
  std::vector<BinSummary> bins;  // transition sweeps only

  std::size_t diverged_count() const;
  /// Lowest final loss among converged cells with this momentum.
  std::optional<CellOutcome> best_for_mu(double mu) const;
  std::optional<CellOutcome> best() const;
  std::optional<CellOutcome> worst() const;
  std::vector<double> distinct_mus() const;
  std::vector<double> distinct_etas() const;
};

/// Estimated optimizer steps for one run of `setup` on `problem`.
double estimate_steps(const Problem& problem, const RunSetup& setup);

/// Throws InvalidArgument when runs or steps exceed the caps and allow_large is off.
void check_budget(std::size_t runs, double steps_per_run, const RunSetup& setup);

/// One run per (eta, mu, repetition) cell. Cell seeds hash the global seed with
/// the cell's eta, mu and repetition, so results do not depend on grid order
/// or worker count. Cells of one repetition share the starting point.
/// One training run summarized as a cell; eta, mu and transition are left for the caller.
CellOutcome run_cell(const Problem& problem, const ScheduleSpec& schedule, const RunSetup& setup, std::uint64_t seed,
                     std::uint64_t init_seed);

SweepResult run_grid(const Problem& problem, const SweepGrid& grid, const RunSetup& setup);

/// Seed used by run_grid for a cell (shuffling) and its starting point.
std::uint64_t cell_seed(std::uint64_t seed, double eta, double mu, std::size_t repetition);
std::uint64_t cell_init_seed(std::uint64_t seed, std::size_t repetition);

/// Two-phase schedule with the transition epoch swept over `candidates`, one
/// run per (transition, seed). Medians are binned over `bins` equally sized
/// intervals of [0, epochs_total); empty bins are omitted.
SweepResult transition_sweep(const Problem& problem, const ScheduleSpec& schedule_template,
                             const std::vector<std::int64_t>& candidates, std::int64_t epochs_total,
                             const std::vector<std::uint64_t>& seeds, const RunSetup& setup, std::size_t bins = 10);

/// Learning rates drawn log-uniformly from [eta_lo, eta_hi] with a fixed
/// momentum. Sampling and training both use setup.seed.
SweepResult random_search(const Problem& problem, double eta_lo, double eta_hi, double mu, std::size_t n_samples,
                          const RunSetup& setup);
std::vector<double> sample_log_uniform(double lo, double hi, std::size_t n, std::uint64_t seed);

/// eta,mu,seed,transition,final_loss,status,best_step,heldout_accuracy
inline constexpr const char* kSweepCsvHeader =
    "eta,mu,seed,transition,final_loss,status,best_step,heldout_accuracy";

void write_sweep_csv(std::ostream& out, const SweepResult& result);
SweepResult read_sweep_csv(std::istream& in);
nlohmann::json sweep_summary_json(const SweepResult& result);

std::string to_string(SweepKind k);

}  // namespace momlab
