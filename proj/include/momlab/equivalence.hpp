#pragma once

#include "momlab/common.hpp"
#include "momlab/optim.hpp"

#include <nlohmann/json_fwd.hpp>

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

namespace momlab {

/// Training-loss curve of one run.
struct LossCurve {
  std::vector<double> values;
  HyperParams hyper;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> divergence_step;  // values stop before it

  bool diverged() const { return divergence_step.has_value(); }
};

enum class CurveSpace { raw, log };

CurveSpace parse_curve_space(const std::string& name);
std::string to_string(CurveSpace s);

/// L2 distance over the common prefix; in log space applied to ln(loss).
double curve_distance(const LossCurve& a, const LossCurve& b, CurveSpace space = CurveSpace::raw);
double curve_distance(const std::vector<double>& a, const std::vector<double>& b, CurveSpace space = CurveSpace::raw);

/// How each curve is produced: a single-phase run whose learning rate and
/// momentum are supplied per call. Every curve uses the same seeds, so the
/// compared runs start from the same point and see the same batches.
struct CurveSetup {
  BatchMode batch;
  double weight_decay = 0.0;
  std::int64_t epochs = 1;
  std::int64_t iters_per_epoch = 1;
  std::uint64_t seed = 0;
  LogGranularity logging = LogGranularity::automatic;
  unsigned jobs = 1;
};

LossCurve train_curve(const Problem& problem, const CurveSetup& setup, double learning_rate, double momentum);

struct CandidateOutcome {
  double eta = 0.0;
  std::optional<double> distance;  // nullopt when the candidate diverged
  std::optional<std::int64_t> divergence_step;
};

struct EquivalenceMatch {
  LossCurve baseline;
  LossCurve matched;
  double candidate_mu = 0.0;
  double matched_eta = 0.0;
  double distance = 0.0;
  double ratio = 0.0;  // baseline eta / matched eta
  CurveSpace space = CurveSpace::raw;
  std::vector<CandidateOutcome> candidates;  // sorted by eta
  bool unimodal = true;  // distance over the grid has a single valley

  double baseline_eta() const { return baseline.hyper.learning_rate; }
};

class NoMatchError : public std::runtime_error {
 public:
  NoMatchError(const std::string& what, std::vector<CandidateOutcome> outcomes)
      : std::runtime_error(what), outcomes_(std::move(outcomes)) {}
  const std::vector<CandidateOutcome>& outcomes() const { return outcomes_; }

 private:
  std::vector<CandidateOutcome> outcomes_;
};

/// Trains one curve per grid value at `target_mu` and returns the candidate
/// closest to the baseline. Diverged candidates are excluded; ties go to the
/// smaller learning rate.
EquivalenceMatch find_equivalent_lr(const Problem& problem, const LossCurve& baseline, double target_mu,
                                    std::vector<double> eta_grid, const CurveSetup& setup,
                                    CurveSpace space = CurveSpace::raw);

struct LinearFit {
  double mu = 0.0;
  bool available = false;
  std::size_t points = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least squares y = slope x + intercept. Unavailable with fewer than two
/// points or no spread in x.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct EquivalenceSweepResult {
  std::vector<EquivalenceMatch> matches;
  std::vector<LinearFit> fits;  // one per mu, matched eta against baseline eta
  std::vector<double> failed_baselines;  // baseline etas that diverged
};

EquivalenceSweepResult equivalence_sweep(const Problem& problem, const std::vector<double>& baseline_etas,
                                         const std::vector<double>& mus, const std::vector<double>& candidate_grid,
                                         const CurveSetup& setup, CurveSpace space = CurveSpace::raw);

/// mu,baseline_eta,matched_eta,distance,ratio
void write_match_table_csv(std::ostream& out, const std::vector<EquivalenceMatch>& matches);
nlohmann::json fit_summary_json(const EquivalenceSweepResult& result);

}  // namespace momlab
