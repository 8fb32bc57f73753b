#pragma once

#include "momlab/common.hpp"
#include "momlab/diagnostics.hpp"
#include "momlab/problems.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace momlab {

struct HyperParams {
  double learning_rate = 0.1;
  double momentum = 0.0;
  double weight_decay = 0.0;

  /// Throws InvalidArgument unless eta > 0, 0 <= mu < 1 and weight_decay >= 0.
  void validate() const;
  bool operator==(const HyperParams&) const = default;
};

/// Heavy-ball state: parameters w^t, buffer g^t, step count t.
template <typename Scalar>
struct MomentumState {
  Vector<Scalar> w;
  Vector<Scalar> g;
  std::int64_t step = 0;

  MomentumState() = default;
  explicit MomentumState(Vector<Scalar> w0) : w(std::move(w0)), g(Vector<Scalar>::Zero(w.size())) {}
};

using MomentumStateD = MomentumState<double>;

/// In-place heavy-ball update:
///   g <- mu g + (grad + wd w);  w <- w - eta g;  t <- t + 1.
template <typename Scalar, typename Derived>
void momentum_step_inplace(MomentumState<Scalar>& s, const Eigen::MatrixBase<Derived>& grad,
                           const HyperParams& hp) {
  if (grad.size() != s.w.size() || s.g.size() != s.w.size())
    throw InvalidArgument("momentum_step: dimension mismatch");
  if (!grad.allFinite()) throw NumericalDivergence(s.step, "non-finite gradient");
  const auto mu = static_cast<Scalar>(hp.momentum);
  const auto eta = static_cast<Scalar>(hp.learning_rate);
  if (hp.weight_decay != 0.0)
    s.g = mu * s.g + grad + static_cast<Scalar>(hp.weight_decay) * s.w;
  else
    s.g = mu * s.g + grad;
  s.w -= eta * s.g;
  ++s.step;
}

template <typename Scalar, typename Derived>
MomentumState<Scalar> momentum_step(MomentumState<Scalar> s, const Eigen::MatrixBase<Derived>& grad,
                                    const HyperParams& hp) {
  momentum_step_inplace(s, grad, hp);
  return s;
}

/// Zero the buffer; parameters and step count are kept.
template <typename Scalar>
MomentumState<Scalar> reset_on_transition(MomentumState<Scalar> s) {
  s.g.setZero(s.w.size());
  return s;
}

// ---------------------------------------------------------------------------
// Schedules

struct BatchMode {
  std::size_t batch_size = 0;  // 0 = full batch
  bool full_batch() const { return batch_size == 0; }
  static BatchMode full() { return {}; }
  static BatchMode minibatch(std::size_t size) { return {size}; }
  bool operator==(const BatchMode&) const = default;
};

enum class Algorithm { sgd_momentum };

struct PhaseSpec {
  HyperParams hyper;
  Algorithm algorithm = Algorithm::sgd_momentum;
  BatchMode batch;
  bool operator==(const PhaseSpec&) const = default;
};

struct ScheduleSpec {
  std::vector<PhaseSpec> phases;
  std::vector<std::int64_t> transition_epochs;  // strictly increasing, size phases-1

  static ScheduleSpec single(PhaseSpec p) { return {{std::move(p)}, {}}; }

  /// Throws InvalidArgument when the schedule is inconsistent with an epoch budget.
  void validate(std::int64_t total_epochs) const;
};

/// Index of the phase owning `epoch`; a transition epoch belongs to the new phase.
std::size_t active_phase_index(const ScheduleSpec& spec, std::int64_t epoch, std::int64_t total_epochs);
const PhaseSpec& active_phase(const ScheduleSpec& spec, std::int64_t epoch, std::int64_t total_epochs);

// ---------------------------------------------------------------------------
// Training loop

enum class LogGranularity { automatic, iteration, epoch };

struct TrainOptions {
  std::int64_t epochs = 1;
  /// Steps per epoch for full-batch phases. Minibatch phases take one pass
  /// over the shuffled training set per epoch.
  std::int64_t iters_per_epoch = 1;
  std::uint64_t seed = 0;  // shuffling
  std::optional<std::uint64_t> init_seed;  // starting point; defaults to seed
  std::optional<VectorXd> initial_point;
  LogGranularity logging = LogGranularity::automatic;
  bool store_snapshots = false;
  bool reset_momentum_on_transition = true;
  /// Online alignment reference; the problem's known optimum is used when unset.
  std::optional<ReferencePoint> reference;
  /// A run whose loss exceeds divergence_factor times its initial loss is
  /// treated as diverged, as is any non-finite loss.
  double divergence_factor = 1e12;
  std::function<void(const TraceRow&)> row_sink;
};

struct TrainResult {
  MomentumStateD state;
  TrainTrace trace;
  double initial_loss = 0.0;
  double final_loss = 0.0;  // loss at the final state; +inf when diverged
};

/// Runs the schedule end to end. Divergence ends the run and is recorded in
/// the trace rather than thrown.
TrainResult train(const Problem& problem, const ScheduleSpec& spec, const TrainOptions& options);

}  // namespace momlab
