#include "momlab/optim.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numeric>
#include <random>

namespace momlab {

void HyperParams::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw InvalidArgument("learning_rate must be a positive finite number");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
    throw InvalidArgument("weight_decay must be non-negative");
}

void ScheduleSpec::validate(std::int64_t total_epochs) const {
  if (phases.empty()) throw InvalidArgument("schedule: at least one phase required");
  if (transition_epochs.size() + 1 != phases.size())
    throw InvalidArgument("schedule: need exactly one transition epoch per phase boundary");
  for (const auto& p : phases) p.hyper.validate();
  for (std::size_t i = 0; i < transition_epochs.size(); ++i) {
    const auto t = transition_epochs[i];
    if (t < 0 || t >= total_epochs)
      throw InvalidArgument("schedule: transition epoch " + std::to_string(t) + " outside the budget of " +
                            std::to_string(total_epochs) + " epochs");
    if (i > 0 && t <= transition_epochs[i - 1])
      throw InvalidArgument("schedule: transition epochs must be strictly increasing");
  }
}

std::size_t active_phase_index(const ScheduleSpec& spec, std::int64_t epoch, std::int64_t total_epochs) {
  if (epoch < 0 || epoch >= total_epochs)
    throw InvalidArgument("active_phase: epoch " + std::to_string(epoch) + " out of range");
  std::size_t k = 0;
  for (auto t : spec.transition_epochs)
    if (t <= epoch) ++k;
  if (k >= spec.phases.size()) throw InvalidArgument("active_phase: schedule has too few phases");
  return k;
}

const PhaseSpec& active_phase(const ScheduleSpec& spec, std::int64_t epoch, std::int64_t total_epochs) {
  return spec.phases[active_phase_index(spec, epoch, total_epochs)];
}

namespace {

nlohmann::json run_description(const Problem& problem, const ScheduleSpec& spec, const TrainOptions& o) {
  nlohmann::json phases = nlohmann::json::array();
  for (const auto& p : spec.phases)
    phases.push_back({{"learning_rate", p.hyper.learning_rate},
                      {"momentum", p.hyper.momentum},
                      {"weight_decay", p.hyper.weight_decay},
                      {"batch_size", p.batch.batch_size}});
  return {{"dimension", problem.dimension()},
          {"phases", phases},
          {"transition_epoch", spec.transition_epochs},
          {"epochs", o.epochs},
          {"iters_per_epoch", o.iters_per_epoch},
          {"seed", o.seed},
          {"init_seed", o.init_seed.value_or(o.seed)},
          {"reset_momentum", o.reset_momentum_on_transition}};
}

bool exploded(double loss, double initial, double factor) {
  if (!std::isfinite(loss)) return true;
  return loss > factor * std::max(std::abs(initial), 1e-300);
}

}  // namespace

TrainResult train(const Problem& problem, const ScheduleSpec& spec, const TrainOptions& o) {
  if (o.epochs < 1) throw InvalidArgument("train: epochs must be >= 1");
  if (o.iters_per_epoch < 1) throw InvalidArgument("train: iters_per_epoch must be >= 1");
  spec.validate(o.epochs);
  for (const auto& p : spec.phases)
    if (!p.batch.full_batch() && problem.n_samples() == 0)
      throw InvalidArgument("train: minibatch phase requires a problem with a dataset");

  std::optional<VectorXd> reference;
  if (o.reference) {
    if (o.reference->x_star.size() != problem.dimension())
      throw InvalidArgument("train: reference point dimension mismatch");
    reference = o.reference->x_star;
  } else {
    reference = problem.optimum_hint();
  }

  LogGranularity logging = o.logging;
  if (logging == LogGranularity::automatic)
    logging = problem.n_samples() == 0 ? LogGranularity::iteration : LogGranularity::epoch;

  TrainResult result;
  VectorXd w0 = o.initial_point ? *o.initial_point : problem.initial_point(o.init_seed.value_or(o.seed));
  if (w0.size() != problem.dimension()) throw InvalidArgument("train: initial point dimension mismatch");
  MomentumStateD state(std::move(w0));

  TrainTrace& trace = result.trace;
  trace.fingerprint = config_fingerprint(run_description(problem, spec, o));

  std::mt19937_64 rng(o.seed);
  std::vector<std::size_t> order(problem.n_samples());
  std::iota(order.begin(), order.end(), std::size_t{0});

  EvalResult cur = problem.eval_grad(state.w);
  result.initial_loss = cur.loss;
  bool diverged = exploded(cur.loss, cur.loss, o.divergence_factor) || !cur.grad.allFinite();
  if (diverged) trace.divergence_step = 0;

  std::size_t phase_idx = 0;
  bool started = false;
  std::int64_t epoch = 0;

  auto log_row = [&](const PhaseSpec& phase) {
    TraceRow row;
    row.step = state.step;
    row.epoch = epoch;
    row.phase_index = static_cast<int>(phase_idx);
    row.loss = cur.loss;
    row.grad_norm = cur.grad.norm();
    row.momentum_norm = state.g.norm();
    row.scale = scale(state.g, cur.grad);
    if (reference) row.alignment = alignment(state.g, state.w, *reference);
    if (row.scale) row.eta_effective = phase.hyper.learning_rate * *row.scale;
    trace.rows.push_back(row);
    if (o.store_snapshots) trace.snapshots.push_back({state.step, state.w, state.g});
    if (o.row_sink) o.row_sink(row);
  };

  auto check = [&]() {
    if (exploded(cur.loss, result.initial_loss, o.divergence_factor) || !cur.grad.allFinite()) {
      trace.divergence_step = state.step;
      diverged = true;
    }
  };

  for (; epoch < o.epochs && !diverged; ++epoch) {
    const std::size_t k = active_phase_index(spec, epoch, o.epochs);
    if (!started || k != phase_idx) {
      if (started && o.reset_momentum_on_transition) state = reset_on_transition(std::move(state));
      phase_idx = k;
      started = true;
    }
    const PhaseSpec& phase = spec.phases[phase_idx];

    if (phase.batch.full_batch()) {
      for (std::int64_t i = 0; i < o.iters_per_epoch && !diverged; ++i) {
        momentum_step_inplace(state, cur.grad, phase.hyper);
        cur = problem.eval_grad(state.w);
        check();
        if (!diverged && logging == LogGranularity::iteration) log_row(phase);
      }
    } else {
      // Epoch-level reshuffle, seeded Fisher-Yates.
      for (std::size_t i = order.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(order[i - 1], order[pick(rng)]);
      }
      const std::size_t bs = phase.batch.batch_size;
      for (std::size_t start = 0; start < order.size() && !diverged; start += bs) {
        const std::size_t len = std::min(bs, order.size() - start);
        const EvalResult batch = problem.eval_grad(state.w, std::span<const std::size_t>(order).subspan(start, len));
        if (!std::isfinite(batch.loss) || !batch.grad.allFinite()) {
          trace.divergence_step = state.step;
          diverged = true;
          break;
        }
        momentum_step_inplace(state, batch.grad, phase.hyper);
        if (logging == LogGranularity::iteration) {
          cur = problem.eval_grad(state.w);
          check();
          if (!diverged) log_row(phase);
        }
      }
      if (!diverged && logging != LogGranularity::iteration) {
        cur = problem.eval_grad(state.w);
        check();
      }
    }
    if (!diverged && logging == LogGranularity::epoch) log_row(phase);
  }

  result.final_loss = diverged ? HUGE_VAL : cur.loss;
  result.state = std::move(state);
  return result;
}

}  // namespace momlab
