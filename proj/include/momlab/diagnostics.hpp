#pragma once

#include "momlab/common.hpp"

#include <nlohmann/json_fwd.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace momlab {

// Diagnostics that cannot be computed (zero-norm gradient, zero distance to the
// reference) are std::nullopt in memory and an empty field when serialized.
using Diagnostic = std::optional<double>;

/// Scale r = ||g|| / ||grad||.
template <typename DerivedG, typename DerivedGrad>
Diagnostic scale(const Eigen::MatrixBase<DerivedG>& g, const Eigen::MatrixBase<DerivedGrad>& grad) {
  if (g.size() != grad.size()) throw InvalidArgument("scale: dimension mismatch");
  const auto gn = grad.norm();
  if (!(gn > 0)) return std::nullopt;
  return static_cast<double>(g.norm() / gn);
}

/// Cosine between the descent direction -g and (x_star - w).
///
/// The buffer g accumulates gradients and the update subtracts it, so -g is
/// the direction actually travelled; a buffer that drives w straight at
/// x_star scores +1.
template <typename DerivedG, typename DerivedW, typename DerivedRef>
Diagnostic alignment(const Eigen::MatrixBase<DerivedG>& g, const Eigen::MatrixBase<DerivedW>& w,
                     const Eigen::MatrixBase<DerivedRef>& x_star) {
  if (g.size() != w.size() || w.size() != x_star.size()) throw InvalidArgument("alignment: dimension mismatch");
  const auto diff = (x_star - w).eval();
  const auto gn = g.norm();
  const auto dn = diff.norm();
  if (!(gn > 0) || !(dn > 0)) return std::nullopt;
  const double c = static_cast<double>(-g.dot(diff) / (gn * dn));
  return std::clamp(c, -1.0, 1.0);
}

enum class ReferenceSource { known_optimum, final_iterate };

struct ReferencePoint {
  VectorXd x_star;
  ReferenceSource source = ReferenceSource::known_optimum;
};

struct TraceRow {
  std::int64_t step = 0;
  std::int64_t epoch = 0;
  int phase_index = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double momentum_norm = 0.0;
  Diagnostic scale;
  Diagnostic alignment;
  Diagnostic eta_effective;  // learning rate times scale

  bool operator==(const TraceRow&) const = default;
};

struct Snapshot {
  std::int64_t step = 0;
  VectorXd w;
  VectorXd g;
};

struct TrainTrace {
  std::vector<TraceRow> rows;
  std::string fingerprint;  // hash of the producing configuration
  std::string label;        // legend text; fingerprint prefix when empty
  std::optional<std::int64_t> divergence_step;
  std::vector<Snapshot> snapshots;  // parallel to rows when recorded

  bool diverged() const { return divergence_step.has_value(); }
  std::string display_label() const;
  std::vector<double> losses() const;
};

/// Fills the alignment column from stored snapshots. Idempotent for a fixed
/// reference. Throws InvalidArgument if snapshots are missing.
TrainTrace annotate_alignment(TrainTrace trace, const ReferencePoint& ref);

/// Reference taken from the last snapshot of the trace.
ReferencePoint final_iterate_reference(const TrainTrace& trace);

/// Mean over the trailing `fraction` of rows; nullopt when nothing is defined.
Diagnostic tail_mean_scale(const TrainTrace& trace, double fraction = 0.1);
Diagnostic mean_alignment(const TrainTrace& trace);

// Serialization ------------------------------------------------------------

/// step,epoch,phase,loss,grad_norm,momentum_norm,scale,alignment,eta_effective
inline constexpr const char* kTraceCsvHeader =
    "step,epoch,phase,loss,grad_norm,momentum_norm,scale,alignment,eta_effective";

void write_trace_csv(std::ostream& out, const TrainTrace& trace);
TrainTrace read_trace_csv(std::istream& in);

nlohmann::json to_json(const TrainTrace& trace);
TrainTrace trace_from_json(const nlohmann::json& j);

/// Fingerprint of a configuration: FNV-1a of its canonical JSON text.
std::string config_fingerprint(const nlohmann::json& config);

}  // namespace momlab
