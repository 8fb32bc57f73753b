#pragma once

#include "momlab/diagnostics.hpp"
#include "momlab/sweep.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace momlab {

enum class PlotKind { line, multi_line, heatmap };
enum class AxisScale { linear, log };
enum class TraceMetric { loss, alignment, scale, eta_effective, grad_norm };

TraceMetric parse_trace_metric(const std::string& name);
std::string to_string(TraceMetric m);

struct PlotSpec {
  PlotKind kind = PlotKind::multi_line;
  AxisScale x_axis = AxisScale::linear;
  AxisScale y_axis = AxisScale::linear;
  TraceMetric metric = TraceMetric::loss;
  std::string title;
  std::string x_label = "step";
  std::string y_label;
  std::vector<std::string> series_labels;  // overrides trace labels when non-empty
  int width = 640;
  int height = 360;
};

/// One polyline per trace plus a legend. Byte-deterministic for identical
/// input. Throws InvalidArgument naming the offending row when a log axis
/// meets a non-positive value.
std::string render_loss_curves(const std::vector<TrainTrace>& traces, const PlotSpec& spec);

/// Panels stacked vertically, one per spec, sharing the traces.
std::string render_trace_panels(const std::vector<TrainTrace>& traces, const std::vector<PlotSpec>& panels);

/// One cell per (eta, mu). Repetitions collapse to their median; a cell whose
/// runs all diverged is drawn with the divergence pattern. The colour scale
/// bounds are written into the document metadata.
std::string render_heatmap(const SweepResult& result, const PlotSpec& spec);

/// Final objective against transition epoch, one point per run plus the bin medians.
std::string render_transition_curve(const SweepResult& result, const PlotSpec& spec);

/// Maps t in [0, 1] onto the fixed colour ramp; "#rrggbb".
std::string ramp_color(double t);

// ---------------------------------------------------------------------------
// Tables

using TableCell = std::variant<std::monostate, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<TableCell>> rows;

  /// Value of `column` in row `row`; nullopt for empty cells and text.
  std::optional<double> number(std::size_t row, const std::string& column) const;
  bool operator==(const Table&) const = default;
};

/// initial_loss,final_loss,min_loss,median_loss,steps,r_last_decile_mean,s_run_mean
Table summarize(const TrainTrace& trace, double tail_fraction = 0.1);

/// Grid and random sweeps: one row per mu. Transition sweeps: one row per transition epoch.
Table summarize(const SweepResult& result);

void write_table_csv(std::ostream& out, const Table& table);

}  // namespace momlab
