#include "momlab/report.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>

namespace momlab {

TraceMetric parse_trace_metric(const std::string& name) {
  if (name == "loss") return TraceMetric::loss;
  if (name == "alignment") return TraceMetric::alignment;
  if (name == "scale") return TraceMetric::scale;
  if (name == "eta_effective") return TraceMetric::eta_effective;
  if (name == "grad_norm") return TraceMetric::grad_norm;
  throw InvalidArgument("unknown trace metric '" + name + "'");
}

std::string to_string(TraceMetric m) {
  switch (m) {
    case TraceMetric::loss: return "loss";
    case TraceMetric::alignment: return "alignment";
    case TraceMetric::scale: return "scale";
    case TraceMetric::eta_effective: return "eta_effective";
    case TraceMetric::grad_norm: return "grad_norm";
  }
  return "?";
}

namespace {

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string px(double v) { return fmt("%.2f", v); }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::optional<double> metric_value(const TraceRow& r, TraceMetric m) {
  switch (m) {
    case TraceMetric::loss: return r.loss;
    case TraceMetric::alignment: return r.alignment;
    case TraceMetric::scale: return r.scale;
    case TraceMetric::eta_effective: return r.eta_effective;
    case TraceMetric::grad_norm: return r.grad_norm;
  }
  return std::nullopt;
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  AxisScale scale = AxisScale::linear;

  double tr(double v) const { return scale == AxisScale::log ? std::log10(v) : v; }
  double frac(double v) const { return (tr(v) - tr(lo)) / (tr(hi) - tr(lo)); }

  static Axis fit(double lo, double hi, AxisScale s) {
    if (!(lo <= hi)) {
      lo = s == AxisScale::log ? 1.0 : 0.0;
      hi = lo;
    }
    if (lo == hi) {
      if (s == AxisScale::log) {
        lo /= 2.0;
        hi *= 2.0;
      } else {
        lo -= 0.5;
        hi += 0.5;
      }
    }
    return {lo, hi, s};
  }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (scale == AxisScale::log) {
      const int a = static_cast<int>(std::ceil(std::log10(lo) - 1e-9));
      const int b = static_cast<int>(std::floor(std::log10(hi) + 1e-9));
      const int stride = std::max(1, (b - a + 1) / 6 + ((b - a + 1) % 6 != 0 ? 1 : 0));
      for (int e = a; e <= b; e += stride) out.push_back(std::pow(10.0, e));
      if (out.empty()) out = {lo, hi};
    } else {
      for (int i = 0; i <= 4; ++i) out.push_back(lo + (hi - lo) * i / 4.0);
    }
    return out;
  }
};

struct Frame {
  double x0, y0, w, h;  // plot area
};

std::string svg_open(int width, int height, const std::string& title) {
  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
       std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
       "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<title>" + escape(title) + "</title>\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(width) + "\" height=\"" + std::to_string(height) +
       "\" fill=\"#ffffff\"/>\n";
  return s;
}

void draw_axes(std::string& s, const Frame& f, const Axis& xa, const Axis& ya, const PlotSpec& spec) {
  s += "<rect class=\"frame\" x=\"" + px(f.x0) + "\" y=\"" + px(f.y0) + "\" width=\"" + px(f.w) + "\" height=\"" +
       px(f.h) + "\" fill=\"none\" stroke=\"#444444\"/>\n";
  for (double t : xa.ticks()) {
    const double x = f.x0 + xa.frac(t) * f.w;
    s += "<line x1=\"" + px(x) + "\" y1=\"" + px(f.y0 + f.h) + "\" x2=\"" + px(x) + "\" y2=\"" + px(f.y0 + f.h + 4) +
         "\" stroke=\"#444444\"/>\n";
    s += "<text class=\"tick\" x=\"" + px(x) + "\" y=\"" + px(f.y0 + f.h + 16) + "\" text-anchor=\"middle\">" +
         fmt("%.3g", t) + "</text>\n";
  }
  for (double t : ya.ticks()) {
    const double y = f.y0 + (1.0 - ya.frac(t)) * f.h;
    s += "<line x1=\"" + px(f.x0 - 4) + "\" y1=\"" + px(y) + "\" x2=\"" + px(f.x0) + "\" y2=\"" + px(y) +
         "\" stroke=\"#444444\"/>\n";
    s += "<text class=\"tick\" x=\"" + px(f.x0 - 6) + "\" y=\"" + px(y + 4) + "\" text-anchor=\"end\">" +
         fmt("%.3g", t) + "</text>\n";
  }
  s += "<text class=\"xlabel\" x=\"" + px(f.x0 + f.w / 2) + "\" y=\"" + px(f.y0 + f.h + 32) +
       "\" text-anchor=\"middle\">" + escape(spec.x_label) + "</text>\n";
  s += "<text class=\"ylabel\" x=\"" + px(f.x0 - 52) + "\" y=\"" + px(f.y0 + f.h / 2) +
       "\" text-anchor=\"middle\" transform=\"rotate(-90 " + px(f.x0 - 52) + " " + px(f.y0 + f.h / 2) + ")\">" +
       escape(spec.y_label.empty() ? to_string(spec.metric) : spec.y_label) + "</text>\n";
  if (!spec.title.empty())
    s += "<text class=\"title\" x=\"" + px(f.x0 + f.w / 2) + "\" y=\"" + px(f.y0 - 8) +
         "\" text-anchor=\"middle\" font-size=\"13\">" + escape(spec.title) + "</text>\n";
}

// Draws one panel at vertical offset `top`; returns the SVG fragment.
std::string line_panel(const std::vector<TrainTrace>& traces, const PlotSpec& spec, double top) {
  if (traces.empty()) throw InvalidArgument("render: need at least one trace");
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (std::size_t k = 0; k < traces.size(); ++k) {
    for (std::size_t i = 0; i < traces[k].rows.size(); ++i) {
      const auto& r = traces[k].rows[i];
      const auto v = metric_value(r, spec.metric);
      if (!v || !std::isfinite(*v)) continue;
      if (spec.y_axis == AxisScale::log && !(*v > 0.0))
        throw InvalidArgument("log-scale plot: non-positive " + to_string(spec.metric) + " in trace " +
                              std::to_string(k) + " (" + traces[k].display_label() + ") row " + std::to_string(i) + " (step " + std::to_string(r.step) +
                              ")");
      const auto x = static_cast<double>(r.step);
      if (spec.x_axis == AxisScale::log && !(x > 0.0))
        throw InvalidArgument("log-scale plot: non-positive step in trace " + std::to_string(k) + " row " +
                              std::to_string(i));
      xlo = std::min(xlo, x);
      xhi = std::max(xhi, x);
      ylo = std::min(ylo, *v);
      yhi = std::max(yhi, *v);
    }
  }
  const Axis xa = Axis::fit(xlo, xhi, spec.x_axis);
  const Axis ya = Axis::fit(ylo, yhi, spec.y_axis);
  const Frame f{70.0, top + 30.0, static_cast<double>(spec.width) - 70.0 - 170.0,
                static_cast<double>(spec.height) - 30.0 - 45.0};

  std::string s = "<g class=\"panel\" data-metric=\"" + to_string(spec.metric) + "\">\n";
  draw_axes(s, f, xa, ya, spec);
  for (std::size_t k = 0; k < traces.size(); ++k) {
    const std::string color = kPalette[k % kPalette.size()];
    std::string pts;
    for (const auto& r : traces[k].rows) {
      const auto v = metric_value(r, spec.metric);
      if (!v || !std::isfinite(*v)) continue;
      const double x = f.x0 + xa.frac(static_cast<double>(r.step)) * f.w;
      const double y = f.y0 + (1.0 - ya.frac(*v)) * f.h;
      if (!pts.empty()) pts += ' ';
      pts += px(x) + "," + px(y);
    }
    s += "<polyline class=\"series\" data-series=\"" + std::to_string(k) + "\" fill=\"none\" stroke=\"" + color +
         "\" stroke-width=\"1.2\" points=\"" + pts + "\"/>\n";
    const std::string label = k < spec.series_labels.size() ? spec.series_labels[k] : traces[k].display_label();
    const double ly = f.y0 + 12.0 + 16.0 * static_cast<double>(k);
    const double lx = f.x0 + f.w + 12.0;
    s += "<g class=\"legend-entry\"><line x1=\"" + px(lx) + "\" y1=\"" + px(ly) + "\" x2=\"" + px(lx + 18) +
         "\" y2=\"" + px(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/><text x=\"" + px(lx + 24) + "\" y=\"" +
         px(ly + 4) + "\">" + escape(label) + "</text></g>\n";
  }
  s += "</g>\n";
  return s;
}

}  // namespace

std::string render_loss_curves(const std::vector<TrainTrace>& traces, const PlotSpec& spec) {
  if (spec.kind == PlotKind::heatmap) throw InvalidArgument("render_loss_curves: heatmap spec given");
  std::string s = svg_open(spec.width, spec.height, spec.title);
  s += line_panel(traces, spec, 0.0);
  s += "</svg>\n";
  return s;
}

std::string render_trace_panels(const std::vector<TrainTrace>& traces, const std::vector<PlotSpec>& panels) {
  if (panels.empty()) throw InvalidArgument("render_trace_panels: no panels");
  int width = 0, height = 0;
  for (const auto& p : panels) {
    width = std::max(width, p.width);
    height += p.height;
  }
  std::string s = svg_open(width, height, panels.front().title);
  double top = 0.0;
  for (const auto& p : panels) {
    s += line_panel(traces, p, top);
    top += p.height;
  }
  s += "</svg>\n";
  return s;
}

std::string ramp_color(double t) {
  // Viridis control points.
  static constexpr std::array<std::array<double, 3>, 5> stops = {{{68, 1, 84}, {59, 82, 139}, {33, 145, 140},
                                                                  {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  const double pos = t * (stops.size() - 1);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(pos), stops.size() - 2);
  const double u = pos - static_cast<double>(i);
  char buf[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c)
    rgb[c] = static_cast<int>(std::lround(stops[i][c] + (stops[i + 1][c] - stops[i][c]) * u));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

std::string render_heatmap(const SweepResult& result, const PlotSpec& spec) {
  const auto etas = result.distinct_etas();
  const auto mus = result.distinct_mus();
  if (etas.empty() || mus.empty()) throw InvalidArgument("render_heatmap: empty grid");

  std::map<std::pair<double, double>, std::vector<const CellOutcome*>> cells;
  for (const auto& c : result.cells) {
    if (!c.eta || !c.mu) throw InvalidArgument("render_heatmap: cell without eta/mu coordinates");
    cells[{*c.eta, *c.mu}].push_back(&c);
  }
  if (cells.size() != etas.size() * mus.size())
    throw InvalidArgument("render_heatmap: incomplete grid (" + std::to_string(cells.size()) + " of " +
                          std::to_string(etas.size() * mus.size()) + " cells)");

  auto log_value = [](double v) { return std::log(std::max(v, std::numeric_limits<double>::min())); };
  std::map<std::pair<double, double>, std::optional<double>> value;
  double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
  for (const auto& [key, members] : cells) {
    std::vector<double> finals;
    for (const auto* c : members)
      if (c->final_loss) finals.push_back(*c->final_loss);
    if (finals.empty()) {
      value[key] = std::nullopt;
      continue;
    }
    const double v = log_value(median(finals));
    value[key] = v;
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  const bool any = vmin <= vmax;

  const int width = std::max(spec.width, 200);
  const int height = std::max(spec.height, 200);
  const Frame f{80.0, 30.0, width - 80.0 - 90.0, height - 30.0 - 60.0};
  const double cw = f.w / static_cast<double>(etas.size());
  const double ch = f.h / static_cast<double>(mus.size());

  std::string s = svg_open(width, height, spec.title);
  nlohmann::json meta = {{"value", "log_final_loss"},
                         {"scale_min", any ? nlohmann::json(vmin) : nlohmann::json(nullptr)},
                         {"scale_max", any ? nlohmann::json(vmax) : nlohmann::json(nullptr)},
                         {"ramp", "viridis"},
                         {"n_eta", etas.size()},
                         {"n_mu", mus.size()}};
  s += "<metadata id=\"colorscale\">" + escape(meta.dump()) + "</metadata>\n";
  s += "<defs><pattern id=\"diverged\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\">"
       "<rect width=\"6\" height=\"6\" fill=\"#ffffff\"/><path d=\"M0,6 L6,0\" stroke=\"#d62728\" "
       "stroke-width=\"1.5\"/></pattern></defs>\n";
  if (!spec.title.empty())
    s += "<text class=\"title\" x=\"" + px(f.x0 + f.w / 2) + "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" +
         escape(spec.title) + "</text>\n";

  for (std::size_t j = 0; j < mus.size(); ++j) {
    // Largest momentum on top.
    const double y = f.y0 + static_cast<double>(mus.size() - 1 - j) * ch;
    for (std::size_t i = 0; i < etas.size(); ++i) {
      const double x = f.x0 + static_cast<double>(i) * cw;
      const auto& v = value[{etas[i], mus[j]}];
      std::string attrs = "x=\"" + px(x) + "\" y=\"" + px(y) + "\" width=\"" + px(cw) + "\" height=\"" + px(ch) +
                          "\" data-eta=\"" + format_double(etas[i]) + "\" data-mu=\"" + format_double(mus[j]) + "\"";
      if (v) {
        const double t = vmax > vmin ? (*v - vmin) / (vmax - vmin) : 0.5;
        s += "<rect class=\"cell\" " + attrs + " data-value=\"" + format_double(*v) + "\" data-t=\"" +
             format_double(t) + "\" fill=\"" + ramp_color(t) + "\"/>\n";
      } else {
        s += "<rect class=\"cell diverged\" " + attrs + " fill=\"url(#diverged)\"/>\n";
      }
    }
  }
  // Axis labels: a subset of ticks so long grids stay legible.
  const std::size_t xstride = std::max<std::size_t>(1, etas.size() / 8);
  for (std::size_t i = 0; i < etas.size(); i += xstride)
    s += "<text class=\"tick\" x=\"" + px(f.x0 + (static_cast<double>(i) + 0.5) * cw) + "\" y=\"" +
         px(f.y0 + f.h + 14) + "\" text-anchor=\"middle\">" + fmt("%.2g", etas[i]) + "</text>\n";
  const std::size_t ystride = std::max<std::size_t>(1, mus.size() / 8);
  for (std::size_t j = 0; j < mus.size(); j += ystride)
    s += "<text class=\"tick\" x=\"" + px(f.x0 - 6) + "\" y=\"" +
         px(f.y0 + (static_cast<double>(mus.size() - 1 - j) + 0.5) * ch + 4) + "\" text-anchor=\"end\">" +
         fmt("%.4g", mus[j]) + "</text>\n";
  s += "<text class=\"xlabel\" x=\"" + px(f.x0 + f.w / 2) + "\" y=\"" + px(f.y0 + f.h + 34) +
       "\" text-anchor=\"middle\">" + escape(spec.x_label.empty() || spec.x_label == "step" ? "learning rate"
                                                                                            : spec.x_label) +
       "</text>\n";
  s += "<text class=\"ylabel\" x=\"14\" y=\"" + px(f.y0 + f.h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
       px(f.y0 + f.h / 2) + ")\">" + escape(spec.y_label.empty() ? "momentum" : spec.y_label) + "</text>\n";

  // Colour bar.
  const double bx = f.x0 + f.w + 20.0;
  for (int k = 0; k < 20; ++k) {
    const double t = (k + 0.5) / 20.0;
    s += "<rect class=\"colorbar\" x=\"" + px(bx) + "\" y=\"" + px(f.y0 + f.h * (1.0 - (k + 1) / 20.0)) +
         "\" width=\"14\" height=\"" + px(f.h / 20.0) + "\" fill=\"" + ramp_color(t) + "\"/>\n";
  }
  if (any) {
    s += "<text x=\"" + px(bx + 18) + "\" y=\"" + px(f.y0 + 8) + "\">" + fmt("%.3g", vmax) + "</text>\n";
    s += "<text x=\"" + px(bx + 18) + "\" y=\"" + px(f.y0 + f.h) + "\">" + fmt("%.3g", vmin) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string render_transition_curve(const SweepResult& result, const PlotSpec& spec) {
  std::vector<std::pair<double, double>> points;
  for (const auto& c : result.cells)
    if (c.transition && c.final_loss) points.emplace_back(static_cast<double>(*c.transition), *c.final_loss);
  if (points.empty()) throw InvalidArgument("render_transition_curve: no converged transition runs");
  double xlo = points.front().first, xhi = xlo, ylo = points.front().second, yhi = ylo;
  for (const auto& [x, y] : points) {
    if (spec.y_axis == AxisScale::log && !(y > 0.0))
      throw InvalidArgument("log-scale plot: non-positive final loss at transition " + fmt("%.0f", x));
    xlo = std::min(xlo, x);
    xhi = std::max(xhi, x);
    ylo = std::min(ylo, y);
    yhi = std::max(yhi, y);
  }
  const Axis xa = Axis::fit(xlo, xhi, AxisScale::linear);
  const Axis ya = Axis::fit(ylo, yhi, spec.y_axis);
  const Frame f{70.0, 30.0, static_cast<double>(spec.width) - 70.0 - 40.0, static_cast<double>(spec.height) - 75.0};
  PlotSpec labelled = spec;
  if (labelled.x_label == "step") labelled.x_label = "transition epoch";
  if (labelled.y_label.empty()) labelled.y_label = "final training loss";

  std::string s = svg_open(spec.width, spec.height, spec.title);
  draw_axes(s, f, xa, ya, labelled);
  for (const auto& [x, y] : points)
    s += "<circle class=\"run\" cx=\"" + px(f.x0 + xa.frac(x) * f.w) + "\" cy=\"" +
         px(f.y0 + (1.0 - ya.frac(y)) * f.h) + "\" r=\"2.5\" fill=\"#1f77b4\" fill-opacity=\"0.6\"/>\n";
  // Bin medians when the sweep carries them (not after a CSV round trip),
  // otherwise one median per distinct transition epoch.
  std::vector<std::pair<double, double>> medians;
  for (const auto& b : result.bins)
    if (b.median_final_loss) medians.emplace_back(0.5 * static_cast<double>(b.lo + b.hi - 1), *b.median_final_loss);
  if (result.bins.empty()) {
    std::map<double, std::vector<double>> by_x;
    for (const auto& [x, y] : points) by_x[x].push_back(y);
    for (const auto& [x, ys] : by_x) medians.emplace_back(x, median(ys));
  }
  std::string pts;
  for (const auto& [mid, m] : medians) {
    if (!pts.empty()) pts += ' ';
    pts += px(f.x0 + xa.frac(std::clamp(mid, xa.lo, xa.hi)) * f.w) + "," + px(f.y0 + (1.0 - ya.frac(m)) * f.h);
  }
  if (!pts.empty())
    s += "<polyline class=\"median\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
  s += "</svg>\n";
  return s;
}

// ---------------------------------------------------------------------------

std::optional<double> Table::number(std::size_t row, const std::string& column) const {
  const auto it = std::find(columns.begin(), columns.end(), column);
  if (it == columns.end() || row >= rows.size()) return std::nullopt;
  const auto& cell = rows[row][static_cast<std::size_t>(it - columns.begin())];
  if (const double* d = std::get_if<double>(&cell)) return *d;
  return std::nullopt;
}

namespace {

TableCell cell(const std::optional<double>& v) { return v ? TableCell(*v) : TableCell(std::monostate{}); }

}  // namespace

Table summarize(const TrainTrace& trace, double tail_fraction) {
  Table t;
  t.columns = {"initial_loss", "final_loss", "min_loss", "median_loss", "steps", "r_last_decile_mean", "s_run_mean"};
  if (trace.rows.empty()) return t;
  const auto losses = trace.losses();
  t.rows.push_back({losses.front(), losses.back(), *std::min_element(losses.begin(), losses.end()), median(losses),
                    static_cast<double>(trace.rows.back().step), cell(tail_mean_scale(trace, tail_fraction)),
                    cell(mean_alignment(trace))});
  return t;
}

Table summarize(const SweepResult& result) {
  Table t;
  const bool transition = result.kind == SweepKind::transition;
  if (transition) {
    t.columns = {"transition", "runs", "diverged", "min_final_loss", "median_final_loss", "median_heldout_accuracy"};
    std::map<std::int64_t, std::vector<const CellOutcome*>> by_t;
    for (const auto& c : result.cells) by_t[c.transition.value_or(-1)].push_back(&c);
    for (const auto& [tr, members] : by_t) {
      std::vector<double> losses, accs;
      double diverged = 0;
      for (const auto* c : members) {
        if (c->final_loss) losses.push_back(*c->final_loss);
        else diverged += 1;
        if (c->heldout_accuracy) accs.push_back(*c->heldout_accuracy);
      }
      t.rows.push_back({static_cast<double>(tr), static_cast<double>(members.size()), diverged,
                        losses.empty() ? TableCell{} : TableCell(*std::min_element(losses.begin(), losses.end())),
                        losses.empty() ? TableCell{} : TableCell(median(losses)),
                        accs.empty() ? TableCell{} : TableCell(median(accs))});
    }
    return t;
  }
  t.columns = {"mu", "runs", "diverged", "best_eta", "best_final_loss", "median_final_loss"};
  for (double mu : result.distinct_mus()) {
    std::vector<double> losses;
    double runs = 0, diverged = 0;
    for (const auto& c : result.cells) {
      if (!c.mu || *c.mu != mu) continue;
      runs += 1;
      if (c.final_loss) losses.push_back(*c.final_loss);
      else diverged += 1;
    }
    const auto best = result.best_for_mu(mu);
    t.rows.push_back({mu, runs, diverged, best ? cell(best->eta) : TableCell{},
                      best ? cell(best->final_loss) : TableCell{}, losses.empty() ? TableCell{} : TableCell(median(losses))});
  }
  return t;
}

void write_table_csv(std::ostream& out, const Table& table) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      if (const double* d = std::get_if<double>(&row[i]))
        out << format_double(*d);
      else if (const std::string* s = std::get_if<std::string>(&row[i]))
        out << *s;
    }
    out << '\n';
  }
}

}  // namespace momlab
