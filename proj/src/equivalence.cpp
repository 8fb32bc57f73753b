#include "momlab/equivalence.hpp"

#include "momlab/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace momlab {

CurveSpace parse_curve_space(const std::string& name) {
  if (name == "raw") return CurveSpace::raw;
  if (name == "log") return CurveSpace::log;
  throw InvalidArgument("unknown curve space '" + name + "' (expected raw or log)");
}

std::string to_string(CurveSpace s) { return s == CurveSpace::raw ? "raw" : "log"; }

double curve_distance(const std::vector<double>& a, const std::vector<double>& b, CurveSpace space) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n < 2) throw InvalidArgument("curve_distance: curves overlap on fewer than two points");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double x = a[i];
    double y = b[i];
    if (space == CurveSpace::log) {
      if (!(x > 0.0) || !(y > 0.0)) throw InvalidArgument("curve_distance: log space needs positive losses");
      x = std::log(x);
      y = std::log(y);
    }
    sum += (x - y) * (x - y);
  }
  return std::sqrt(sum);
}

double curve_distance(const LossCurve& a, const LossCurve& b, CurveSpace space) {
  return curve_distance(a.values, b.values, space);
}

LossCurve train_curve(const Problem& problem, const CurveSetup& setup, double learning_rate, double momentum) {
  PhaseSpec phase;
  phase.hyper = {learning_rate, momentum, setup.weight_decay};
  phase.batch = setup.batch;
  TrainOptions o;
  o.epochs = setup.epochs;
  o.iters_per_epoch = setup.iters_per_epoch;
  o.seed = setup.seed;
  o.logging = setup.logging;
  const TrainResult r = train(problem, ScheduleSpec::single(phase), o);
  LossCurve c;
  c.values = r.trace.losses();
  c.hyper = phase.hyper;
  c.seed = setup.seed;
  c.divergence_step = r.trace.divergence_step;
  return c;
}

namespace {

bool single_valley(const std::vector<double>& d) {
  // Non-increasing, then non-decreasing.
  std::size_t i = 1;
  while (i < d.size() && d[i] <= d[i - 1]) ++i;
  while (i < d.size() && d[i] >= d[i - 1]) ++i;
  return i >= d.size();
}

}  // namespace

EquivalenceMatch find_equivalent_lr(const Problem& problem, const LossCurve& baseline, double target_mu,
                                    std::vector<double> eta_grid, const CurveSetup& setup, CurveSpace space) {
  if (eta_grid.empty()) throw InvalidArgument("find_equivalent_lr: empty learning-rate grid");
  if (baseline.hyper.momentum != 0.0) throw InvalidArgument("find_equivalent_lr: baseline must use momentum 0");
  if (baseline.diverged()) throw InvalidArgument("find_equivalent_lr: baseline run diverged");
  if (baseline.values.size() < 2) throw InvalidArgument("find_equivalent_lr: baseline curve too short");
  HyperParams{1.0, target_mu, 0.0}.validate();
  std::sort(eta_grid.begin(), eta_grid.end());

  std::vector<LossCurve> curves(eta_grid.size());
  parallel_for(eta_grid.size(), setup.jobs,
               [&](std::size_t i) { curves[i] = train_curve(problem, setup, eta_grid[i], target_mu); });

  EquivalenceMatch m;
  m.baseline = baseline;
  m.candidate_mu = target_mu;
  m.space = space;
  std::optional<std::size_t> best;
  std::vector<double> valid_distances;
  for (std::size_t i = 0; i < eta_grid.size(); ++i) {
    CandidateOutcome out{eta_grid[i], std::nullopt, curves[i].divergence_step};
    if (!curves[i].diverged() && curves[i].values.size() >= 2) {
      out.distance = curve_distance(baseline, curves[i], space);
      valid_distances.push_back(*out.distance);
      if (!best || *out.distance < *m.candidates[*best].distance) best = i;
    }
    m.candidates.push_back(out);
  }
  if (!best) {
    std::string msg = "find_equivalent_lr: every candidate diverged (steps:";
    for (const auto& c : m.candidates) msg += " " + std::to_string(c.divergence_step.value_or(-1));
    throw NoMatchError(msg + ")", m.candidates);
  }
  m.matched = curves[*best];
  m.matched_eta = eta_grid[*best];
  m.distance = *m.candidates[*best].distance;
  m.ratio = baseline.hyper.learning_rate / m.matched_eta;
  m.unimodal = single_valley(valid_distances);
  return m;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InvalidArgument("fit_line: length mismatch");
  LinearFit f;
  f.points = x.size();
  if (x.size() < 2) return f;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) return f;
  f.available = true;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    ss_res += r * r;
  }
  f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : (ss_res == 0.0 ? 1.0 : 0.0);
  return f;
}

EquivalenceSweepResult equivalence_sweep(const Problem& problem, const std::vector<double>& baseline_etas,
                                         const std::vector<double>& mus, const std::vector<double>& candidate_grid,
                                         const CurveSetup& setup, CurveSpace space) {
  if (baseline_etas.empty()) throw InvalidArgument("equivalence_sweep: no baseline learning rates");
  if (mus.empty()) throw InvalidArgument("equivalence_sweep: no momentum values");
  std::vector<double> etas = baseline_etas;
  std::sort(etas.begin(), etas.end());

  EquivalenceSweepResult res;
  std::vector<LossCurve> baselines;
  for (double eta : etas) {
    LossCurve b = train_curve(problem, setup, eta, 0.0);
    if (b.diverged())
      res.failed_baselines.push_back(eta);
    else
      baselines.push_back(std::move(b));
  }
  for (double mu : mus) {
    std::vector<double> xs, ys;
    for (const auto& b : baselines) {
      try {
        EquivalenceMatch m = find_equivalent_lr(problem, b, mu, candidate_grid, setup, space);
        xs.push_back(m.baseline_eta());
        ys.push_back(m.matched_eta);
        res.matches.push_back(std::move(m));
      } catch (const NoMatchError&) {
        // Recorded implicitly: the fit sees fewer points.
      }
    }
    LinearFit f = fit_line(xs, ys);
    f.mu = mu;
    res.fits.push_back(f);
  }
  return res;
}

void write_match_table_csv(std::ostream& out, const std::vector<EquivalenceMatch>& matches) {
  out << "mu,baseline_eta,matched_eta,distance,ratio\n";
  for (const auto& m : matches)
    out << format_double(m.candidate_mu) << ',' << format_double(m.baseline_eta()) << ','
        << format_double(m.matched_eta) << ',' << format_double(m.distance) << ',' << format_double(m.ratio) << '\n';
}

nlohmann::json fit_summary_json(const EquivalenceSweepResult& result) {
  nlohmann::json fits = nlohmann::json::array();
  for (const auto& f : result.fits) {
    nlohmann::json j = {{"mu", f.mu}, {"available", f.available}, {"points", f.points}};
    if (f.available) {
      j["slope"] = f.slope;
      j["intercept"] = f.intercept;
      j["r_squared"] = f.r_squared;
    }
    fits.push_back(j);
  }
  std::size_t warnings = 0;
  for (const auto& m : result.matches)
    if (!m.unimodal) ++warnings;
  return {{"version", 1},
          {"fits", fits},
          {"failed_baselines", result.failed_baselines},
          {"non_unimodal_matches", warnings}};
}

}  // namespace momlab
