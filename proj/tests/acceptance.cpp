// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "momlab/config.hpp"
#include "momlab/diagnostics.hpp"
#include "momlab/equivalence.hpp"
#include "momlab/experiments.hpp"
#include "momlab/optim.hpp"
#include "momlab/problems.hpp"
#include "momlab/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

using namespace momlab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int n, const std::string& what, const Verdict& v) {
  if (!v.pass) ++failures;
  std::cout << "criterion " << n << ": " << (v.pass ? "PASS" : "FAIL") << " - " << what << " (" << v.detail << ")"
            << std::endl;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << x;
  return os.str();
}

// The demo is shared by the first three criteria.
struct DemoRunTimed {
  ExperimentConfig cfg;
  DemoResult result;
  double seconds = 0.0;
};

DemoRunTimed run_demo() {
  const auto cfg = parse_experiment(preset("fig2"));
  const auto t0 = Clock::now();
  const auto p = make_problem(cfg.problem, cfg.seed);
  DemoRunTimed out{cfg, quadratic_demo(*p, cfg, 1), 0.0};
  out.seconds = seconds_since(t0);
  return out;
}

Verdict convex_baseline(const DemoRunTimed& demo) {
  Verdict v{true, ""};
  std::ostringstream os;
  double prev = INFINITY;
  for (const auto& r : demo.result.runs) {
    const double f = r.trace.rows.empty() ? NAN : r.trace.rows.back().loss;
    const double lf = std::log(f);
    os << "mu=" << r.mu << " eta=" << fmt(r.eta) << " log f=" << fmt(lf) << "; ";
    if (r.trace.diverged() || r.trace.rows.size() != 10000 || !(lf < prev)) v.pass = false;
    prev = lf;
  }
  if (demo.result.runs.size() != 4) v.pass = false;
  if (demo.seconds >= 120.0) v.pass = false;
  os << "runtime " << fmt(demo.seconds, 3) << " s";
  v.detail = os.str();
  return v;
}

Verdict scale_limit(const DemoRunTimed& demo) {
  Verdict v{true, ""};
  std::ostringstream os;
  for (const auto& r : demo.result.runs) {
    if (r.mu == 0.0) continue;
    const auto tail = tail_mean_scale(r.trace, 0.1);
    const double target = 1.0 / (1.0 - r.mu);
    v.pass = v.pass && tail && std::abs(*tail - target) / target <= 0.05;
    os << "tuned mu=" << r.mu << " r=" << (tail ? fmt(*tail) : "n/a") << " target " << fmt(target) << "; ";
  }

  // Every other converging cell of the tuning grid, rerun with its own seeds.
  const auto p = make_problem(demo.cfg.problem, demo.cfg.seed);
  std::size_t checked = 0, bad = 0;
  double worst = 0.0;
  for (const auto& c : demo.result.tuning.cells) {
    if (!c.final_loss || !c.eta || !c.mu || *c.mu < 0.5) continue;
    PhaseSpec phase;
    phase.hyper = {*c.eta, *c.mu, 0.0};
    TrainOptions o;
    o.iters_per_epoch = demo.cfg.demo.iterations;
    o.seed = c.seed;
    o.init_seed = cell_init_seed(demo.cfg.seed, c.repetition);
    const auto run = train(*p, ScheduleSpec::single(phase), o);
    if (run.trace.diverged() || !(run.trace.rows.back().loss < run.trace.rows.front().loss)) continue;
    ++checked;
    const auto tail = tail_mean_scale(run.trace, 0.1);
    const double target = 1.0 / (1.0 - *c.mu);
    const double err = tail ? std::abs(*tail - target) / target : INFINITY;
    worst = std::max(worst, err);
    if (err > 0.05) ++bad;
  }
  if (bad > 0 || checked == 0) v.pass = false;
  os << "converging grid cells: " << checked - bad << "/" << checked << " within 5%, worst " << fmt(100 * worst, 3)
     << "%";
  v.detail = os.str();
  return v;
}

Verdict alignment_near_one(const DemoRunTimed& demo) {
  Verdict v{true, ""};
  std::ostringstream os;
  for (const auto& r : demo.result.runs) {
    if (r.mu < 0.5) continue;
    const auto& rows = r.trace.rows;
    const std::size_t start = rows.size() / 10;
    double lo = INFINITY;
    std::size_t below = 0, defined = 0;
    for (std::size_t i = start; i < rows.size(); ++i) {
      if (!rows[i].alignment) continue;
      ++defined;
      lo = std::min(lo, *rows[i].alignment);
      if (*rows[i].alignment < 0.9) ++below;
    }
    if (defined == 0 || below > 0) v.pass = false;
    os << "mu=" << r.mu << " min s=" << fmt(lo) << " steps below 0.9: " << below << "/" << defined << "; ";
  }
  v.detail = os.str();
  v.detail.resize(v.detail.size() - 2);
  return v;
}

Verdict stability_oracle() {
  std::mt19937_64 rng(31337);
  std::uniform_int_distribution<int> dims(2, 10);
  std::uniform_real_distribution<double> logk(0.0, 3.0), u(0.5, 1.5);
  std::size_t disagreements = 0, stable = 0;
  std::ostringstream os;
  for (int trial = 0; trial < 50; ++trial) {
    const auto q = make_quadratic(dims(rng), std::pow(10.0, logk(rng)), 5000 + trial);
    double f = u(rng);
    while (std::abs(f - 1.0) < 0.01) f = u(rng);
    PhaseSpec p;
    p.hyper = {f / q.lambda_max(), 0.0, 0.0};
    TrainOptions o;
    o.iters_per_epoch = 5000;
    o.seed = trial;
    const auto run = train(q, ScheduleSpec::single(p), o);
    const bool converged =
        !run.trace.diverged() && !run.trace.rows.empty() && run.trace.rows.back().loss < run.trace.rows.front().loss;
    const bool predicted = f < 1.0;
    if (predicted) ++stable;
    if (converged != predicted) {
      ++disagreements;
      os << "disagreement at eta*lambda_max=" << fmt(f, 6) << "; ";
    }
  }
  os << disagreements << " disagreements over 50 quadratics, " << stable << " predicted stable";
  return {disagreements == 0, os.str()};
}

Verdict equivalence_ratio() {
  const auto cfg = parse_experiment(preset("equivalence-quadratic"));
  const auto p = make_problem(cfg.problem, cfg.seed);
  const auto res = equivalence_sweep(*p, equivalence_baselines(*p, cfg), cfg.equivalence.mus,
                                     equivalence_candidates(*p, cfg), equivalence_setup(cfg, 1),
                                     parse_curve_space(cfg.equivalence.space));
  const double step = 1.0 / static_cast<double>(cfg.equivalence.candidates_per_decade);
  Verdict v{res.failed_baselines.empty(), ""};
  std::ostringstream os;
  std::map<double, std::size_t> per_mu;
  double worst = 0.0;
  for (const auto& m : res.matches) {
    const double off = std::abs(std::log10(m.ratio * (1.0 - m.candidate_mu)));
    worst = std::max(worst, off);
    if (off > step + 1e-9) v.pass = false;
    ++per_mu[m.candidate_mu];
  }
  for (const double mu : cfg.equivalence.mus) {
    if (per_mu[mu] < 5) v.pass = false;
    const auto f = std::find_if(res.fits.begin(), res.fits.end(), [&](const LinearFit& x) { return x.mu == mu; });
    if (f == res.fits.end() || !f->available || f->r_squared < 0.95) v.pass = false;
    os << "mu=" << mu << ": " << per_mu[mu] << " baselines";
    if (f != res.fits.end()) os << ", slope " << fmt(f->slope) << ", R^2 " << fmt(f->r_squared, 5);
    os << "; ";
  }
  os << "largest offset " << fmt(worst, 3) << " decades, grid step " << step;
  v.detail = os.str();
  return v;
}

Verdict gradient_check() {
  std::mt19937_64 rng(8080);
  std::uniform_int_distribution<int> width(3, 24), depth(1, 3);
  std::size_t checked = 0, bad = 0;
  double worst = 0.0;
  for (int pair = 0; pair < 5; ++pair) {
    std::vector<int> layers = {2};
    const int hidden = depth(rng);
    for (int h = 0; h < hidden; ++h) layers.push_back(width(rng));
    layers.push_back(2);
    const MlpModel m(layers);
    const auto data = make_dataset(DatasetKind::two_moons, 16 + 4 * pair, 0.25, 70 + pair);
    const VectorXd w = m.initialize(500 + pair);
    const auto r = m.eval_grad(w, data);
    std::uniform_int_distribution<Eigen::Index> pick(0, m.parameter_count() - 1);
    for (int c = 0; c < 20; ++c) {
      const Eigen::Index i = pick(rng);
      const double h = 1e-5;
      VectorXd wp = w, wm = w;
      wp(i) += h;
      wm(i) -= h;
      const double fd = (m.eval_grad(wp, data).loss - m.eval_grad(wm, data).loss) / (2 * h);
      const double err = std::abs(fd - r.grad(i)) / std::max({std::abs(fd), std::abs(r.grad(i)), 1e-7});
      worst = std::max(worst, err);
      ++checked;
      if (err > 1e-4) ++bad;
    }
  }
  return {bad == 0, std::to_string(checked) + " coordinates, worst relative error " + fmt(worst, 3)};
}

struct RegimeStats {
  double s_mean = NAN;
  double increase_fraction = NAN;
};

RegimeStats regime(const std::string& name) {
  auto cfg = parse_experiment(preset(name));
  cfg.training.compare_momenta.clear();
  cfg.schedule.phases[0].hyper.momentum = 0.9;
  const auto p = make_problem(cfg.problem, cfg.seed);
  const auto traces = train_experiment(*p, cfg);
  const auto& t = traces.front();
  std::map<std::int64_t, double> epoch_loss;
  for (const auto& row : t.rows) epoch_loss[row.epoch] = row.loss;
  std::size_t increases = 0, transitions = 0;
  double prev = NAN;
  for (const auto& [epoch, loss] : epoch_loss) {
    if (!std::isnan(prev)) {
      ++transitions;
      if (loss > prev) ++increases;
    }
    prev = loss;
  }
  RegimeStats s;
  if (const auto m = mean_alignment(t)) s.s_mean = *m;
  s.increase_fraction = transitions ? static_cast<double>(increases) / static_cast<double>(transitions) : NAN;
  return s;
}

Verdict regime_contrast() {
  const auto t0 = Clock::now();
  const auto large = regime("fig1-large");
  const auto small = regime("fig1-small");
  const double secs = seconds_since(t0);
  const bool ok = small.s_mean > large.s_mean && small.increase_fraction <= 0.05 && large.increase_fraction > 0.2 &&
                  secs < 300.0;
  return {ok, "run-mean s small " + fmt(small.s_mean) + " vs large " + fmt(large.s_mean) +
                  "; epochs with a loss increase small " + fmt(100 * small.increase_fraction, 3) + "% vs large " +
                  fmt(100 * large.increase_fraction, 3) + "%; runtime " + fmt(secs, 3) + " s"};
}

std::optional<double> median(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Verdict two_phase_benefit() {
  const auto cfg = parse_experiment(preset("cifar-two-phase"));
  const auto p = make_problem(cfg.problem, cfg.seed);
  const auto sweep = sweep_experiment(*p, cfg, 1);
  const auto single = single_phase_baselines(*p, cfg, 1);

  std::map<std::int64_t, std::vector<double>> by_transition;
  for (const auto& c : sweep.cells)
    if (c.final_loss && c.transition) by_transition[*c.transition].push_back(*c.final_loss);
  double best_two = INFINITY;
  std::int64_t best_t = -1;
  for (const auto& [t, losses] : by_transition) {
    const auto m = median(losses);
    if (m && *m < best_two) {
      best_two = *m;
      best_t = t;
    }
  }

  std::vector<std::vector<double>> by_phase(cfg.schedule.phases.size());
  for (std::size_t i = 0; i < single.cells.size(); ++i) {
    const auto& c = single.cells[i];
    const std::size_t phase = i / cfg.sweep.seeds.size();
    if (c.final_loss && phase < by_phase.size()) by_phase[phase].push_back(*c.final_loss);
  }
  double best_one = INFINITY;
  std::ostringstream os;
  for (std::size_t k = 0; k < by_phase.size(); ++k) {
    const auto m = median(by_phase[k]);
    os << "phase " << k + 1 << " alone median " << (m ? fmt(*m) : "diverged") << "; ";
    if (m) best_one = std::min(best_one, *m);
  }
  os << "best transition epoch " << best_t << " median " << fmt(best_two);
  return {best_two <= best_one, os.str()};
}

std::map<std::string, std::string> artifacts(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension().string();
    if (ext != ".csv" && ext != ".svg") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[e.path().filename().string()] = ss.str();
  }
  return out;
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "momlab_acceptance_determinism";
  fs::remove_all(root);
  std::size_t files = 0;
  std::vector<std::string> mismatched;
  std::ostringstream log;
  for (const auto& name : preset_names()) {
    const auto cfg = parse_experiment(preset(name));
    run_experiment(cfg, RunContext{root / name / "a", 1}, log);
    run_experiment(cfg, RunContext{root / name / "b", 3}, log);
    const auto a = artifacts(root / name / "a");
    const auto b = artifacts(root / name / "b");
    files += a.size();
    if (a.empty() || a != b) mismatched.push_back(name);
  }
  fs::remove_all(root);
  std::string detail = std::to_string(preset_names().size()) + " presets, " + std::to_string(files) +
                       " CSV/SVG files compared, first run 1 worker, second run 3 workers";
  for (const auto& m : mismatched) detail += "; differs: " + m;
  return {mismatched.empty(), detail};
}

template <class F>
void guarded(int n, const std::string& what, F&& f) {
  try {
    report(n, what, f());
  } catch (const std::exception& e) {
    report(n, what, Verdict{false, std::string("error: ") + e.what()});
  }
}

}  // namespace

int main() {
  std::optional<DemoRunTimed> demo;
  try {
    demo = run_demo();
  } catch (const std::exception& e) {
    std::cout << "quadratic demo failed: " << e.what() << std::endl;
  }
  auto with_demo = [&](auto f) {
    return [&, f]() { return demo ? f(*demo) : Verdict{false, "quadratic demo did not run"}; };
  };

  guarded(1, "final log f strictly decreasing in mu on the tuned quadratic demo", with_demo(convex_baseline));
  guarded(2, "last-decile scale within 5% of 1/(1-mu)", with_demo(scale_limit));
  guarded(3, "alignment at least 0.9 after the first 10% of iterations for mu >= 0.5", with_demo(alignment_near_one));
  guarded(4, "gradient descent converges iff eta < 1/lambda_max", stability_oracle);
  guarded(5, "matched learning-rate ratios within one grid step of 1/(1-mu), linear fit R^2 >= 0.95",
          equivalence_ratio);
  guarded(6, "backprop matches central differences", gradient_check);
  guarded(7, "large-step and small-step regimes contrast on two moons", regime_contrast);
  guarded(8, "some transition epoch matches or beats the best single-phase run", two_phase_benefit);
  guarded(9, "preset reruns give byte-identical CSV and SVG artifacts", determinism);

  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
