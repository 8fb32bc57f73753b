#include "momlab/experiments.hpp"

#include "momlab/parallel.hpp"
#include "momlab/problems.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace momlab {

namespace {

namespace fs = std::filesystem;

LogGranularity logging_of(const ExperimentConfig& cfg) {
  if (cfg.training.logging == "iteration") return LogGranularity::iteration;
  if (cfg.training.logging == "epoch") return LogGranularity::epoch;
  return LogGranularity::automatic;
}

const QuadraticProblem* as_quadratic(const Problem& p) { return dynamic_cast<const QuadraticProblem*>(&p); }

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot write file");
  out << content;
  if (!out) throw IoError(path.string(), "write failed");
}

class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    write_file(dir_ / name, content);
    names_.push_back(name);
  }

  template <typename Fn>
  void write_with(const std::string& name, Fn&& fn) {
    std::ostringstream os;
    fn(os);
    write(name, os.str());
  }

  std::vector<std::string> names() const {
    auto n = names_;
    std::sort(n.begin(), n.end());
    return n;
  }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

std::string mu_label(double mu) { return "mu=" + format_double(mu); }

std::string table_csv(const Table& t) {
  std::ostringstream os;
  write_table_csv(os, t);
  return os.str();
}

// Prepends labelled columns to one summary row per trace.
Table summary_table(const std::vector<std::string>& extra_columns, const std::vector<std::vector<TableCell>>& extra,
                    const std::vector<TrainTrace>& traces) {
  Table out;
  out.columns = extra_columns;
  const Table probe = summarize(TrainTrace{});
  out.columns.insert(out.columns.end(), probe.columns.begin(), probe.columns.end());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const Table s = summarize(traces[i]);
    std::vector<TableCell> row = extra[i];
    if (s.rows.empty())
      row.resize(out.columns.size());
    else
      row.insert(row.end(), s.rows[0].begin(), s.rows[0].end());
    out.rows.push_back(std::move(row));
  }
  return out;
}

bool all_losses_positive(const std::vector<TrainTrace>& traces) {
  for (const auto& t : traces)
    for (const auto& r : t.rows)
      if (!(r.loss > 0.0)) return false;
  return true;
}

PlotSpec panel(TraceMetric metric, AxisScale y, const std::string& y_label, const std::string& x_label) {
  PlotSpec s;
  s.kind = PlotKind::multi_line;
  s.metric = metric;
  s.y_axis = y;
  s.y_label = y_label;
  s.x_label = x_label;
  s.height = 240;
  return s;
}

std::int64_t steps_per_epoch(const ExperimentConfig& cfg, const BatchMode& batch) {
  if (batch.full_batch()) return cfg.training.iters_per_epoch;
  const std::size_t n = cfg.problem.n_samples - cfg.problem.heldout;
  return static_cast<std::int64_t>((n + batch.batch_size - 1) / batch.batch_size);
}

std::int64_t steps_per_run(const ExperimentConfig& cfg) {
  std::int64_t per = 0;
  for (const auto& p : cfg.schedule.phases) per = std::max(per, steps_per_epoch(cfg, p.batch));
  return per * cfg.training.epochs;
}

std::size_t candidate_count(const EquivalenceConfig& e) {
  const double decades = std::log10(e.candidate_max / e.candidate_min);
  return static_cast<std::size_t>(std::llround(decades * static_cast<double>(e.candidates_per_decade))) + 1;
}

}  // namespace

DemoResult quadratic_demo(const Problem& problem, const ExperimentConfig& cfg, unsigned jobs) {
  SweepGrid grid;
  grid.eta_values = log_spaced(cfg.demo.eta_min, cfg.demo.eta_max, cfg.demo.eta_count);
  for (double mu : cfg.demo.momenta) grid.one_minus_mu_values.push_back(1.0 - mu);
  RunSetup setup;
  setup.epochs = 1;
  setup.iters_per_epoch = cfg.demo.iterations;
  setup.seed = cfg.seed;
  setup.jobs = jobs;
  setup.max_runs = cfg.sweep.max_runs;
  setup.max_steps = cfg.sweep.max_steps;
  setup.allow_large = cfg.sweep.allow_large;

  DemoResult out;
  out.tuning = run_grid(problem, grid, setup);
  for (double omm : grid.one_minus_mu_values) {
    const double mu = 1.0 - omm;
    const auto best = out.tuning.best_for_mu(mu);
    if (!best) throw NumericalDivergence(0, "quadratic demo: every learning rate diverged for " + mu_label(mu));
    PhaseSpec phase;
    phase.hyper = {*best->eta, mu, 0.0};
    TrainOptions o;
    o.epochs = 1;
    o.iters_per_epoch = cfg.demo.iterations;
    o.seed = cell_seed(cfg.seed, *best->eta, mu, 0);
    o.init_seed = cell_init_seed(cfg.seed, 0);
    o.logging = logging_of(cfg);
    TrainResult r = train(problem, ScheduleSpec::single(phase), o);
    r.trace.label = mu_label(mu);
    out.runs.push_back({mu, *best->eta, std::move(r.trace)});
  }
  return out;
}

std::vector<TrainTrace> train_experiment(const Problem& problem, const ExperimentConfig& cfg) {
  std::vector<std::pair<ScheduleSpec, std::string>> runs;
  if (!cfg.training.compare_momenta.empty()) {
    for (double mu : cfg.training.compare_momenta) {
      PhaseSpec p = cfg.schedule.phases.front();
      p.hyper.momentum = mu;
      runs.emplace_back(ScheduleSpec::single(p), mu_label(mu));
    }
  } else {
    runs.emplace_back(cfg.schedule, cfg.name);
  }
  const bool two_pass = !problem.optimum_hint().has_value();
  std::vector<TrainTrace> traces;
  for (const auto& [schedule, label] : runs) {
    TrainOptions o;
    o.epochs = cfg.training.epochs;
    o.iters_per_epoch = cfg.training.iters_per_epoch;
    o.seed = cfg.seed;
    o.init_seed = cfg.seed;
    o.logging = logging_of(cfg);
    o.reset_momentum_on_transition = cfg.training.reset_momentum;
    o.store_snapshots = two_pass;
    TrainResult r = train(problem, schedule, o);
    TrainTrace t = std::move(r.trace);
    if (two_pass && !t.diverged() && !t.rows.empty()) t = annotate_alignment(std::move(t), final_iterate_reference(t));
    t.snapshots.clear();
    t.label = label;
    traces.push_back(std::move(t));
  }
  return traces;
}

std::vector<double> equivalence_baselines(const Problem& problem, const ExperimentConfig& cfg) {
  double unit = 1.0;
  if (cfg.equivalence.eta_units == "inverse_lambda_max") {
    const auto* q = as_quadratic(problem);
    if (!q) throw ConfigError("eta_units = inverse_lambda_max needs a quadratic problem");
    unit = 1.0 / q->lambda_max();
  }
  std::vector<double> out;
  for (double v : cfg.equivalence.baseline_eta) out.push_back(v * unit);
  return out;
}

std::vector<double> equivalence_candidates(const Problem& problem, const ExperimentConfig& cfg) {
  double unit = 1.0;
  if (cfg.equivalence.eta_units == "inverse_lambda_max") {
    const auto* q = as_quadratic(problem);
    if (!q) throw ConfigError("eta_units = inverse_lambda_max needs a quadratic problem");
    unit = 1.0 / q->lambda_max();
  }
  auto grid = log_spaced(cfg.equivalence.candidate_min, cfg.equivalence.candidate_max, candidate_count(cfg.equivalence));
  for (double& v : grid) v *= unit;
  return grid;
}

CurveSetup equivalence_setup(const ExperimentConfig& cfg, unsigned jobs) {
  CurveSetup s;
  const auto& phase = cfg.schedule.phases.front();
  s.batch = phase.batch;
  s.weight_decay = phase.hyper.weight_decay;
  s.epochs = cfg.training.epochs;
  s.iters_per_epoch = cfg.training.iters_per_epoch;
  s.seed = cfg.seed;
  s.logging = logging_of(cfg);
  s.jobs = jobs;
  return s;
}

RunSetup sweep_setup(const ExperimentConfig& cfg, unsigned jobs) {
  RunSetup s;
  const auto& phase = cfg.schedule.phases.front();
  s.epochs = cfg.training.epochs;
  s.iters_per_epoch = cfg.training.iters_per_epoch;
  s.batch = phase.batch;
  s.weight_decay = phase.hyper.weight_decay;
  s.seed = cfg.seed;
  s.jobs = jobs;
  s.reset_momentum_on_transition = cfg.training.reset_momentum;
  s.max_runs = cfg.sweep.max_runs;
  s.max_steps = cfg.sweep.max_steps;
  s.allow_large = cfg.sweep.allow_large;
  return s;
}

SweepResult sweep_experiment(const Problem& problem, const ExperimentConfig& cfg, unsigned jobs) {
  const auto& w = cfg.sweep;
  const RunSetup setup = sweep_setup(cfg, jobs);
  if (w.mode == "grid") {
    const auto grid = SweepGrid::log_grid(w.eta_min, w.eta_max, w.eta_count, w.one_minus_mu_min, w.one_minus_mu_max,
                                          w.one_minus_mu_count, w.repetitions);
    return run_grid(problem, grid, setup);
  }
  if (w.mode == "random") {
    std::size_t total = w.samples * w.searches.size();
    check_budget(total, estimate_steps(problem, setup), setup);
    SweepResult all;
    all.kind = SweepKind::random;
    for (const auto& s : w.searches) {
      const SweepResult r = random_search(problem, s.eta_min, s.eta_max, s.mu, w.samples, setup);
      all.cells.insert(all.cells.end(), r.cells.begin(), r.cells.end());
    }
    return all;
  }
  return transition_sweep(problem, cfg.schedule, w.transitions, cfg.training.epochs, w.seeds, setup, w.bins);
}

SweepResult single_phase_baselines(const Problem& problem, const ExperimentConfig& cfg, unsigned jobs) {
  const RunSetup setup = sweep_setup(cfg, jobs);
  const auto& phases = cfg.schedule.phases;
  const auto& seeds = cfg.sweep.seeds;
  SweepResult res;
  res.kind = SweepKind::random;
  res.cells.resize(phases.size() * seeds.size());
  parallel_for(res.cells.size(), jobs, [&](std::size_t k) {
    const PhaseSpec& p = phases[k / seeds.size()];
    const std::uint64_t seed = seeds[k % seeds.size()];
    CellOutcome c = run_cell(problem, ScheduleSpec::single(p), setup, seed, seed);
    c.eta = p.hyper.learning_rate;
    c.mu = p.hyper.momentum;
    res.cells[k] = c;
  });
  return res;
}

std::string run_plan(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "experiment " << cfg.name << " (" << cfg.command << "), seed " << cfg.seed << "\n";
  if (cfg.problem.kind == "quadratic")
    os << "problem: quadratic, dim " << cfg.problem.dim << ", condition number "
       << format_double(cfg.problem.condition_number) << "\n";
  else
    os << "problem: mlp on " << cfg.problem.dataset << ", " << cfg.problem.n_samples << " samples\n";
  std::size_t runs = 0;
  double steps = 0.0;
  if (cfg.command == "quadratic-demo") {
    const std::size_t tuning = cfg.demo.eta_count * cfg.demo.momenta.size();
    runs = tuning + cfg.demo.momenta.size();
    steps = static_cast<double>(runs) * static_cast<double>(cfg.demo.iterations);
    os << "tuning grid: " << cfg.demo.eta_count << " learning rates x " << cfg.demo.momenta.size()
       << " momenta = " << tuning << " cells, " << cfg.demo.iterations << " iterations each\n";
  } else if (cfg.command == "train") {
    runs = std::max<std::size_t>(1, cfg.training.compare_momenta.size());
    steps = static_cast<double>(runs) * static_cast<double>(steps_per_run(cfg));
    os << "phases: " << cfg.schedule.phases.size() << ", epochs: " << cfg.training.epochs << "\n";
  } else if (cfg.command == "equivalence") {
    const std::size_t nb = cfg.equivalence.baseline_eta.size();
    const std::size_t nc = candidate_count(cfg.equivalence);
    runs = nb + nb * cfg.equivalence.mus.size() * nc;
    steps = static_cast<double>(runs) * static_cast<double>(steps_per_run(cfg));
    os << "baselines: " << nb << ", momenta: " << cfg.equivalence.mus.size() << ", candidates per match: " << nc
       << "\n";
  } else {
    const auto& w = cfg.sweep;
    if (w.mode == "grid") {
      runs = w.eta_count * w.one_minus_mu_count * w.repetitions;
      os << "grid: " << w.eta_count << " x " << w.one_minus_mu_count << " x " << w.repetitions << " repetitions\n";
    } else if (w.mode == "random") {
      runs = w.samples * w.searches.size();
      os << "random search: " << w.searches.size() << " ranges x " << w.samples << " samples\n";
    } else {
      runs = w.transitions.size() * w.seeds.size() + cfg.schedule.phases.size() * w.seeds.size();
      os << "transition sweep: " << w.transitions.size() << " transitions x " << w.seeds.size()
         << " seeds, plus single-phase baselines, " << w.bins << " bins\n";
    }
    steps = static_cast<double>(runs) * static_cast<double>(steps_per_run(cfg));
  }
  os << "runs: " << runs << "\n";
  os << "estimated optimizer steps: " << format_double(steps) << "\n";
  return os.str();
}

std::vector<std::string> run_experiment(const ExperimentConfig& cfg, const RunContext& ctx, std::ostream& log) {
  const auto problem = make_problem(cfg.problem, cfg.seed);
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);
  if (ec) throw IoError(ctx.out_dir.string(), "cannot create output directory");
  Artifacts art(ctx.out_dir);
  art.write("config.json", cfg.snapshot.dump(2) + "\n");

  if (cfg.command == "quadratic-demo") {
    const DemoResult demo = quadratic_demo(*problem, cfg, ctx.jobs);
    art.write_with("tuning.csv", [&](std::ostream& os) { write_sweep_csv(os, demo.tuning); });
    std::vector<TrainTrace> traces;
    std::vector<std::vector<TableCell>> extra;
    for (const auto& run : demo.runs) {
      art.write_with("trace_mu" + format_double(run.mu) + ".csv",
                     [&](std::ostream& os) { write_trace_csv(os, run.trace); });
      traces.push_back(run.trace);
      extra.push_back({run.mu, run.eta});
      log << mu_label(run.mu) << ": tuned eta " << format_double(run.eta) << ", final loss "
          << format_double(run.trace.rows.empty() ? 0.0 : run.trace.rows.back().loss) << "\n";
    }
    art.write("summary.csv", table_csv(summary_table({"mu", "eta"}, extra, traces)));
    std::vector<PlotSpec> panels = {panel(TraceMetric::loss, AxisScale::log, "f(w)", "iteration"),
                                    panel(TraceMetric::alignment, AxisScale::linear, "alignment s", "iteration"),
                                    panel(TraceMetric::scale, AxisScale::log, "scale r", "iteration")};
    panels[0].title = "quadratic, tuned learning rate per momentum";
    if (!all_losses_positive(traces)) panels[0].y_axis = AxisScale::linear;
    art.write("demo.svg", render_trace_panels(traces, panels));
  } else if (cfg.command == "train") {
    const auto traces = train_experiment(*problem, cfg);
    std::vector<std::vector<TableCell>> extra;
    for (std::size_t i = 0; i < traces.size(); ++i) {
      const std::string name = traces.size() == 1 ? "trace.csv" : "trace_" + std::to_string(i) + ".csv";
      art.write_with(name, [&](std::ostream& os) { write_trace_csv(os, traces[i]); });
      extra.push_back({traces[i].display_label()});
      if (traces[i].diverged()) log << traces[i].display_label() << ": diverged\n";
    }
    art.write("summary.csv", table_csv(summary_table({"run"}, extra, traces)));
    const std::string x_label = problem->n_samples() > 0 ? "epoch" : "iteration";
    PlotSpec loss = panel(TraceMetric::loss, all_losses_positive(traces) ? AxisScale::log : AxisScale::linear,
                          "training loss", x_label);
    loss.title = cfg.name;
    loss.height = 360;
    art.write("loss.svg", render_loss_curves(traces, loss));
    art.write("diagnostics.svg",
              render_trace_panels(traces, {panel(TraceMetric::alignment, AxisScale::linear, "alignment s", x_label),
                                           panel(TraceMetric::scale, AxisScale::linear, "scale r", x_label),
                                           panel(TraceMetric::eta_effective, AxisScale::linear, "eta r", x_label)}));
  } else if (cfg.command == "equivalence") {
    const auto result = equivalence_sweep(*problem, equivalence_baselines(*problem, cfg), cfg.equivalence.mus,
                                          equivalence_candidates(*problem, cfg), equivalence_setup(cfg, ctx.jobs),
                                          parse_curve_space(cfg.equivalence.space));
    art.write_with("matches.csv", [&](std::ostream& os) { write_match_table_csv(os, result.matches); });
    art.write("fit.json", fit_summary_json(result).dump(2) + "\n");
    for (const auto& f : result.fits)
      log << mu_label(f.mu) << ": " << f.points << " matches"
          << (f.available ? ", slope " + format_double(f.slope) + ", R^2 " + format_double(f.r_squared) : "") << "\n";
  } else {
    const SweepResult result = sweep_experiment(*problem, cfg, ctx.jobs);
    art.write_with("sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, result); });
    art.write("summary.json", sweep_summary_json(result).dump(2) + "\n");
    art.write("summary.csv", table_csv(summarize(result)));
    PlotSpec spec;
    spec.title = cfg.name;
    if (result.kind == SweepKind::grid) {
      spec.kind = PlotKind::heatmap;
      spec.x_axis = AxisScale::log;
      spec.y_axis = AxisScale::log;
      spec.x_label = "learning rate";
      spec.y_label = "1 - momentum";
      art.write("heatmap.svg", render_heatmap(result, spec));
    } else if (result.kind == SweepKind::transition) {
      spec.kind = PlotKind::line;
      spec.y_axis = AxisScale::log;
      spec.x_label = "transition epoch";
      spec.y_label = "final training loss";
      art.write("transition.svg", render_transition_curve(result, spec));
      const SweepResult base = single_phase_baselines(*problem, cfg, ctx.jobs);
      art.write_with("baselines.csv", [&](std::ostream& os) { write_sweep_csv(os, base); });
    }
    log << result.cells.size() << " runs, " << result.diverged_count() << " diverged\n";
  }
  return art.names();
}

std::vector<std::string> run_report(const std::vector<fs::path>& inputs, const fs::path& out_dir, std::ostream& log) {
  if (inputs.empty()) throw InvalidArgument("report: no input files");
  std::vector<TrainTrace> traces;
  std::vector<std::pair<std::string, SweepResult>> sweeps;
  for (const auto& path : inputs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open input file");
    std::string header;
    std::getline(in, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    in.clear();
    in.seekg(0);
    if (header == kTraceCsvHeader) {
      TrainTrace t = read_trace_csv(in);
      t.label = path.stem().string();
      traces.push_back(std::move(t));
    } else if (header == kSweepCsvHeader) {
      sweeps.emplace_back(path.stem().string(), read_sweep_csv(in));
    } else {
      throw IoError(path.string(), "unrecognized CSV header");
    }
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError(out_dir.string(), "cannot create output directory");
  Artifacts art(out_dir);
  if (!traces.empty()) {
    std::vector<std::vector<TableCell>> extra;
    for (const auto& t : traces) extra.push_back({t.display_label()});
    art.write("traces_summary.csv", table_csv(summary_table({"run"}, extra, traces)));
    PlotSpec loss = panel(TraceMetric::loss, all_losses_positive(traces) ? AxisScale::log : AxisScale::linear,
                          "loss", "step");
    loss.height = 360;
    art.write("loss.svg", render_loss_curves(traces, loss));
    art.write("diagnostics.svg",
              render_trace_panels(traces, {panel(TraceMetric::alignment, AxisScale::linear, "alignment s", "step"),
                                           panel(TraceMetric::scale, AxisScale::linear, "scale r", "step")}));
  }
  for (const auto& [stem, result] : sweeps) {
    art.write(stem + "_summary.csv", table_csv(summarize(result)));
    PlotSpec spec;
    spec.title = stem;
    try {
      if (result.kind == SweepKind::transition) {
        spec.kind = PlotKind::line;
        spec.y_axis = AxisScale::log;
        spec.x_label = "transition epoch";
        spec.y_label = "final training loss";
        art.write(stem + "_transition.svg", render_transition_curve(result, spec));
      } else {
        spec.kind = PlotKind::heatmap;
        spec.x_axis = AxisScale::log;
        spec.y_axis = AxisScale::log;
        spec.x_label = "learning rate";
        spec.y_label = "1 - momentum";
        art.write(stem + "_heatmap.svg", render_heatmap(result, spec));
      }
    } catch (const InvalidArgument& e) {
      log << stem << ": no plot (" << e.what() << ")\n";
    }
  }
  return art.names();
}

}  // namespace momlab
