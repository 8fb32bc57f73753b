#include "momlab/sweep.hpp"

#include "momlab/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>

namespace momlab {

SweepGrid SweepGrid::log_grid(double eta_lo, double eta_hi, std::size_t n_eta, double omm_lo, double omm_hi,
                              std::size_t n_mu, std::size_t repetitions) {
  return {log_spaced(eta_lo, eta_hi, n_eta), log_spaced(omm_lo, omm_hi, n_mu), repetitions};
}

void SweepGrid::validate() const {
  if (eta_values.empty() || one_minus_mu_values.empty()) throw InvalidArgument("sweep grid: empty axis");
  if (repetitions < 1) throw InvalidArgument("sweep grid: repetitions must be >= 1");
  for (double e : eta_values)
    if (!(e > 0.0) || !std::isfinite(e)) throw InvalidArgument("sweep grid: learning rates must be positive");
  for (double m : one_minus_mu_values)
    if (!(m > 0.0 && m <= 1.0)) throw InvalidArgument("sweep grid: 1-mu values must lie in (0, 1]");
}

std::string to_string(SweepKind k) {
  switch (k) {
    case SweepKind::grid: return "grid";
    case SweepKind::random: return "random";
    case SweepKind::transition: return "transition";
  }
  return "?";
}

std::size_t SweepResult::diverged_count() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const CellOutcome& c) { return c.status == CellStatus::diverged; }));
}

std::optional<CellOutcome> SweepResult::best_for_mu(double mu) const {
  std::optional<CellOutcome> best;
  for (const auto& c : cells)
    if (c.mu && *c.mu == mu && c.final_loss && (!best || *c.final_loss < *best->final_loss)) best = c;
  return best;
}

std::optional<CellOutcome> SweepResult::best() const {
  std::optional<CellOutcome> best;
  for (const auto& c : cells)
    if (c.final_loss && (!best || *c.final_loss < *best->final_loss)) best = c;
  return best;
}

std::optional<CellOutcome> SweepResult::worst() const {
  std::optional<CellOutcome> worst;
  for (const auto& c : cells)
    if (c.final_loss && (!worst || *c.final_loss > *worst->final_loss)) worst = c;
  return worst;
}

std::vector<double> SweepResult::distinct_mus() const {
  std::set<double> s;
  for (const auto& c : cells)
    if (c.mu) s.insert(*c.mu);
  return {s.begin(), s.end()};
}

std::vector<double> SweepResult::distinct_etas() const {
  std::set<double> s;
  for (const auto& c : cells)
    if (c.eta) s.insert(*c.eta);
  return {s.begin(), s.end()};
}

double estimate_steps(const Problem& problem, const RunSetup& setup) {
  double per_epoch = static_cast<double>(setup.iters_per_epoch);
  if (!setup.batch.full_batch()) {
    const double n = static_cast<double>(problem.n_samples());
    per_epoch = std::ceil(n / static_cast<double>(setup.batch.batch_size));
  }
  return per_epoch * static_cast<double>(setup.epochs);
}

void check_budget(std::size_t runs, double steps_per_run, const RunSetup& setup) {
  if (setup.allow_large) return;
  const double total = steps_per_run * static_cast<double>(runs);
  if (runs > setup.max_runs || total > setup.max_steps)
    throw InvalidArgument("sweep budget exceeded: " + std::to_string(runs) + " runs, " + format_double(total) +
                          " steps (caps " + std::to_string(setup.max_runs) + " runs, " +
                          format_double(setup.max_steps) + " steps); pass allow_large to override");
}

std::uint64_t cell_seed(std::uint64_t seed, double eta, double mu, std::size_t repetition) {
  return hash_seed(seed, {std::bit_cast<std::uint64_t>(eta), std::bit_cast<std::uint64_t>(mu), repetition});
}

std::uint64_t cell_init_seed(std::uint64_t seed, std::size_t repetition) {
  return hash_seed(seed, {0x696e6974ULL, repetition});
}

CellOutcome run_cell(const Problem& problem, const ScheduleSpec& schedule, const RunSetup& setup,
                    std::uint64_t seed, std::uint64_t init_seed) {
  TrainOptions o;
  o.epochs = setup.epochs;
  o.iters_per_epoch = setup.iters_per_epoch;
  o.seed = seed;
  o.init_seed = init_seed;
  o.reset_momentum_on_transition = setup.reset_momentum_on_transition;
  const TrainResult r = train(problem, schedule, o);
  CellOutcome c;
  c.seed = seed;
  if (r.trace.diverged()) {
    c.status = CellStatus::diverged;
  } else {
    c.final_loss = r.final_loss;
    c.heldout_accuracy = problem.heldout_accuracy(r.state.w);
  }
  if (!r.trace.rows.empty()) {
    const auto it = std::min_element(r.trace.rows.begin(), r.trace.rows.end(),
                                     [](const TraceRow& a, const TraceRow& b) { return a.loss < b.loss; });
    c.best_step = it->step;
  }
  return c;
}

namespace {

PhaseSpec phase_for(const RunSetup& setup, double eta, double mu) {
  PhaseSpec p;
  p.hyper = {eta, mu, setup.weight_decay};
  p.batch = setup.batch;
  return p;
}

}  // namespace

SweepResult run_grid(const Problem& problem, const SweepGrid& grid, const RunSetup& setup) {
  grid.validate();
  if (setup.epochs < 1 || setup.iters_per_epoch < 1) throw InvalidArgument("run_grid: iterations must be >= 1");
  if (!setup.batch.full_batch() && problem.n_samples() == 0)
    throw InvalidArgument("run_grid: minibatch mode requires a dataset");
  check_budget(grid.cell_count(), estimate_steps(problem, setup), setup);

  SweepResult res;
  res.kind = SweepKind::grid;
  res.cells.resize(grid.cell_count());
  const std::size_t n_eta = grid.eta_values.size();
  const std::size_t n_mu = grid.one_minus_mu_values.size();
  parallel_for(res.cells.size(), setup.jobs, [&](std::size_t k) {
    const std::size_t rep = k / (n_eta * n_mu);
    const std::size_t j = (k / n_eta) % n_mu;
    const std::size_t i = k % n_eta;
    const double eta = grid.eta_values[i];
    const double mu = 1.0 - grid.one_minus_mu_values[j];
    CellOutcome c = run_cell(problem, ScheduleSpec::single(phase_for(setup, eta, mu)), setup,
                            cell_seed(setup.seed, eta, mu, rep), cell_init_seed(setup.seed, rep));
    c.eta = eta;
    c.mu = mu;
    c.repetition = rep;
    res.cells[k] = c;
  });
  return res;
}

SweepResult transition_sweep(const Problem& problem, const ScheduleSpec& schedule_template,
                             const std::vector<std::int64_t>& candidates, std::int64_t epochs_total,
                             const std::vector<std::uint64_t>& seeds, const RunSetup& setup, std::size_t bins) {
  if (schedule_template.phases.size() != 2)
    throw InvalidArgument("transition_sweep: schedule template must have exactly two phases");
  if (candidates.empty() || seeds.empty()) throw InvalidArgument("transition_sweep: need candidates and seeds");
  if (epochs_total < 1) throw InvalidArgument("transition_sweep: epochs_total must be >= 1");
  if (bins < 1) throw InvalidArgument("transition_sweep: bins must be >= 1");
  for (auto t : candidates)
    if (t < 0 || t >= epochs_total)
      throw InvalidArgument("transition_sweep: candidate " + std::to_string(t) + " not in [0, " +
                            std::to_string(epochs_total) + ")");
  for (const auto& p : schedule_template.phases) p.hyper.validate();

  RunSetup run = setup;
  run.epochs = epochs_total;
  double steps = 0.0;
  for (const auto& p : schedule_template.phases) {
    RunSetup ps = run;
    ps.batch = p.batch;
    steps = std::max(steps, estimate_steps(problem, ps));
  }
  check_budget(candidates.size() * seeds.size(), steps, setup);

  SweepResult res;
  res.kind = SweepKind::transition;
  res.cells.resize(candidates.size() * seeds.size());
  parallel_for(res.cells.size(), setup.jobs, [&](std::size_t k) {
    const std::int64_t t = candidates[k / seeds.size()];
    const std::uint64_t seed = seeds[k % seeds.size()];
    ScheduleSpec s = schedule_template;
    s.transition_epochs = {t};
    CellOutcome c = run_cell(problem, s, run, seed, seed);
    c.transition = t;
    res.cells[k] = c;
  });

  const auto width = static_cast<double>(epochs_total) / static_cast<double>(bins);
  std::map<std::size_t, std::vector<const CellOutcome*>> by_bin;
  for (const auto& c : res.cells) {
    auto b = static_cast<std::size_t>(static_cast<double>(*c.transition) / width);
    by_bin[std::min(b, bins - 1)].push_back(&c);
  }
  for (const auto& [b, members] : by_bin) {
    BinSummary s;
    s.lo = static_cast<std::int64_t>(std::ceil(static_cast<double>(b) * width));
    s.hi = b + 1 == bins ? epochs_total : static_cast<std::int64_t>(std::ceil(static_cast<double>(b + 1) * width));
    std::vector<double> losses, accs;
    for (const auto* c : members) {
      ++s.runs;
      if (c->status == CellStatus::diverged) {
        ++s.diverged;
        continue;
      }
      losses.push_back(*c->final_loss);
      if (c->heldout_accuracy) accs.push_back(*c->heldout_accuracy);
    }
    if (!losses.empty()) s.median_final_loss = median(losses);
    if (!accs.empty()) s.median_heldout_accuracy = median(accs);
    res.bins.push_back(s);
  }
  return res;
}

std::vector<double> sample_log_uniform(double lo, double hi, std::size_t n, std::uint64_t seed) {
  if (!(lo > 0.0) || !(hi >= lo)) throw InvalidArgument("random_search: range must satisfy 0 < lo <= hi");
  if (n < 1) throw InvalidArgument("random_search: n_samples must be >= 1");
  std::mt19937_64 rng(hash_seed(seed, {0x72616e64ULL}));
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  std::vector<double> out(n);
  for (auto& v : out) v = std::clamp(std::exp(u(rng)), lo, hi);
  return out;
}

SweepResult random_search(const Problem& problem, double eta_lo, double eta_hi, double mu, std::size_t n_samples,
                          const RunSetup& setup) {
  const auto etas = sample_log_uniform(eta_lo, eta_hi, n_samples, setup.seed);
  HyperParams{eta_lo, mu, setup.weight_decay}.validate();
  check_budget(n_samples, estimate_steps(problem, setup), setup);
  SweepResult res;
  res.kind = SweepKind::random;
  res.cells.resize(n_samples);
  parallel_for(n_samples, setup.jobs, [&](std::size_t k) {
    CellOutcome c = run_cell(problem, ScheduleSpec::single(phase_for(setup, etas[k], mu)), setup, setup.seed,
                            setup.seed);
    c.eta = etas[k];
    c.mu = mu;
    res.cells[k] = c;
  });
  return res;
}

// ---------------------------------------------------------------------------

namespace {

std::string opt_int(const std::optional<std::int64_t>& v) { return v ? std::to_string(*v) : std::string(); }

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << kSweepCsvHeader << '\n';
  for (const auto& c : result.cells) {
    out << format_optional(c.eta) << ',' << format_optional(c.mu) << ',' << c.seed << ',' << opt_int(c.transition)
        << ',' << format_optional(c.final_loss) << ',' << (c.status == CellStatus::ok ? "ok" : "diverged") << ','
        << opt_int(c.best_step) << ',' << format_optional(c.heldout_accuracy) << '\n';
  }
}

SweepResult read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("sweep csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSweepCsvHeader) throw InvalidArgument("sweep csv: unexpected header '" + line + "'");
  SweepResult res;
  bool any_transition = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 8) throw InvalidArgument("sweep csv: wrong field count in '" + line + "'");
    CellOutcome c;
    c.eta = parse_optional(f[0]);
    c.mu = parse_optional(f[1]);
    c.seed = std::stoull(f[2]);
    if (!f[3].empty()) {
      c.transition = std::stoll(f[3]);
      any_transition = true;
    }
    c.final_loss = parse_optional(f[4]);
    if (f[5] == "ok")
      c.status = CellStatus::ok;
    else if (f[5] == "diverged")
      c.status = CellStatus::diverged;
    else
      throw InvalidArgument("sweep csv: unknown status '" + f[5] + "'");
    if (!f[6].empty()) c.best_step = std::stoll(f[6]);
    c.heldout_accuracy = parse_optional(f[7]);
    res.cells.push_back(c);
  }
  res.kind = any_transition ? SweepKind::transition : SweepKind::grid;
  return res;
}

nlohmann::json sweep_summary_json(const SweepResult& result) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json per_mu = nlohmann::json::array();
  for (double mu : result.distinct_mus()) {
    const auto b = result.best_for_mu(mu);
    per_mu.push_back({{"mu", mu},
                      {"best_eta", b ? opt(b->eta) : nlohmann::json(nullptr)},
                      {"best_final_loss", b ? opt(b->final_loss) : nlohmann::json(nullptr)}});
  }
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : result.bins)
    bins.push_back({{"lo", b.lo},
                    {"hi", b.hi},
                    {"runs", b.runs},
                    {"diverged", b.diverged},
                    {"median_final_loss", opt(b.median_final_loss)},
                    {"median_heldout_accuracy", opt(b.median_heldout_accuracy)}});
  nlohmann::json j = {{"version", 1},
                      {"kind", to_string(result.kind)},
                      {"runs", result.cells.size()},
                      {"diverged", result.diverged_count()},
                      {"best_per_mu", per_mu},
                      {"bins", bins}};
  const auto best = result.best();
  const auto worst = result.worst();
  j["argmin"] = best ? nlohmann::json{{"eta", opt(best->eta)}, {"mu", opt(best->mu)}, {"final_loss", opt(best->final_loss)}}
                     : nlohmann::json(nullptr);
  j["argmax"] = worst ? nlohmann::json{{"eta", opt(worst->eta)}, {"mu", opt(worst->mu)}, {"final_loss", opt(worst->final_loss)}}
                      : nlohmann::json(nullptr);
  return j;
}

}  // namespace momlab
