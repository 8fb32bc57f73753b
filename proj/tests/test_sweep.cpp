#include "momlab/sweep.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace momlab;

namespace {

const MlpProblem& toy() {
  static const MlpProblem p(MlpModel({2, 8, 2}), make_dataset(DatasetKind::two_moons, 48, 0.2, 2));
  return p;
}

ScheduleSpec two_phase() {
  PhaseSpec a, b;
  a.hyper = {0.5, 0.0, 1e-4};
  a.batch = BatchMode::minibatch(16);
  b.hyper = {0.01, 0.9, 1e-4};
  b.batch = BatchMode::minibatch(16);
  return {{a, b}, {1}};
}

}  // namespace

TEST_SUITE("sweep") {
  TEST_CASE("log grid endpoints and constant ratio") {
    const auto g = SweepGrid::log_grid(1e-7, 5e5, 50, 1e-3, 1.0, 4);
    REQUIRE(g.eta_values.size() == 50);
    CHECK(g.eta_values.front() == 1e-7);
    CHECK(g.eta_values.back() == 5e5);
    const double ratio = g.eta_values[1] / g.eta_values[0];
    for (std::size_t i = 1; i < 50; ++i) CHECK(g.eta_values[i] / g.eta_values[i - 1] == doctest::Approx(ratio));
    CHECK(g.cell_count() == 200);
  }

  TEST_CASE("grid validation") {
    SweepGrid g;
    CHECK_THROWS_AS(g.validate(), InvalidArgument);
    g.eta_values = {0.1};
    g.one_minus_mu_values = {0.0};
    CHECK_THROWS_AS(g.validate(), InvalidArgument);
    g.one_minus_mu_values = {0.5};
    g.eta_values = {-1.0};
    CHECK_THROWS_AS(g.validate(), InvalidArgument);
  }

  TEST_CASE("momentum beats plain descent on an ill-conditioned quadratic") {
    const auto q = make_quadratic(100, 1e5, 7);
    const auto grid = SweepGrid::log_grid(1e-7, 5e5, 50, 0.05, 1.0, 2);
    RunSetup s;
    s.iters_per_epoch = 2000;
    s.seed = 7;
    const auto r = run_grid(q, grid, s);
    CHECK(r.cells.size() == 100);
    const auto at95 = r.best_for_mu(0.95);
    const auto at0 = r.best_for_mu(0.0);
    REQUIRE(at95.has_value());
    REQUIRE(at0.has_value());
    CHECK(*at95->final_loss < *at0->final_loss);
  }

  TEST_CASE("an all-unstable grid diverges everywhere") {
    const auto q = make_quadratic(5, 50.0, 1);
    SweepGrid g;
    for (double f : {1.05, 2.0, 10.0}) g.eta_values.push_back(f / q.lambda_max());
    g.one_minus_mu_values = {1.0};
    RunSetup s;
    s.iters_per_epoch = 3000;
    const auto r = run_grid(q, g, s);
    CHECK(r.diverged_count() == 3);
    for (const auto& c : r.cells) {
      CHECK(c.status == CellStatus::diverged);
      CHECK_FALSE(c.final_loss.has_value());
    }
    CHECK_FALSE(r.best().has_value());
  }

  TEST_CASE("budget guardrail") {
    const auto q = make_quadratic(3, 10.0, 1);
    const auto grid = SweepGrid::log_grid(1e-3, 1e-1, 10, 0.1, 1.0, 10);
    RunSetup s;
    s.max_runs = 50;
    CHECK_THROWS_AS(run_grid(q, grid, s), InvalidArgument);
    s.allow_large = true;
    CHECK(run_grid(q, grid, s).cells.size() == 100);
    s.allow_large = false;
    s.max_runs = 1000;
    s.iters_per_epoch = 1000;
    s.max_steps = 5e4;
    CHECK_THROWS_AS(run_grid(q, grid, s), InvalidArgument);
    CHECK(estimate_steps(q, s) == 1000.0);
  }

  TEST_CASE("transition sweep counting and bins") {
    RunSetup s;
    const auto r = transition_sweep(toy(), two_phase(), {1, 2, 3}, 4, {1, 2, 3}, s, 3);
    CHECK(r.kind == SweepKind::transition);
    CHECK(r.cells.size() == 9);
    REQUIRE(r.bins.size() == 3);
    for (const auto& b : r.bins) {
      CHECK(b.runs == 3);
      CHECK(b.median_final_loss.has_value());
    }
    CHECK(r.bins[0].lo == 0);
    CHECK(r.bins.back().hi == 4);
  }

  TEST_CASE("transition sweep over three candidates and three seeds") {
    RunSetup s;
    const auto r = transition_sweep(toy(), two_phase(), {10, 20, 30}, 40, {1, 2, 3}, s, 10);
    CHECK(r.cells.size() == 9);
    CHECK(r.bins.size() == 3);
    for (const auto& b : r.bins) CHECK(b.runs == 3);
  }

  TEST_CASE("transition at epoch zero equals running phase two alone") {
    RunSetup s;
    s.epochs = 3;
    const auto r = transition_sweep(toy(), two_phase(), {0}, 3, {5}, s, 1);
    const auto alone = run_cell(toy(), ScheduleSpec::single(two_phase().phases[1]), s, 5, 5);
    REQUIRE(r.cells[0].final_loss.has_value());
    CHECK(*r.cells[0].final_loss == *alone.final_loss);
  }

  TEST_CASE("transition sweep validates before running") {
    RunSetup s;
    CHECK_THROWS_AS(transition_sweep(toy(), two_phase(), {1, 9}, 5, {1}, s), InvalidArgument);
    CHECK_THROWS_AS(transition_sweep(toy(), two_phase(), {}, 5, {1}, s), InvalidArgument);
    auto bad = two_phase();
    bad.phases[1].hyper.momentum = 1.5;
    CHECK_THROWS_AS(transition_sweep(toy(), bad, {1}, 5, {1}, s), InvalidArgument);
    auto one = two_phase();
    one.phases.pop_back();
    CHECK_THROWS_AS(transition_sweep(toy(), one, {1}, 5, {1}, s), InvalidArgument);
  }

  TEST_CASE("log-uniform sampling") {
    const auto a = sample_log_uniform(1e-3, 10.0, 20, 4);
    CHECK(a.size() == 20);
    for (double v : a) {
      CHECK(v >= 1e-3);
      CHECK(v <= 10.0);
    }
    CHECK(a == sample_log_uniform(1e-3, 10.0, 20, 4));
    CHECK(a != sample_log_uniform(1e-3, 10.0, 20, 5));
    CHECK_THROWS_AS(sample_log_uniform(0.0, 1.0, 3, 1), InvalidArgument);
    CHECK_THROWS_AS(sample_log_uniform(1.0, 2.0, 0, 1), InvalidArgument);
  }

  TEST_CASE("random search with one sample matches that run") {
    RunSetup s;
    s.batch = BatchMode::minibatch(16);
    s.epochs = 2;
    s.seed = 9;
    const auto r = random_search(toy(), 1e-3, 1.0, 0.9, 1, s);
    REQUIRE(r.cells.size() == 1);
    PhaseSpec p;
    p.hyper = {*r.cells[0].eta, 0.9, 0.0};
    p.batch = s.batch;
    const auto single = run_cell(toy(), ScheduleSpec::single(p), s, 9, 9);
    CHECK(r.cells[0].final_loss == single.final_loss);
    CHECK(r.best()->final_loss == single.final_loss);
  }

  TEST_CASE("sweep CSV round trip") {
    const auto q = make_quadratic(3, 10.0, 1);
    RunSetup s;
    s.iters_per_epoch = 20;
    SweepGrid g{{0.01, 0.5}, {1.0, 0.1}, 1};
    const auto r = run_grid(q, g, s);
    std::stringstream ss;
    write_sweep_csv(ss, r);
    const std::string text = ss.str();
    CHECK(text.rfind(std::string(kSweepCsvHeader) + "\n", 0) == 0);
    const auto back = read_sweep_csv(ss);
    REQUIRE(back.cells.size() == r.cells.size());
    for (std::size_t i = 0; i < r.cells.size(); ++i) {
      CHECK(back.cells[i].eta == r.cells[i].eta);
      CHECK(back.cells[i].mu == r.cells[i].mu);
      CHECK(back.cells[i].final_loss == r.cells[i].final_loss);
      CHECK(back.cells[i].status == r.cells[i].status);
      CHECK(back.cells[i].seed == r.cells[i].seed);
    }
    std::stringstream again;
    write_sweep_csv(again, back);
    CHECK(again.str() == text);
    const auto j = sweep_summary_json(r);
    CHECK(j["runs"] == 4);
  }

  TEST_CASE("sweep CSV errors") {
    std::stringstream bad("eta,mu\n");
    CHECK_THROWS_AS(read_sweep_csv(bad), InvalidArgument);
    std::stringstream status(std::string(kSweepCsvHeader) + "\n0.1,0.9,1,,1,exploded,,\n");
    CHECK_THROWS_AS(read_sweep_csv(status), InvalidArgument);
  }
}
