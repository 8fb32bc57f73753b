#include "momlab/problems.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numeric>

using namespace momlab;

namespace {

QuadraticProblem explicit_quadratic(MatrixXd a) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  return QuadraticProblem(std::move(a), es.eigenvalues(), 0);
}

std::size_t count_label(const Dataset& d, int label) {
  return static_cast<std::size_t>(std::count(d.labels.begin(), d.labels.end(), label));
}

}  // namespace

TEST_SUITE("problems") {
  TEST_CASE("make_quadratic hits the requested spectrum ends") {
    const auto q = make_quadratic(100, 1e5, 7);
    CHECK(q.dimension() == 100);
    CHECK(q.lambda_min() == 1.0);
    CHECK(q.lambda_max() == 1e5);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(q.matrix());
    CHECK(es.eigenvalues()(0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(es.eigenvalues()(99) == doctest::Approx(1e5).epsilon(1e-10));
  }

  TEST_CASE("condition number one gives an identity-like matrix") {
    const auto q = make_quadratic(2, 1.0, 0);
    CHECK((q.matrix() - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("condition number is exact under an independent eigendecomposition") {
    const auto q = make_quadratic(10, 100.0, 3);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(q.matrix());
    const double kappa = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
    CHECK(std::abs(kappa - 100.0) / 100.0 < 1e-8);
  }

  TEST_CASE("eigenvalues are log-spaced") {
    const auto q = make_quadratic(5, 1e4, 1);
    for (int i = 0; i < 5; ++i) CHECK(q.eigenvalues()(i) == doctest::Approx(std::pow(10.0, i)).epsilon(1e-12));
  }

  TEST_CASE("make_quadratic is deterministic in its seed") {
    CHECK(make_quadratic(6, 50.0, 4).matrix() == make_quadratic(6, 50.0, 4).matrix());
    CHECK(make_quadratic(6, 50.0, 4).matrix() != make_quadratic(6, 50.0, 5).matrix());
  }

  TEST_CASE("make_quadratic rejects bad arguments") {
    CHECK_THROWS_AS(make_quadratic(1, 10.0, 0), InvalidArgument);
    CHECK_THROWS_AS(make_quadratic(4, 0.5, 0), InvalidArgument);
    CHECK_THROWS_AS(make_quadratic(4, std::nan(""), 0), InvalidArgument);
  }

  TEST_CASE("QuadraticProblem rejects non-positive spectra") {
    MatrixXd a = MatrixXd::Identity(2, 2);
    a(1, 1) = -1.0;
    VectorXd ev(2);
    ev << -1.0, 1.0;
    CHECK_THROWS_AS(QuadraticProblem(a, ev, 0), InvalidArgument);
  }

  TEST_CASE("quadratic eval_grad on small cases") {
    const auto one = explicit_quadratic(MatrixXd::Ones(1, 1));
    VectorXd w(1);
    w << 1.0;
    auto r = one.eval_grad(w);
    CHECK(r.loss == 1.0);
    CHECK(r.grad(0) == 2.0);
    w << 0.0;
    r = one.eval_grad(w);
    CHECK(r.loss == 0.0);
    CHECK(r.grad(0) == 0.0);

    MatrixXd a = MatrixXd::Zero(2, 2);
    a.diagonal() << 1.0, 4.0;
    const auto diag = explicit_quadratic(a);
    const auto r2 = diag.eval_grad(VectorXd::Ones(2));
    CHECK(r2.loss == 5.0);
    CHECK(r2.grad(0) == 2.0);
    CHECK(r2.grad(1) == 8.0);
    CHECK_THROWS_AS(diag.eval_grad(VectorXd::Ones(3)), InvalidArgument);
  }

  TEST_CASE("quadratic template evaluator matches the virtual one") {
    const auto q = make_quadratic(8, 30.0, 2);
    const VectorXd w = q.initial_point(5);
    const auto a = q.eval_grad(w);
    const auto b = quadratic_eval_grad(q, w);
    CHECK(a.loss == b.loss);
    CHECK(a.grad == b.grad);
  }

  TEST_CASE("quadratic json round trip") {
    const auto q = make_quadratic(4, 20.0, 9);
    const auto back = quadratic_from_json(to_json(q));
    CHECK(back.matrix() == q.matrix());
    CHECK(back.eigenvalues() == q.eigenvalues());
    CHECK(back.seed() == q.seed());
    CHECK_THROWS(quadratic_from_json(nlohmann::json{{"version", 99}}));
  }

  TEST_CASE("two_gaussians without noise is two balanced point clusters") {
    const auto d = make_dataset(DatasetKind::two_gaussians, 100, 0.0, 1);
    CHECK(d.size() == 100);
    CHECK(count_label(d, 0) == 50);
    CHECK(count_label(d, 1) == 50);
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double x = d.inputs(static_cast<Eigen::Index>(i), 0);
      CHECK((d.labels[i] == 0 ? x < 0.0 : x > 0.0));
    }
  }

  TEST_CASE("two_moons contract") {
    const auto d = make_dataset("two_moons", 200, 0.1, 2);
    CHECK(d.size() == 200);
    CHECK(d.inputs.rows() == 200);
    CHECK(d.inputs.cols() == 2);
    CHECK(d.inputs.allFinite());
    CHECK(count_label(d, 0) + count_label(d, 1) == 200);
    CHECK(count_label(d, 0) == 100);
  }

  TEST_CASE("random_labels is balanced within one") {
    const auto d = make_dataset(DatasetKind::random_labels, 64, 0.0, 5);
    const auto zeros = static_cast<long>(count_label(d, 0));
    CHECK(std::abs(zeros - 32) <= 1);
    CHECK(count_label(d, 0) + count_label(d, 1) == 64);
  }

  TEST_CASE("dataset errors") {
    CHECK_THROWS_AS(make_dataset("spirals", 10, 0.0, 0), InvalidArgument);
    CHECK_THROWS_AS(make_dataset(DatasetKind::two_moons, 1, 0.0, 0), InvalidArgument);
    CHECK_THROWS_AS(make_dataset(DatasetKind::two_moons, 10, -1.0, 0), InvalidArgument);
  }

  TEST_CASE("heldout split partitions the data") {
    const auto d = make_dataset(DatasetKind::two_moons, 50, 0.2, 3);
    const auto [train, held] = split_heldout(d, 10, 4);
    CHECK(train.size() == 40);
    CHECK(held.size() == 10);
    CHECK_THROWS_AS(split_heldout(d, 50, 4), InvalidArgument);
  }

  TEST_CASE("dataset json round trip") {
    const auto d = make_dataset(DatasetKind::two_moons, 20, 0.3, 8);
    const auto back = dataset_from_json(to_json(d));
    CHECK(back.inputs == d.inputs);
    CHECK(back.labels == d.labels);
    CHECK(back.kind == d.kind);
  }

  TEST_CASE("zero weights give ln 2") {
    const MlpModel m({2, 32, 32, 2});
    const auto d = make_dataset(DatasetKind::two_moons, 30, 0.1, 1);
    const auto r = m.eval_grad(VectorXd::Zero(m.parameter_count()), d);
    CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  }

  TEST_CASE("duplicating every sample leaves loss and gradient unchanged") {
    const MlpModel m({2, 8, 2});
    const auto d = make_dataset(DatasetKind::two_gaussians, 12, 0.5, 6);
    std::vector<std::size_t> twice;
    for (std::size_t i = 0; i < d.size(); ++i) {
      twice.push_back(i);
      twice.push_back(i);
    }
    const VectorXd w = m.initialize(3);
    const auto a = m.eval_grad(w, d);
    const auto b = m.eval_grad(w, d.subset(twice));
    CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-14));
    CHECK((a.grad - b.grad).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("mlp parameter layout and initialization") {
    const MlpModel m({2, 32, 32, 2});
    CHECK(m.parameter_count() == 2 * 32 + 32 + 32 * 32 + 32 + 32 * 2 + 2);
    const VectorXd w = m.initialize(1);
    CHECK(w.size() == m.parameter_count());
    CHECK(w.segment(64, 32).isZero());
    CHECK(m.initialize(1) == w);
    CHECK_THROWS_AS(MlpModel({2}), InvalidArgument);
    CHECK_THROWS_AS(MlpModel({2, 0, 2}), InvalidArgument);
  }

  TEST_CASE("predict_proba columns sum to one") {
    const MlpModel m({2, 5, 3});
    const auto d = make_dataset(DatasetKind::two_moons, 10, 0.1, 1);
    const MatrixXd p = m.predict_proba(m.initialize(2), d.inputs);
    CHECK(p.cols() == 10);
    for (Eigen::Index i = 0; i < p.cols(); ++i) CHECK(p.col(i).sum() == doctest::Approx(1.0));
  }

  TEST_CASE("MlpProblem batch evaluation and heldout accuracy") {
    const auto d = make_dataset(DatasetKind::two_gaussians, 40, 0.1, 1);
    auto [train, held] = split_heldout(d, 10, 2);
    const MlpProblem p(MlpModel({2, 4, 2}), train, held);
    CHECK(p.n_samples() == 30);
    const VectorXd w = p.initial_point(1);
    std::vector<std::size_t> all(30);
    std::iota(all.begin(), all.end(), 0);
    CHECK(p.eval_grad(w, all).loss == doctest::Approx(p.eval_grad(w).loss).epsilon(1e-14));
    const auto acc = p.heldout_accuracy(w);
    REQUIRE(acc.has_value());
    CHECK(*acc >= 0.0);
    CHECK(*acc <= 1.0);
    CHECK_FALSE(p.optimum_hint().has_value());
  }
}
