// Values frozen from tests/oracles/generate.py (numpy, torch autograd).

#include "momlab/equivalence.hpp"
#include "momlab/optim.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace momlab;

TEST_SUITE("oracles") {
  TEST_CASE("heavy ball with weight decay, five steps") {
    MatrixXd a(3, 3);
    a << 3.0, 0.5, -0.2, 0.5, 2.0, 0.1, -0.2, 0.1, 1.0;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
    const QuadraticProblem q(a, es.eigenvalues(), 0);
    VectorXd w0(3);
    w0 << 1.0, -2.0, 0.5;
    MomentumStateD s(w0);
    for (int i = 0; i < 5; ++i) momentum_step_inplace(s, q.eval_grad(s.w).grad, HyperParams{0.05, 0.9, 0.01});
    const double w5[] = {-0.48586751621945956, 0.9399870164322829, 0.21955458927232807};
    const double g5[] = {5.061485801040438, -11.390623908098156, 2.288807438779063};
    for (int i = 0; i < 3; ++i) {
      CHECK(s.w(i) == doctest::Approx(w5[i]).epsilon(1e-13));
      CHECK(s.g(i) == doctest::Approx(g5[i]).epsilon(1e-13));
    }
  }

  TEST_CASE("toy network loss and gradient") {
    const MlpModel m({2, 3, 2});
    VectorXd w(17);
    w << 0.3, 0.5, -0.4, -0.7, 0.2, 0.9, 0.1, -0.2, 0.05, 0.6, -0.5, -0.3, 0.4, 0.8, 0.2, 0.0, 0.3;
    Dataset d;
    d.inputs.resize(4, 2);
    d.inputs << 0.5, 1.0, -1.2, 0.3, 0.0, -0.8, 2.0, 0.7;
    d.labels = {0, 1, 1, 0};
    const auto r = m.eval_grad(w, d);
    CHECK(r.loss == doctest::Approx(0.9047520770233831).epsilon(1e-13));
    const double grad[] = {-0.5557937744435208,   0.2234478207415056,   -0.2750309026626727,  -0.31219215429996416,
                           0.19388609996609144,   -0.15603301234416558, -0.10093730632691153, 0.017324809881375976,
                           -0.05624654451251846,  0.05702918868956195,  -0.0570291886895619,  -0.28891270024285864,
                           0.28891270024285864,   -0.07720180965837224, 0.07720180965837217,  -0.055862946255246765,
                           0.055862946255246765};
    for (int i = 0; i < 17; ++i) CHECK(r.grad(i) == doctest::Approx(grad[i]).epsilon(1e-12).scale(1e-12));
  }

  TEST_CASE("least-squares line") {
    const auto f = fit_line({1.0, 2.0, 3.0, 5.0, 8.0}, {0.11, 0.19, 0.32, 0.48, 0.83});
    CHECK(f.slope == doctest::Approx(0.10246753246753247).epsilon(1e-13));
    CHECK(f.intercept == doctest::Approx(-0.003376623376623323).epsilon(1e-10));
    CHECK(f.r_squared == doctest::Approx(0.9952835543134694).epsilon(1e-13));
  }

  TEST_CASE("log-spaced grid") {
    const auto g = log_spaced(1e-7, 5e5, 50);
    CHECK(g[1] == doctest::Approx(1.8161957419780842e-07).epsilon(1e-13));
    CHECK(g[25] == doctest::Approx(0.3013466228430377).epsilon(1e-13));
    CHECK(g[48] == doctest::Approx(275300.7225176241).epsilon(1e-13));
  }

  TEST_CASE("rotated diag(1, 4) quadratic") {
    MatrixXd a(2, 2);
    a << 1.75, -1.299038105676658, -1.299038105676658, 3.2500000000000004;
    VectorXd ev(2);
    ev << 1.0, 4.0;
    const QuadraticProblem q(a, ev, 0);
    VectorXd w(2);
    w << 1.0, 1.0;
    const auto r = q.eval_grad(w);
    CHECK(r.loss == doctest::Approx(1.75 + 3.25 - 2 * 1.299038105676658).epsilon(1e-14));
    CHECK(q.condition_number() == 4.0);
  }
}
