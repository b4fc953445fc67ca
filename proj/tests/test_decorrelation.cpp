#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stablerules/decorrelation.hpp"

#include <cmath>

#include "oracles.hpp"
#include "stablerules/rng.hpp"

using namespace stablerules;

namespace {

Eigen::VectorXd uniform_w(Eigen::Index n) {
  return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
}

}  // namespace

TEST_CASE("exact linear data is recovered exactly") {
  Eigen::VectorXd x(4), y(4);
  x << 0, 1, 2, 3;
  y << 0, 2, 4, 6;
  const PolyFit fit = weighted_poly_fit(x, y, uniform_w(4), 2);
  CHECK(fit.coeffs.size() == 3);
  CHECK(fit.coeffs[0] == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(fit.coeffs[1] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(fit.coeffs[2] == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("constant target gives zero nonconstant coefficients") {
  Eigen::VectorXd x(6), y(6);
  x << -2, -1, 0, 1, 2, 3;
  y.setConstant(5.0);
  const PolyFit fit = weighted_poly_fit(x, y, uniform_w(6), 3);
  // the 1e-10 ridge jitter perturbs the exact answer at ~cond * jitter
  CHECK(fit.coeffs[0] == doctest::Approx(5.0).epsilon(1e-6));
  for (int d = 1; d <= 3; ++d) CHECK(std::abs(fit.coeffs[d]) < 1e-6);
}

TEST_CASE("random instances match the dense-solve oracle") {
  Rng rng(404);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 50;
    Eigen::VectorXd x(n), y(n), w(n);
    for (int i = 0; i < n; ++i) {
      x[i] = rng.normal();
      y[i] = rng.normal() * 2.0 + 0.5;
      w[i] = rng.uniform01() + 0.05;
    }
    const PolyFit fit = weighted_poly_fit(x, y, w, 3);
    const Eigen::VectorXd oracle = oracles::polyfit_dense_oracle(x, y, w, 3);
    CHECK((fit.coeffs - oracle).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("constant source is rank deficient") {
  // constant column at a scale where the jittered moment matrix still has
  // condition number beyond 1e12
  Eigen::VectorXd x = Eigen::VectorXd::Constant(5, 20.0);
  Eigen::VectorXd y(5);
  y << 1, 2, 3, 4, 5;
  CHECK_THROWS_AS(weighted_poly_fit(x, y, uniform_w(5), 2), RankDeficient);
}

TEST_CASE("degree and size preconditions") {
  Eigen::VectorXd x(2), y(2);
  x << 0, 1;
  y << 1, 2;
  CHECK_THROWS_AS(weighted_poly_fit(x, y, uniform_w(2), 0), InvalidValue);
  CHECK_THROWS_AS(weighted_poly_fit(x, y, uniform_w(2), 2), DimensionMismatch);
}

TEST_CASE("weight scaling leaves coefficients unchanged") {
  Rng rng(7);
  const int n = 30;
  Eigen::VectorXd x(n), y(n), w(n);
  for (int i = 0; i < n; ++i) {
    x[i] = rng.normal();
    y[i] = std::sin(x[i]) + 0.1 * rng.normal();
    w[i] = rng.uniform01() + 0.01;
  }
  const PolyFit a = weighted_poly_fit(x, y, w, 2);
  const PolyFit b = weighted_poly_fit(x, y, (w * 7.5).eval(), 2);
  CHECK((a.coeffs - b.coeffs).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("noise-free low-degree relations are reproduced") {
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 12;
    Eigen::VectorXd x(n), w(n);
    for (int i = 0; i < n; ++i) {
      x[i] = rng.normal() * 2;
      w[i] = rng.uniform01() + 0.1;
    }
    const double c0 = rng.normal(), c1 = rng.normal(), c2 = rng.normal();
    const Eigen::VectorXd y = c0 + c1 * x.array() + c2 * x.array().square();
    const PolyFit fit = weighted_poly_fit(x, y, w, 2);
    const Eigen::VectorXd resid =
        y.array() - fit.coeffs[0] - fit.coeffs[1] * x.array() - fit.coeffs[2] * x.array().square();
    CHECK(resid.cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("two-column exact linear relation gives penalty 4.25") {
  Eigen::MatrixXd X(4, 2);
  X << 0, 0, 1, 2, 2, 4, 3, 6;  // x2 = 2*x1
  const double pen = decor_penalty(X, uniform_w(4), 2);
  CHECK(pen == doctest::Approx(4.25).epsilon(1e-6));
}

TEST_CASE("penalty equals per-pair oracle recomputation") {
  Rng rng(31);
  const int n = 40, p = 3;
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
    w[i] = rng.uniform01() + 0.02;
  }
  const int k = 2;
  double expected = 0.0;
  for (int src = 0; src < p; ++src) {
    for (int tgt = 0; tgt < p; ++tgt) {
      if (src == tgt) continue;
      const PolyFit fit = weighted_poly_fit(X.col(src), X.col(tgt), w, k);
      expected += fit.coeffs.tail(k).squaredNorm();
    }
  }
  CHECK(decor_penalty(X, w, k) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("penalty is symmetric under column permutation") {
  Rng rng(55);
  const int n = 35;
  Eigen::MatrixXd X(n, 4);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) X(i, j) = rng.normal();
    w[i] = rng.uniform01() + 0.05;
  }
  Eigen::MatrixXd Xp(n, 4);
  Xp << X.col(2), X.col(0), X.col(3), X.col(1);
  CHECK(decor_penalty(X, w, 2) == doctest::Approx(decor_penalty(Xp, w, 2)).epsilon(1e-9));
}

TEST_CASE("analytic gradient agrees with central differences") {
  Rng rng(88);
  for (int trial = 0; trial < 4; ++trial) {
    const int n = 25, p = 3, k = 2;
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
      w[i] = rng.uniform01() * 0.5 + 0.2;
    }
    Eigen::VectorXd grad;
    decor_penalty_with_gradient(X, w, k, grad);
    const Eigen::VectorXd fd = oracles::finite_difference_gradient(
        [&](const Eigen::VectorXd& ww) { return decor_penalty(X, ww, k); }, w);
    const double rel = (grad - fd).norm() / std::max(1e-12, fd.norm());
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("gamma = 0 yields the closed-form quadratic minimum") {
  const int n = 40;
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(n, 3);
  DecorConfig cfg;
  cfg.gamma = 0.0;
  cfg.lambda5 = 5e-4;
  cfg.lambda6 = 5e-4;
  cfg.max_iters = 20000;
  const LearnWeightsResult res = learn_weights(X, cfg);
  const double expected = cfg.lambda6 / (cfg.lambda5 + n * cfg.lambda6);
  for (int i = 0; i < n; ++i) {
    CHECK(res.weights.w[i] == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("quadratic confounding is reduced below half of uniform") {
  Rng rng(2024);
  const int n = 500;
  Eigen::MatrixXd X(n, 2);
  for (int i = 0; i < n; ++i) {
    const double x1 = rng.normal();
    X(i, 0) = x1;
    X(i, 1) = x1 * x1 + 0.3 * rng.normal();
  }
  DecorConfig cfg;  // defaults: gamma 600, k = 2
  const double pen_uniform = decor_penalty(X, uniform_w(n), cfg.degree);
  const LearnWeightsResult res = learn_weights(X, cfg);
  const double pen_learned = decor_penalty(X, res.weights.w, cfg.degree);
  CHECK(pen_learned < 0.5 * pen_uniform);
}

TEST_CASE("independent columns leave little to remove") {
  Rng rng(515);
  const int n = 500;
  Eigen::MatrixXd X(n, 3);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
  }
  DecorConfig cfg;
  const double pen_uniform = decor_penalty(X, uniform_w(n), cfg.degree);
  const LearnWeightsResult res = learn_weights(X, cfg);
  const double pen_learned = decor_penalty(X, res.weights.w, cfg.degree);
  CHECK(pen_learned <= 1.5 * pen_uniform);
}

TEST_CASE("objective trace is monotone and bounded by the start") {
  Rng rng(616);
  const int n = 120;
  Eigen::MatrixXd X(n, 3);
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    X(i, 0) = z;
    X(i, 1) = 0.5 * z * z + rng.normal() * 0.2;
    X(i, 2) = rng.normal();
  }
  DecorConfig cfg;
  cfg.max_iters = 300;
  const LearnWeightsResult res = learn_weights(X, cfg);
  REQUIRE(res.objective_trace.size() >= 2);
  for (size_t i = 1; i < res.objective_trace.size(); ++i) {
    CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-12);
  }
  CHECK(res.objective <= res.objective_trace.front() + 1e-12);
  // weights stay nonnegative and the soft sum constraint holds
  CHECK(res.weights.w.minCoeff() >= 0.0);
  CHECK(res.weights.w.sum() == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("config validation") {
  DecorConfig cfg;
  cfg.degree = 0;
  CHECK_THROWS_AS(check_decor_config(cfg), InvalidValue);
  cfg = DecorConfig();
  cfg.gamma = -1;
  CHECK_THROWS_AS(check_decor_config(cfg), InvalidValue);
  cfg = DecorConfig();
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(3, 2);
  CHECK_THROWS_AS(learn_weights(X, cfg), DimensionMismatch);  // n <= k+1
}
