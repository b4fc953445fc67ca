#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stablerules/models.hpp"

#include <cmath>

#include "oracles.hpp"
#include "stablerules/rng.hpp"

using namespace stablerules;

namespace {

struct Instance {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd w;
};

Instance random_regression(int n, int p, uint64_t seed) {
  Rng rng(seed);
  Instance in;
  in.X.resize(n, p);
  in.y.resize(n);
  in.w.resize(n);
  Eigen::VectorXd beta(p);
  for (int j = 0; j < p; ++j) beta[j] = rng.normal();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) in.X(i, j) = rng.normal();
    in.y[i] = in.X.row(i).dot(beta) + 0.3 * rng.normal();
    in.w[i] = rng.uniform01();
  }
  return in;
}

Instance random_classification(int n, int p, uint64_t seed) {
  Instance in = random_regression(n, p, seed);
  for (int i = 0; i < n; ++i) in.y[i] = in.y[i] >= 0 ? 1.0 : -1.0;
  return in;
}

}  // namespace

TEST_CASE("OLS recovers noise-free coefficients") {
  Rng rng(5);
  const int n = 60, p = 4;
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd beta(p);
  beta << 2.0, -1.0, 0.5, 3.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
  }
  const Eigen::VectorXd y = (X * beta).array() + 0.7;
  const LinearModel m = fit_linear_baseline(X, y, ModelKind::ols, 0.0);
  CHECK((m.beta - beta).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(m.b == doctest::Approx(0.7).epsilon(1e-8));
}

TEST_CASE("ridge converges to OLS as lambda vanishes") {
  const Instance in = random_regression(80, 3, 6);
  const LinearModel ols = fit_linear_baseline(in.X, in.y, ModelKind::ols, 0.0);
  const LinearModel ridge = fit_linear_baseline(in.X, in.y, ModelKind::ridge, 1e-10);
  CHECK((ols.beta - ridge.beta).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("lasso kills every coefficient above the threshold lambda") {
  const Instance in = random_regression(50, 4, 7);
  const Eigen::VectorXd centered = in.y.array() - in.y.mean();
  double max_score = 0.0;
  for (int j = 0; j < 4; ++j) {
    max_score = std::max(max_score, std::abs(in.X.col(j).dot(centered)));
  }
  const LinearModel m = fit_linear_baseline(in.X, in.y, ModelKind::lasso, 2.0 * max_score * 1.01);
  CHECK(m.beta.cwiseAbs().maxCoeff() == 0.0);
  CHECK(m.converged);
}

TEST_CASE("lasso objective trace is monotone") {
  const Instance in = random_regression(60, 5, 8);
  const LinearModel m = fit_linear_baseline(in.X, in.y, ModelKind::lasso, 5.0);
  for (size_t i = 1; i < m.objective_trace.size(); ++i) {
    CHECK(m.objective_trace[i] <= m.objective_trace[i - 1] + 1e-10);
  }
}

TEST_CASE("rank-deficient OLS reports Singular and suggests ridge") {
  Eigen::MatrixXd X(5, 2);
  X.col(0) << 1, 2, 3, 4, 5;
  X.col(1) = 2.0 * X.col(0);
  Eigen::VectorXd y(5);
  y << 1, 2, 3, 4, 5;
  CHECK_THROWS_WITH_AS(fit_linear_baseline(X, y, ModelKind::ols, 0.0),
                       doctest::Contains("ridge"), Singular);
}

TEST_CASE("symmetric two-point SVM has boundary at the origin") {
  Eigen::MatrixXd X(2, 1);
  X << -1.0, 1.0;
  Eigen::VectorXd y(2);
  y << -1.0, 1.0;
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(2, 0.5);
  SvmConfig cfg;
  cfg.C = 10.0;
  cfg.tolerance = 1e-10;
  const LinearModel m = fit_weighted_svm(X, y, w, cfg);
  CHECK(std::abs(m.b) < 1e-8);
  CHECK(m.beta[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("raising the weight of a strictly satisfied sample changes nothing") {
  // margin of the point at x = 3 is 3 > 1 at the optimum driven by x = +-1
  Eigen::MatrixXd X(3, 1);
  X << -1.0, 1.0, 3.0;
  Eigen::VectorXd y(3);
  y << -1.0, 1.0, 1.0;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(3);
  SvmConfig cfg;
  cfg.C = 5.0;
  cfg.tolerance = 1e-10;
  const LinearModel base = fit_weighted_svm(X, y, w, cfg);
  CHECK(y[2] * (base.beta[0] * X(2, 0) + base.b) > 1.0);
  w[2] = 50.0;
  const LinearModel bumped = fit_weighted_svm(X, y, w, cfg);
  CHECK(std::abs(base.beta[0] - bumped.beta[0]) < 1e-8);
  CHECK(std::abs(base.b - bumped.b) < 1e-8);
}

TEST_CASE("weighted SVM matches the generic convex oracle") {
  for (uint64_t seed : {21, 22, 23}) {
    const Instance in = random_classification(12, 2, seed);
    SvmConfig cfg;
    cfg.C = 0.7;
    cfg.tolerance = 1e-9;
    const LinearModel m = fit_weighted_svm(in.X, in.y, in.w, cfg);
    const double obj = weighted_svm_objective(in.X, in.y, in.w, cfg, m.beta, m.b);
    const double oracle = oracles::svm_objective_oracle(in.X, in.y, in.w, cfg);
    CHECK(obj == doctest::Approx(oracle).epsilon(1e-3));
    CHECK(obj <= oracle + 1e-3);
  }
}

TEST_CASE("plain SVM is the all-zero-weight degenerate case") {
  const Instance in = random_classification(14, 2, 29);
  SvmConfig cfg;
  cfg.C = 1.3;
  cfg.tolerance = 1e-9;
  const LinearModel m = fit_weighted_svm(in.X, in.y, Eigen::VectorXd::Zero(14), cfg);
  const double obj =
      weighted_svm_objective(in.X, in.y, Eigen::VectorXd::Zero(14), cfg, m.beta, m.b);
  const double oracle =
      oracles::svm_objective_oracle(in.X, in.y, Eigen::VectorXd::Zero(14), cfg);
  CHECK(obj == doctest::Approx(oracle).epsilon(1e-3));
}

TEST_CASE("SVR interpolates noise-free linear data when the tube is closed") {
  Rng rng(33);
  const int n = 25;
  Eigen::MatrixXd X(n, 1);
  for (int i = 0; i < n; ++i) X(i, 0) = rng.normal();
  const Eigen::VectorXd y = 2.5 * X.col(0).array() - 1.0;
  SvmConfig cfg;
  cfg.C = 100.0;
  cfg.epsilon = 0.0;
  cfg.tolerance = 1e-10;
  const LinearModel m = fit_weighted_svr(X, y, Eigen::VectorXd::Zero(n), cfg);
  CHECK(m.beta[0] == doctest::Approx(2.5).epsilon(1e-3));
  CHECK(m.b == doctest::Approx(-1.0).epsilon(1e-3));
}

TEST_CASE("a tube wider than the spread gives the flat mid-range solution") {
  Eigen::MatrixXd X(4, 1);
  X << 1, 2, 3, 4;
  Eigen::VectorXd y(4);
  y << 1.0, 3.0, 2.0, 1.5;
  SvmConfig cfg;
  cfg.C = 1.0;
  cfg.epsilon = 2.5;  // > max |y - mean(y)|
  cfg.tolerance = 1e-10;
  const LinearModel m = fit_weighted_svr(X, y, Eigen::VectorXd::Zero(4), cfg);
  CHECK(m.beta.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(m.b == doctest::Approx(2.0).epsilon(1e-9));  // (max + min) / 2
  CHECK(weighted_svr_objective(X, y, Eigen::VectorXd::Zero(4), cfg, m.beta, m.b) ==
        doctest::Approx(0.0));
}

TEST_CASE("weighted SVR matches the generic convex oracle") {
  for (uint64_t seed : {41, 42}) {
    const Instance in = random_regression(20, 2, seed);
    SvmConfig cfg;
    cfg.C = 0.5;
    cfg.epsilon = 0.1;
    cfg.tolerance = 1e-9;
    const LinearModel m = fit_weighted_svr(in.X, in.y, in.w, cfg);
    const double obj = weighted_svr_objective(in.X, in.y, in.w, cfg, m.beta, m.b);
    const double oracle = oracles::svr_objective_oracle(in.X, in.y, in.w, cfg);
    CHECK(obj == doctest::Approx(oracle).epsilon(1e-3));
  }
}

TEST_CASE("SVM/SVR objective traces are monotone non-increasing") {
  const Instance cls = random_classification(60, 3, 77);
  SvmConfig cfg;
  const LinearModel m1 = fit_weighted_svm(cls.X, cls.y, cls.w, cfg);
  for (size_t i = 1; i < m1.objective_trace.size(); ++i) {
    CHECK(m1.objective_trace[i] <= m1.objective_trace[i - 1] + 1e-10);
  }
  const Instance reg = random_regression(60, 3, 78);
  const LinearModel m2 = fit_weighted_svr(reg.X, reg.y, reg.w, cfg);
  for (size_t i = 1; i < m2.objective_trace.size(); ++i) {
    CHECK(m2.objective_trace[i] <= m2.objective_trace[i - 1] + 1e-10);
  }
}

TEST_CASE("row permutation leaves fits unchanged") {
  const Instance in = random_regression(40, 3, 91);
  std::vector<int> perm(40);
  for (int i = 0; i < 40; ++i) perm[static_cast<size_t>(i)] = (i * 17 + 5) % 40;
  Eigen::MatrixXd Xp(40, 3);
  Eigen::VectorXd yp(40), wp(40);
  for (int i = 0; i < 40; ++i) {
    Xp.row(i) = in.X.row(perm[static_cast<size_t>(i)]);
    yp[i] = in.y[perm[static_cast<size_t>(i)]];
    wp[i] = in.w[perm[static_cast<size_t>(i)]];
  }
  const LinearModel a = fit_linear_baseline(in.X, in.y, ModelKind::ols, 0.0);
  const LinearModel b = fit_linear_baseline(Xp, yp, ModelKind::ols, 0.0);
  CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() < 1e-9);

  SvmConfig cfg;
  cfg.tolerance = 1e-12;
  const LinearModel sa = fit_weighted_svr(in.X, in.y, in.w, cfg);
  const LinearModel sb = fit_weighted_svr(Xp, yp, wp, cfg);
  CHECK((sa.beta - sb.beta).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(std::abs(sa.b - sb.b) < 1e-9);
}

TEST_CASE("DWR with lambda2 = 0 reduces to uniform-weight OLS exactly") {
  const Instance in = random_regression(50, 3, 101);
  const DwrResult dwr = fit_dwr(in.X, in.y, 0.0);
  const LinearModel ols = fit_linear_baseline(in.X, in.y, ModelKind::ols, 0.0);
  CHECK((dwr.model.beta - ols.beta).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(dwr.weights.w.isApproxToConstant(1.0 / 50.0));
}

TEST_CASE("DWR tracks OLS on already-uncorrelated covariates") {
  const Instance in = random_regression(2000, 4, 111);
  const DwrResult dwr = fit_dwr(in.X, in.y, 600.0);
  const LinearModel ols = fit_linear_baseline(in.X, in.y, ModelKind::ols, 0.0);
  CHECK((dwr.model.beta - ols.beta).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("DWR balance gradient matches finite differences") {
  Rng rng(121);
  const int n = 30, p = 3;
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
    w[i] = rng.uniform01() * 0.4 + 0.1;
  }
  Eigen::VectorXd grad;
  dwr_balance_with_gradient(X, w, grad);
  const Eigen::VectorXd fd = oracles::finite_difference_gradient(
      [&](const Eigen::VectorXd& ww) { return dwr_balance_penalty(X, ww); }, w);
  CHECK((grad - fd).norm() / std::max(1e-12, fd.norm()) < 1e-5);
}

TEST_CASE("predict applies the affine map and classifies by sign") {
  LinearModel m;
  m.beta = Eigen::VectorXd::Zero(2);
  m.b = 0.7;
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(5, 2);
  const Eigen::VectorXd pred = predict(m, X);
  for (int i = 0; i < 5; ++i) CHECK(pred[i] == doctest::Approx(0.7));
  const Eigen::VectorXd cls = predict_class(m, X);
  for (int i = 0; i < 5; ++i) CHECK(cls[i] == 1.0);

  m.beta.resize(2);
  m.beta << 3.0, -1.0;
  m.b = 0.5;
  Eigen::MatrixXd row(1, 2);
  row << 1.0, 2.0;
  CHECK(predict(m, row)[0] == doctest::Approx(1.5));

  Eigen::MatrixXd wrong(1, 3);
  CHECK_THROWS_AS(predict(m, wrong), DimensionMismatch);
}

TEST_CASE("prediction composed with an exact fit reproduces y") {
  const Instance in = random_regression(30, 3, 131);
  const Eigen::VectorXd clean = in.X * Eigen::Vector3d(1.0, -2.0, 0.5);
  const LinearModel m = fit_linear_baseline(in.X, clean, ModelKind::ols, 0.0);
  CHECK((predict(m, in.X) - clean).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("model JSON round trip") {
  LinearModel m;
  m.kind = ModelKind::wsvr;
  m.beta.resize(3);
  m.beta << 0.25, -1.5, 3.0;
  m.b = -0.125;
  const std::string text = model_to_json(m, "{\"seed\":7}");
  const LinearModel back = model_from_json(text);
  CHECK(back.kind == ModelKind::wsvr);
  CHECK((back.beta - m.beta).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.b == m.b);
}
