#include "stablerules/decorrelation.hpp"

#include <cmath>

namespace stablerules {

namespace {

constexpr double kJitter = 1e-10;
constexpr double kPivotRatioLimit = 1e-12;  // ~ condition number 1e12

void check_weights_vector(const Eigen::VectorXd& w, Eigen::Index n) {
  if (w.size() != n) throw DimensionMismatch("poly fit: weight length mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(w[i]) || w[i] < 0.0) {
      throw InvalidValue("poly fit: weights must be finite and nonnegative");
    }
  }
}

// Powers x^0 .. x^max_power, one column per power.
Eigen::MatrixXd power_table(const Eigen::VectorXd& x, int max_power) {
  Eigen::MatrixXd pow(x.size(), max_power + 1);
  pow.col(0).setOnes();
  for (int d = 1; d <= max_power; ++d) {
    pow.col(d) = pow.col(d - 1).cwiseProduct(x);
  }
  return pow;
}

// Moment matrix M(a,b) = sum_i w_i x_i^(a+b) + jitter on the diagonal,
// factored once per source column. Throws when still numerically singular.
Eigen::LDLT<Eigen::MatrixXd> factor_moments(const Eigen::MatrixXd& pow,
                                            const Eigen::VectorXd& w, int k) {
  const Eigen::VectorXd mom = pow.transpose() * w;  // length 2k+1
  Eigen::MatrixXd M(k + 1, k + 1);
  for (int a = 0; a <= k; ++a) {
    for (int b = 0; b <= k; ++b) M(a, b) = mom[a + b];
  }
  M.diagonal().array() += kJitter;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  const Eigen::VectorXd d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  const double dmin = d.cwiseAbs().minCoeff();
  if (!(dmax > 0.0) || dmin / dmax < kPivotRatioLimit || ldlt.info() != Eigen::Success) {
    throw RankDeficient("poly fit: moment matrix numerically singular after jitter");
  }
  return ldlt;
}

// Shared state for repeated penalty/gradient evaluations on a fixed X.
struct DecorWorkspace {
  const Eigen::MatrixXd& X;
  int k;
  std::vector<Eigen::MatrixXd> pow;  // per column, n x (2k+1)

  DecorWorkspace(const Eigen::MatrixXd& X_, int k_) : X(X_), k(k_) {
    pow.reserve(X.cols());
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      pow.push_back(power_table(X.col(c), 2 * k));
    }
  }

  double eval(const Eigen::VectorXd& w, Eigen::VectorXd* grad) const {
    const Eigen::Index p = X.cols();
    double penalty = 0.0;
    if (grad) grad->setZero(X.rows());
    const Eigen::MatrixXd WX = X.array().colwise() * w.array();
    for (Eigen::Index src = 0; src < p; ++src) {
      const auto ldlt = factor_moments(pow[src], w, k);
      const auto A = pow[src].leftCols(k + 1);
      // right-hand sides and solutions for every target at once
      Eigen::MatrixXd V = A.transpose() * WX;        // (k+1) x p
      V.col(src).setZero();
      const Eigen::MatrixXd C = ldlt.solve(V);        // coefficient per target
      penalty += C.bottomRows(k).squaredNorm();
      if (grad) {
        Eigen::MatrixXd PC = C;
        PC.row(0).setZero();
        const Eigen::MatrixXd G = ldlt.solve(PC);     // (k+1) x p
        Eigen::MatrixXd resid = X - A * C;            // n x p
        resid.col(src).setZero();
        const Eigen::MatrixXd AG = A * G;             // n x p
        *grad += 2.0 * (AG.array() * resid.array()).rowwise().sum().matrix();
      }
    }
    return penalty;
  }
};

}  // namespace

void check_decor_config(const DecorConfig& cfg) {
  if (cfg.degree < 1) throw InvalidValue("decor: degree must be >= 1");
  if (cfg.gamma < 0 || cfg.lambda5 < 0 || cfg.lambda6 < 0) {
    throw InvalidValue("decor: penalty multipliers must be >= 0");
  }
  if (cfg.max_iters < 1) throw InvalidValue("decor: max_iters must be >= 1");
  if (!(cfg.step_size > 0)) throw InvalidValue("decor: step_size must be > 0");
  if (!(cfg.tolerance >= 0)) throw InvalidValue("decor: tolerance must be >= 0");
  if (cfg.ess_fraction < 0 || cfg.ess_fraction > 1) {
    throw InvalidValue("decor: ess_fraction must lie in [0, 1]");
  }
}

PolyFit weighted_poly_fit(const Eigen::VectorXd& x_src, const Eigen::VectorXd& x_tgt,
                          const Eigen::VectorXd& w, int degree) {
  if (degree < 1) throw InvalidValue("poly fit: degree must be >= 1");
  if (x_src.size() != x_tgt.size()) throw DimensionMismatch("poly fit: x_src/x_tgt length mismatch");
  if (x_src.size() < degree + 1) {
    throw DimensionMismatch("poly fit: need at least degree+1 points");
  }
  check_weights_vector(w, x_src.size());
  const Eigen::MatrixXd pow = power_table(x_src, 2 * degree);
  const auto ldlt = factor_moments(pow, w, degree);
  const auto A = pow.leftCols(degree + 1);
  const Eigen::VectorXd v = A.transpose() * w.cwiseProduct(x_tgt);
  PolyFit fit;
  fit.coeffs = ldlt.solve(v);
  fit.degree = degree;
  return fit;
}

double decor_penalty(const Eigen::MatrixXd& X, const Eigen::VectorXd& w, int degree) {
  if (X.cols() < 2) throw DimensionMismatch("decor: need p >= 2");
  if (degree < 1) throw InvalidValue("decor: degree must be >= 1");
  check_weights_vector(w, X.rows());
  return DecorWorkspace(X, degree).eval(w, nullptr);
}

double decor_penalty_with_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& w,
                                   int degree, Eigen::VectorXd& grad) {
  if (X.cols() < 2) throw DimensionMismatch("decor: need p >= 2");
  if (degree < 1) throw InvalidValue("decor: degree must be >= 1");
  check_weights_vector(w, X.rows());
  return DecorWorkspace(X, degree).eval(w, &grad);
}

LearnWeightsResult learn_weights(const Eigen::MatrixXd& X, const DecorConfig& cfg) {
  check_decor_config(cfg);
  const Eigen::Index n = X.rows();
  if (X.cols() < 2) throw DimensionMismatch("decor: need p >= 2");
  if (n <= cfg.degree + 1) throw DimensionMismatch("decor: need n > degree+1");

  DecorWorkspace ws(X, cfg.degree);
  auto objective = [&](const Eigen::VectorXd& w, Eigen::VectorXd* grad) {
    double obj = 0.0;
    if (cfg.gamma > 0.0) {
      obj = cfg.gamma * ws.eval(w, grad);
      if (grad) *grad *= cfg.gamma;
    } else if (grad) {
      grad->setZero(n);
    }
    const double dsum = w.sum() - 1.0;
    obj += cfg.lambda5 * w.squaredNorm() + cfg.lambda6 * dsum * dsum;
    if (grad) {
      *grad += 2.0 * cfg.lambda5 * w;
      grad->array() += 2.0 * cfg.lambda6 * dsum;
    }
    return obj;
  };

  // project onto nonnegativity and, when configured, retract toward uniform
  // until the effective sample size (sum w)^2/||w||^2 meets its floor
  auto project = [&](Eigen::VectorXd v) {
    v = v.cwiseMax(0.0);
    if (cfg.ess_fraction > 0.0) {
      const double s = v.sum();
      const double sq = v.squaredNorm();
      const double ess_floor = cfg.ess_fraction * static_cast<double>(n);
      if (s > 0.0 && sq * ess_floor > s * s) {
        const double uniform_sq = s * s / static_cast<double>(n);
        const double ratio = (s * s / ess_floor - uniform_sq) / (sq - uniform_sq);
        const double t = 1.0 - std::sqrt(std::max(0.0, ratio));
        v = (1.0 - t) * v + Eigen::VectorXd::Constant(n, t * s / static_cast<double>(n));
      }
    }
    return v;
  };

  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd grad(n);
  double obj = objective(w, &grad);
  const double obj_init = obj;

  LearnWeightsResult result;
  result.objective_trace.push_back(obj);
  double eta = cfg.step_size;
  const double armijo = 1e-4;
  int iter = 0;
  int quiet_steps = 0;  // consecutive steps below tolerance; guards against a
                        // single under-sized backtracking step ending the run
  for (; iter < cfg.max_iters; ++iter) {
    bool accepted = false;
    Eigen::VectorXd w_next;
    double obj_next = obj;
    while (eta > 1e-18) {
      w_next = project(w - eta * grad);
      const double step_sq = (w_next - w).squaredNorm();
      if (step_sq == 0.0) break;  // projected fixpoint at this step size
      obj_next = objective(w_next, nullptr);
      if (obj_next <= obj - (armijo / eta) * step_sq) {
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) {
      result.converged = true;  // no admissible descent step remains
      break;
    }
    const double rel_change = std::abs(obj - obj_next) / std::max(std::abs(obj), 1e-30);
    w = w_next;
    obj = objective(w, &grad);
    result.objective_trace.push_back(obj);
    eta *= 2.0;
    quiet_steps = rel_change < cfg.tolerance ? quiet_steps + 1 : 0;
    if (quiet_steps >= 5) {
      ++iter;
      result.converged = true;
      break;
    }
  }
  result.iterations = iter;

  // Soft-penalty drift rescue: keep the sum inside the container tolerance.
  const double sum = w.sum();
  if (sum > 0.0 && (sum < 0.95 || sum > 1.05)) {
    Eigen::VectorXd w_scaled = w / sum;
    const double obj_scaled = objective(w_scaled, nullptr);
    if (obj_scaled <= obj_init) {
      w = w_scaled;
      obj = obj_scaled;
      result.rescaled = true;
    }
  }

  result.weights.w = std::move(w);
  result.objective = obj;
  return result;
}

}  // namespace stablerules
