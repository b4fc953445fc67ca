#include "stablerules/models.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <nlohmann/json.hpp>

namespace stablerules {

using json = nlohmann::json;

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::ols: return "ols";
    case ModelKind::ridge: return "ridge";
    case ModelKind::lasso: return "lasso";
    case ModelKind::dwr: return "dwr";
    case ModelKind::svm: return "svm";
    case ModelKind::wsvm: return "wsvm";
    case ModelKind::svr: return "svr";
    case ModelKind::wsvr: return "wsvr";
  }
  return "ols";
}

ModelKind model_kind_from_name(const std::string& name) {
  for (ModelKind k : {ModelKind::ols, ModelKind::ridge, ModelKind::lasso, ModelKind::dwr,
                      ModelKind::svm, ModelKind::wsvm, ModelKind::svr, ModelKind::wsvr}) {
    if (model_kind_name(k) == name) return k;
  }
  throw InvalidValue("model: unknown kind '" + name + "'");
}

void check_svm_config(const SvmConfig& cfg) {
  if (cfg.C < 0) throw InvalidValue("svm: C must be >= 0");
  if (cfg.epsilon < 0) throw InvalidValue("svm: epsilon must be >= 0");
  if (cfg.max_iters < 1) throw InvalidValue("svm: max_iters must be >= 1");
  if (!(cfg.tolerance > 0)) throw InvalidValue("svm: tolerance must be > 0");
}

namespace {

// Solve (G' diag(W) G + reg) beta = G' W y with G = [X 1]; reg applies only to
// the X block. Used by OLS, ridge and the DWR beta step.
Eigen::VectorXd solve_wls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& w, double ridge_lambda,
                          const char* who) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  Eigen::MatrixXd G(n, p + 1);
  G.leftCols(p) = X;
  G.col(p).setOnes();
  Eigen::MatrixXd N = G.transpose() * (w.asDiagonal() * G);
  for (Eigen::Index j = 0; j < p; ++j) N(j, j) += ridge_lambda;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(N);
  const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
  if (ldlt.info() != Eigen::Success || !(d.maxCoeff() > 0.0) ||
      d.minCoeff() / d.maxCoeff() < 1e-12) {
    throw Singular(std::string(who) +
                   ": design is rank deficient; a ridge penalty makes this solvable");
  }
  return ldlt.solve(G.transpose() * w.cwiseProduct(y));
}

}  // namespace

LinearModel fit_linear_baseline(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                ModelKind method, double lambda) {
  if (X.rows() != y.size()) throw DimensionMismatch("baseline: X/y row mismatch");
  if (X.rows() < 1) throw DimensionMismatch("baseline: empty input");
  if (lambda < 0) throw InvalidValue("baseline: lambda must be >= 0");
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);

  LinearModel model;
  model.kind = method;
  if (method == ModelKind::ols || method == ModelKind::ridge) {
    const double reg = method == ModelKind::ols ? 0.0 : lambda;
    Eigen::VectorXd coef = solve_wls(X, y, ones, reg, method == ModelKind::ols ? "ols" : "ridge");
    model.beta = coef.head(p);
    model.b = coef[p];
    const double obj = (y - X * model.beta - model.b * ones).squaredNorm() +
                       reg * model.beta.squaredNorm();
    model.objective_trace.push_back(obj);
    model.iterations = 1;
    return model;
  }
  if (method != ModelKind::lasso) throw InvalidValue("baseline: expected ols/ridge/lasso");

  // lasso: || y - X beta - b ||^2 + lambda ||beta||_1, coordinate descent
  model.beta = Eigen::VectorXd::Zero(p);
  model.b = y.mean();
  Eigen::VectorXd resid = y.array() - model.b;
  Eigen::VectorXd col_sq(p);
  for (Eigen::Index j = 0; j < p; ++j) col_sq[j] = X.col(j).squaredNorm();
  const int max_sweeps = 100000;
  model.converged = false;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_change = 0.0;
    const double db = resid.mean();
    model.b += db;
    resid.array() -= db;
    max_change = std::abs(db);
    for (Eigen::Index j = 0; j < p; ++j) {
      if (col_sq[j] == 0.0) continue;
      const double z = X.col(j).dot(resid) + col_sq[j] * model.beta[j];
      const double thr = lambda / 2.0;
      double bj = 0.0;
      if (z > thr) bj = (z - thr) / col_sq[j];
      else if (z < -thr) bj = (z + thr) / col_sq[j];
      const double delta = bj - model.beta[j];
      if (delta != 0.0) {
        resid -= delta * X.col(j);
        model.beta[j] = bj;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    model.objective_trace.push_back(resid.squaredNorm() +
                                    lambda * model.beta.lpNorm<1>());
    model.iterations = sweep + 1;
    if (max_change < 1e-7) {
      model.converged = true;
      break;
    }
  }
  return model;
}

double dwr_balance_penalty(const Eigen::MatrixXd& X, const Eigen::VectorXd& w) {
  const double n = static_cast<double>(X.rows());
  const Eigen::MatrixXd WX = X.array().colwise() * w.array();
  const Eigen::MatrixXd U = X.transpose() * WX / n;  // U(a,j) = sum_i X_ia W_i X_ij / n
  const Eigen::VectorXd m = X.transpose() * w / n;
  Eigen::MatrixXd T = U - m * m.transpose();
  T.diagonal().setZero();
  return T.squaredNorm();
}

double dwr_balance_with_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& w,
                                 Eigen::VectorXd& grad) {
  const double n = static_cast<double>(X.rows());
  const Eigen::MatrixXd WX = X.array().colwise() * w.array();
  const Eigen::MatrixXd U = X.transpose() * WX / n;
  const Eigen::VectorXd m = X.transpose() * w / n;
  Eigen::MatrixXd T = U - m * m.transpose();
  T.diagonal().setZero();

  // dJ/dW_i = (2/n) * (x_i' T x_i - x_i' (T'm) - x_i' (T m))
  const Eigen::MatrixXd XT = X * T;
  const Eigen::VectorXd quad = (X.array() * XT.array()).rowwise().sum();
  const Eigen::VectorXd lin = X * (T.transpose() * m + T * m);
  grad = (2.0 / n) * (quad - lin);
  return T.squaredNorm();
}

namespace {

// Euclidean projection onto { w >= 0, sum w = 1 }.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0;
  double theta = 0.0;
  int rho = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    css += u[k];
    const double t = (css - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) {
      rho = static_cast<int>(k + 1);
      theta = t;
    }
  }
  (void)rho;
  return (v.array() - theta).cwiseMax(0.0);
}

}  // namespace

DwrResult fit_dwr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda2,
                  const DwrConfig& cfg) {
  if (X.cols() < 2) throw DimensionMismatch("dwr: need p >= 2");
  if (X.rows() != y.size()) throw DimensionMismatch("dwr: X/y row mismatch");
  if (lambda2 < 0) throw InvalidValue("dwr: lambda2 must be >= 0");
  const Eigen::Index n = X.rows();

  DwrResult result;
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));

  if (lambda2 > 0.0) {
    Eigen::VectorXd grad(n);
    double obj = lambda2 * dwr_balance_with_gradient(X, w, grad);
    grad *= lambda2;
    double eta = cfg.w_step;
    bool converged = false;
    for (int iter = 0; iter < cfg.w_max_iters; ++iter) {
      bool accepted = false;
      Eigen::VectorXd w_next;
      double obj_next = obj;
      while (eta > 1e-18) {
        w_next = project_simplex(w - eta * grad);
        const double step_sq = (w_next - w).squaredNorm();
        if (step_sq == 0.0) break;
        obj_next = lambda2 * dwr_balance_penalty(X, w_next);
        if (obj_next <= obj - (1e-4 / eta) * step_sq) {
          accepted = true;
          break;
        }
        eta *= 0.5;
      }
      if (!accepted) {
        converged = true;
        break;
      }
      const double rel = std::abs(obj - obj_next) / std::max(1.0, std::abs(obj));
      w = w_next;
      obj = lambda2 * dwr_balance_with_gradient(X, w, grad);
      grad *= lambda2;
      eta *= 2.0;
      if (rel < cfg.w_tolerance) {
        converged = true;
        break;
      }
    }
    result.converged = converged;
  }

  // beta step: W-weighted least squares. The balance objective does not
  // depend on beta, so extra outer passes would not move W again.
  Eigen::VectorXd coef = solve_wls(X, y, w, 0.0, "dwr");
  result.model.kind = ModelKind::dwr;
  result.model.beta = coef.head(X.cols());
  result.model.b = coef[X.cols()];
  result.model.converged = result.converged;
  result.weights.w = std::move(w);
  return result;
}

// ---------------------------------------------------------------------------
// SMO solver for the box/equality QP shared by weighted SVM and SVR:
//   min 0.5 l'Ql + p'l   s.t.  y'l = 0,  0 <= l_t <= C_t
// with Q_st = y_s y_t x(s)'x(t) for a linear kernel. Rows are addressed
// through an index map so SVR can reuse each sample twice.

namespace {

struct SmoProblem {
  const Eigen::MatrixXd& X;    // original rows
  std::vector<int> row;        // variable -> row index
  Eigen::VectorXd y;           // variable signs, +-1
  Eigen::VectorXd lin;         // linear term p
  Eigen::VectorXd cost;        // upper bounds C_t
};

struct SmoResult {
  Eigen::VectorXd lambda;
  Eigen::VectorXd beta;
  double b = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> gap_trace;
};

SmoResult solve_smo(const SmoProblem& prob, double tol, int max_iters,
                    const std::function<double(const Eigen::VectorXd&, double)>& primal_obj,
                    std::vector<double>* objective_trace) {
  const int m = static_cast<int>(prob.row.size());
  const Eigen::Index p = prob.X.cols();

  SmoResult res;
  res.lambda = Eigen::VectorXd::Zero(m);
  res.beta = Eigen::VectorXd::Zero(p);

  Eigen::VectorXd f = Eigen::VectorXd::Zero(m);  // x(t)' beta
  auto grad_at = [&](int t) { return prob.y[t] * f[t] + prob.lin[t]; };

  const int epoch = std::max(m, 1);
  double best_primal = std::numeric_limits<double>::infinity();
  auto record = [&]() {
    if (!objective_trace) return;
    const double obj = primal_obj(res.beta, res.b);
    best_primal = std::min(best_primal, obj);
    objective_trace->push_back(best_primal);
  };

  int iter = 0;
  for (; iter < max_iters; ++iter) {
    // maximal violating pair
    double up_best = -std::numeric_limits<double>::infinity();
    double low_best = std::numeric_limits<double>::infinity();
    int i = -1, j = -1;
    for (int t = 0; t < m; ++t) {
      const double v = -prob.y[t] * grad_at(t);
      const bool at_upper = res.lambda[t] >= prob.cost[t];
      const bool at_lower = res.lambda[t] <= 0.0;
      const bool in_up = prob.y[t] > 0 ? !at_upper : !at_lower;
      const bool in_low = prob.y[t] > 0 ? !at_lower : !at_upper;
      if (in_up && v > up_best) { up_best = v; i = t; }
      if (in_low && v < low_best) { low_best = v; j = t; }
    }
    if (i < 0 || j < 0) {
      res.converged = true;
      break;
    }
    const double gap = up_best - low_best;
    res.b = 0.5 * (up_best + low_best);
    if (gap <= tol) {
      res.converged = true;
      break;
    }

    const auto xi = prob.X.row(prob.row[i]);
    const auto xj = prob.X.row(prob.row[j]);
    double H = xi.squaredNorm() + xj.squaredNorm() - 2.0 * xi.dot(xj);
    H = std::max(H, 1e-12);
    double delta = gap / H;
    // box caps for lambda_i += y_i d, lambda_j -= y_j d
    delta = std::min(delta, prob.y[i] > 0 ? prob.cost[i] - res.lambda[i] : res.lambda[i]);
    delta = std::min(delta, prob.y[j] > 0 ? res.lambda[j] : prob.cost[j] - res.lambda[j]);
    if (!(delta > 0.0)) {
      res.converged = true;  // blocked by the box to numerical precision
      break;
    }
    res.lambda[i] += prob.y[i] * delta;
    res.lambda[j] -= prob.y[j] * delta;
    const Eigen::VectorXd dbeta = delta * (xi - xj).transpose();
    res.beta += dbeta;
    for (int t = 0; t < m; ++t) f[t] += prob.X.row(prob.row[t]).dot(dbeta);
    if ((iter + 1) % epoch == 0) record();
  }
  res.iterations = iter;
  if (std::isinf(res.b) || std::isnan(res.b)) res.b = 0.0;
  record();
  return res;
}

}  // namespace

LinearModel fit_weighted_svm(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& w, const SvmConfig& cfg) {
  check_svm_config(cfg);
  const Eigen::Index n = X.rows();
  if (y.size() != n) throw DimensionMismatch("wsvm: X/y row mismatch");
  if (w.size() != n) throw DimensionMismatch("wsvm: X/w row mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[i] != 1.0 && y[i] != -1.0) throw InvalidLabel("wsvm: labels must be -1/+1");
    if (w[i] < 0) throw InvalidValue("wsvm: weights must be >= 0");
  }

  SmoProblem prob{X, {}, {}, {}, {}};
  prob.row.resize(n);
  prob.y = y;
  prob.lin = Eigen::VectorXd::Constant(n, -1.0);
  prob.cost = w.array() + cfg.C;
  for (Eigen::Index t = 0; t < n; ++t) prob.row[t] = static_cast<int>(t);

  LinearModel model;
  model.kind = ModelKind::wsvm;
  auto primal = [&](const Eigen::VectorXd& beta, double b) {
    return weighted_svm_objective(X, y, w, cfg, beta, b);
  };
  SmoResult res = solve_smo(prob, cfg.tolerance, cfg.max_iters, primal,
                            &model.objective_trace);
  model.beta = res.beta;
  model.b = res.b;
  model.converged = res.converged;
  model.iterations = res.iterations;
  return model;
}

LinearModel fit_weighted_svr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& w, const SvmConfig& cfg) {
  check_svm_config(cfg);
  const Eigen::Index n = X.rows();
  if (y.size() != n) throw DimensionMismatch("wsvr: X/y row mismatch");
  if (w.size() != n) throw DimensionMismatch("wsvr: X/w row mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w[i] < 0) throw InvalidValue("wsvr: weights must be >= 0");
  }

  SmoProblem prob{X, {}, {}, {}, {}};
  prob.row.resize(2 * n);
  prob.y.resize(2 * n);
  prob.lin.resize(2 * n);
  prob.cost.resize(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    prob.row[i] = static_cast<int>(i);
    prob.row[n + i] = static_cast<int>(i);
    prob.y[i] = 1.0;
    prob.y[n + i] = -1.0;
    prob.lin[i] = cfg.epsilon - y[i];
    prob.lin[n + i] = cfg.epsilon + y[i];
    prob.cost[i] = cfg.C + w[i];
    prob.cost[n + i] = cfg.C + w[i];
  }

  LinearModel model;
  model.kind = ModelKind::wsvr;
  auto primal = [&](const Eigen::VectorXd& beta, double b) {
    return weighted_svr_objective(X, y, w, cfg, beta, b);
  };
  SmoResult res = solve_smo(prob, cfg.tolerance, cfg.max_iters, primal,
                            &model.objective_trace);
  model.beta = res.beta;
  model.b = res.b;
  model.converged = res.converged;
  model.iterations = res.iterations;
  return model;
}

double weighted_svm_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& w, const SvmConfig& cfg,
                              const Eigen::VectorXd& beta, double b) {
  const Eigen::VectorXd margin = (y.array() * ((X * beta).array() + b)).matrix();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    loss += (w[i] + cfg.C) * std::max(0.0, 1.0 - margin[i]);
  }
  return 0.5 * beta.squaredNorm() + loss;
}

double weighted_svr_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& w, const SvmConfig& cfg,
                              const Eigen::VectorXd& beta, double b) {
  const Eigen::VectorXd pred = (X * beta).array() + b;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    loss += (cfg.C + w[i]) * std::max(0.0, std::abs(y[i] - pred[i]) - cfg.epsilon);
  }
  return 0.5 * beta.squaredNorm() + loss;
}

Eigen::VectorXd predict(const LinearModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.beta.size()) {
    throw DimensionMismatch("predict: model expects " + std::to_string(model.beta.size()) +
                            " features, got " + std::to_string(X.cols()));
  }
  return (X * model.beta).array() + model.b;
}

Eigen::VectorXd predict_class(const LinearModel& model, const Eigen::MatrixXd& X) {
  Eigen::VectorXd scores = predict(model, X);
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    scores[i] = scores[i] >= 0.0 ? 1.0 : -1.0;
  }
  return scores;
}

std::string model_to_json(const LinearModel& model, const std::string& meta_json) {
  json j;
  j["kind"] = model_kind_name(model.kind);
  j["beta"] = std::vector<double>(model.beta.data(), model.beta.data() + model.beta.size());
  j["b"] = model.b;
  j["converged"] = model.converged;
  j["iterations"] = model.iterations;
  j["training_meta"] = json::parse(meta_json);
  return j.dump(2);
}

LinearModel model_from_json(const std::string& text) {
  json j = json::parse(text);
  LinearModel model;
  model.kind = model_kind_from_name(j.at("kind").get<std::string>());
  const auto beta = j.at("beta").get<std::vector<double>>();
  model.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
  model.b = j.at("b").get<double>();
  if (j.contains("converged")) model.converged = j["converged"].get<bool>();
  if (j.contains("iterations")) model.iterations = j["iterations"].get<int>();
  return model;
}

}  // namespace stablerules
