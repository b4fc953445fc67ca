#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "stablerules/types.hpp"

namespace stablerules {

enum class ModelKind { ols, ridge, lasso, dwr, svm, wsvm, svr, wsvr };

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

struct LinearModel {
  Eigen::VectorXd beta;
  double b = 0.0;
  ModelKind kind = ModelKind::ols;
  bool converged = true;
  int iterations = 0;
  // best-so-far objective recorded per epoch/sweep; non-increasing
  std::vector<double> objective_trace;
};

struct SvmConfig {
  double C = 0.5;          // uniform margin-cost floor added to each sample weight
  double epsilon = 0.1;    // SVR tube half-width
  int max_iters = 1000000; // pair updates
  double tolerance = 1e-6; // KKT gap
};

void check_svm_config(const SvmConfig& cfg);

// OLS / ridge via normal equations (intercept unregularized), lasso via
// coordinate descent with soft thresholding.
LinearModel fit_linear_baseline(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                ModelKind method, double lambda);

struct DwrConfig {
  int w_max_iters = 500;
  double w_step = 1e-2;
  double w_tolerance = 1e-9;
  int outer_iters = 2;
};

struct DwrResult {
  LinearModel model;
  SampleWeights weights;
  bool converged = true;
};

// Linear-only reweighting baseline: W minimizes the weighted-covariance
// balance penalty (projected gradient over the simplex), beta is then the
// W-weighted least squares fit.
DwrResult fit_dwr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda2,
                  const DwrConfig& cfg = DwrConfig());

// The balance penalty DWR minimizes; exposed for tests and profiling.
double dwr_balance_penalty(const Eigen::MatrixXd& X, const Eigen::VectorXd& w);
double dwr_balance_with_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& w,
                                 Eigen::VectorXd& grad);

// min  0.5 beta'beta + sum_i (w_i + C) max(0, 1 - y_i (beta'x_i + b))
// solved in the dual by SMO-style pair updates (linear kernel).
LinearModel fit_weighted_svm(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& w, const SvmConfig& cfg);

// min  0.5 beta'beta + sum_i (C + w_i) max(0, |y_i - beta'x_i - b| - epsilon)
LinearModel fit_weighted_svr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& w, const SvmConfig& cfg);

double weighted_svm_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& w, const SvmConfig& cfg,
                              const Eigen::VectorXd& beta, double b);
double weighted_svr_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& w, const SvmConfig& cfg,
                              const Eigen::VectorXd& beta, double b);

Eigen::VectorXd predict(const LinearModel& model, const Eigen::MatrixXd& X);
// sign thresholding at 0 (0 maps to +1)
Eigen::VectorXd predict_class(const LinearModel& model, const Eigen::MatrixXd& X);

std::string model_to_json(const LinearModel& model, const std::string& meta_json = "{}");
LinearModel model_from_json(const std::string& text);

}  // namespace stablerules
