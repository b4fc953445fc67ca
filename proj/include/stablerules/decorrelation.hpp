#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "stablerules/types.hpp"

namespace stablerules {

// Weighted polynomial fit of one ordered feature pair. coeffs[d] is the
// coefficient on x^d, so coeffs[0] is the constant term and the nonconstant
// tail carries the dependence that decorrelation drives to zero.
struct PolyFit {
  Eigen::VectorXd coeffs;
  int source = -1;
  int target = -1;
  int degree = 1;
};

struct DecorConfig {
  int degree = 2;
  double gamma = 600.0;
  double lambda5 = 5e-4;  // on ||W||^2
  double lambda6 = 5e-4;  // on (sum W - 1)^2
  int max_iters = 2000;
  double step_size = 1e-2;
  double tolerance = 1e-8;  // relative objective change
  // scale-invariant floor on the effective sample size (sum W)^2 / ||W||^2,
  // as a fraction of n; the workable form of the norm cap on W. 0 disables.
  double ess_fraction = 0.5;
};

void check_decor_config(const DecorConfig& cfg);

// Minimizes sum_i w_i * (x_tgt_i - sum_d c_d x_src_i^d)^2 via normal
// equations with 1e-10 ridge jitter. Throws RankDeficient when the jittered
// moment matrix is still numerically singular.
PolyFit weighted_poly_fit(const Eigen::VectorXd& x_src, const Eigen::VectorXd& x_tgt,
                          const Eigen::VectorXd& w, int degree);

// Sum over ordered column pairs (p1 != p2) of the squared nonconstant
// coefficients of weighted_poly_fit(X_col(p2) -> X_col(p1)).
double decor_penalty(const Eigen::MatrixXd& X, const Eigen::VectorXd& w, int degree);

// Same value plus its analytic gradient in w, obtained by differentiating
// through the normal-equation solve.
double decor_penalty_with_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& w,
                                   int degree, Eigen::VectorXd& grad);

struct LearnWeightsResult {
  SampleWeights weights;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  bool rescaled = false;  // true if a final sum-rescue rescale was applied
  std::vector<double> objective_trace;  // per accepted step, non-increasing
};

// Projected gradient descent on
//   L(W) = gamma * decor_penalty(X, W, k) + lambda5 ||W||^2 + lambda6 (sum W - 1)^2
// over W >= 0, starting from uniform 1/n.
LearnWeightsResult learn_weights(const Eigen::MatrixXd& X, const DecorConfig& cfg);

}  // namespace stablerules
