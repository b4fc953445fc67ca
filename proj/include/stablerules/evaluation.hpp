#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stablerules/decorrelation.hpp"
#include "stablerules/models.hpp"
#include "stablerules/synthesis.hpp"
#include "stablerules/types.hpp"

namespace stablerules {

struct BetaErrors {
  double beta_s_err = 0.0;
  double beta_v_err = 0.0;
  double beta_err = 0.0;  // always (beta_s_err + beta_v_err) / 2
};

BetaErrors beta_errors(const Eigen::VectorXd& est, const Eigen::VectorXd& beta_true,
                       const SplitSpec& split);

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& y);

struct ClassificationMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false;  // some ratio had a zero denominator, reported as 0
};

ClassificationMetrics classification_metrics(const Eigen::VectorXd& pred,
                                             const Eigen::VectorXd& y);

// Pearson correlation; 0 when either side is constant.
double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Spearman rank correlation with average ranks on ties.
double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

enum class ProfilePanel { linear, square, cube, expo };

// Pearson correlations between weighted columns w_i*V_ij and the identity /
// square / cube / exp transforms of other weighted columns. W is scaled to
// mean 1 first so uniform weights reproduce the unweighted profile.
struct CorrelationProfile {
  Eigen::MatrixXd linear, square, cube, expo;  // p x p, diagonal zero
  bool had_constant = false;

  double mean_abs(ProfilePanel panel) const;
};

CorrelationProfile correlation_profile(const Eigen::MatrixXd& V, const Eigen::VectorXd& w);

// ---------------------------------------------------------------------------
// Experiment grid

enum class Method { ols, lasso, ridge, svm, dwr, dwr_svm, our };

std::string method_name(Method m);
Method method_from_name(const std::string& name);
std::vector<Method> all_methods();

struct ExperimentConfig {
  std::vector<Method> methods = all_methods();
  std::vector<std::pair<int, int>> sizes = {{1000, 10}};  // (n, p) cells
  std::vector<EnvKind> envs = {EnvKind::nonlinear};
  int repeats = 50;
  uint64_t base_seed = 1;
  int jobs = 1;
  double noise_std = 0.3;
  double stable_split = 0.4;
  DecorConfig decor;
  SvmConfig svm;
  double lasso_lambda = 0.1;
  double ridge_lambda = 0.1;
  double dwr_lambda2 = 600.0;
  // training environment selection bias; 0 disables the shift
  double train_r = 2.0;
  bool test_rmse = true;
  std::vector<double> r_grid = {-3.0, -2.0, -1.5, 1.5, 2.0, 3.0};
  double bias_fraction = 0.2;
  int test_pool_factor = 10;
};

struct MethodCellStats {
  Method method = Method::ols;
  std::vector<double> beta_s, beta_v, beta_e;       // per successful repeat
  std::vector<std::vector<double>> rmse_per_r;      // [r index][repeat]
  std::vector<std::string> errors;

  double mean(const std::vector<double>& v) const;
  double stddev(const std::vector<double>& v) const;
};

struct CellReport {
  int n = 0;
  int p = 0;
  EnvKind env = EnvKind::nonlinear;
  std::vector<MethodCellStats> methods;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<CellReport> cells;
  double wall_time_seconds = 0.0;  // in memory only; kept out of emitted files
};

ExperimentReport run_experiment(const ExperimentConfig& cfg);

void write_report_csv(const std::string& path, const ExperimentReport& report);
void write_rsweep_csv(const std::string& path, const ExperimentReport& report);
std::string report_to_json(const ExperimentReport& report);
std::string experiment_config_to_json(const ExperimentConfig& cfg);

}  // namespace stablerules
