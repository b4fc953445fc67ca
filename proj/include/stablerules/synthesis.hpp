#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "stablerules/types.hpp"

namespace stablerules {

enum class EnvKind { linear, nonlinear };

struct EnvSpec {
  EnvKind kind = EnvKind::nonlinear;
  int n = 1000;
  int p_total = 10;
  int p_s = 4;
  int p_v = 6;
  uint64_t seed = 0;
  double noise_std = 0.3;
};

// p_s = round(split * p_total), at least 2 so the interaction term exists.
EnvSpec make_env_spec(EnvKind kind, int n, int p_total, uint64_t seed,
                      double noise_std = 0.3, double stable_split = 0.4);

struct Covariates {
  Eigen::MatrixXd S;
  Eigen::MatrixXd V;
};

// Stable block S from auxiliary Z and unstable block V from auxiliary X,
// linear or nonlinear mixing. Column index i+1 wraps cyclically.
Covariates gen_covariates(const EnvSpec& spec);

// Cyclic coefficient pattern {1/3, -2/3, 1, -1/3, 2/3, -1, ...} truncated or
// repeated to p_s entries.
Eigen::VectorXd stable_beta(int p_s);

// S*beta_s + S_1.*S_2, the noise-free part of the outcome.
Eigen::VectorXd noise_free_label(const Eigen::MatrixXd& S);

LabelVector gen_labels(const Eigen::MatrixXd& S, const Eigen::MatrixXd& V,
                       double noise_std, uint64_t seed);

struct BiasSpec {
  double r = 2.0;            // |r| in (1, 3]
  double b_fraction = 0.2;   // biased dims = round(b_fraction * p_total)
};

void check_bias_spec(const BiasSpec& spec);

int bias_dim_count(const BiasSpec& spec, int p_total, int p_v);

// Per-row acceptance probability prod_i |r|^(-5*D_i) with
// D_i = |f(S) - sign(r)*V_i| over the first bias_dim_count unstable columns.
Eigen::VectorXd bias_acceptance_probs(const Eigen::MatrixXd& S,
                                      const Eigen::MatrixXd& V,
                                      const BiasSpec& spec, int p_total);

// Independent Bernoulli thinning with the acceptance probabilities above.
// With normalize=true the probabilities are divided by their maximum first,
// which leaves the survivor distribution unchanged but keeps the survivor
// count usable at strong |r| where the raw probabilities underflow.
std::vector<int> bias_sample(const Eigen::MatrixXd& S, const Eigen::MatrixXd& V,
                             const BiasSpec& spec, int p_total, uint64_t seed,
                             bool normalize = false);

// Without-replacement subsample of up to k rows with inclusion odds
// proportional to the acceptance probabilities (Efraimidis-Spirakis keys,
// double-log scale so extreme |r| cannot overflow). This is how the
// experiment pipeline realizes a shifted environment of a usable size.
std::vector<int> bias_subsample(const Eigen::MatrixXd& S, const Eigen::MatrixXd& V,
                                const BiasSpec& spec, int p_total, int k, uint64_t seed);

// CSV export with header S_0..S_{ps-1}, V_0..V_{pv-1}, Y plus a JSON sidecar
// holding the generating spec.
void write_synth_csv(const std::string& path, const Eigen::MatrixXd& S,
                     const Eigen::MatrixXd& V, const Eigen::VectorXd& y);

std::string env_kind_name(EnvKind kind);
EnvKind env_kind_from_name(const std::string& name);

}  // namespace stablerules
