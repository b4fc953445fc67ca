#include "stablerules/synthesis.hpp"

#include <cmath>
#include <fstream>

#include "stablerules/csv.hpp"
#include "stablerules/rng.hpp"

namespace stablerules {

EnvSpec make_env_spec(EnvKind kind, int n, int p_total, uint64_t seed,
                      double noise_std, double stable_split) {
  if (n < 1) throw InvalidValue("env: n must be >= 1");
  if (p_total < 3) throw InvalidValue("env: need p_total >= 3");
  EnvSpec spec;
  spec.kind = kind;
  spec.n = n;
  spec.p_total = p_total;
  spec.p_s = std::max(2, static_cast<int>(std::lround(stable_split * p_total)));
  if (spec.p_s >= p_total) spec.p_s = p_total - 1;
  spec.p_v = p_total - spec.p_s;
  spec.seed = seed;
  spec.noise_std = noise_std;
  return spec;
}

namespace {

Eigen::MatrixXd iid_normal(int n, int p, Rng& rng) {
  Eigen::MatrixXd m(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) m(i, j) = rng.normal();
  }
  return m;
}

// linear: 0.8*A_j + 0.2*A_{j+1}
Eigen::MatrixXd mix_linear(const Eigen::MatrixXd& aux, int p_out, Rng& rng,
                           bool add_noise) {
  const int p_aux = static_cast<int>(aux.cols());
  Eigen::MatrixXd out(aux.rows(), p_out);
  for (int j = 0; j < p_out; ++j) {
    const int jn = (j + 1) % p_aux;
    out.col(j) = 0.8 * aux.col(j) + 0.2 * aux.col(jn);
    if (add_noise) {
      for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) += rng.normal();
    }
  }
  return out;
}

// nonlinear: A_j + 0.4*A_{j+1} + 0.4*exp(A_{j+1}) + 0.4*A_{j+1}^2 + 0.1*A_{j+1}^3 + N(0,1)
Eigen::MatrixXd mix_nonlinear(const Eigen::MatrixXd& aux, int p_out, Rng& rng) {
  const int p_aux = static_cast<int>(aux.cols());
  Eigen::MatrixXd out(aux.rows(), p_out);
  for (int j = 0; j < p_out; ++j) {
    const int jn = (j + 1) % p_aux;
    const auto a = aux.col(j).array();
    const auto b = aux.col(jn).array();
    out.col(j) = a + 0.4 * b + 0.4 * b.exp() + 0.4 * b.square() + 0.1 * b.cube();
    for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) += rng.normal();
  }
  return out;
}

}  // namespace

Covariates gen_covariates(const EnvSpec& spec) {
  Rng rng(mix_seed(spec.seed, 0xC0F));
  Covariates cov;
  // Z feeds S, X feeds V; draw Z fully before X so the stream layout is stable.
  const Eigen::MatrixXd Z = iid_normal(spec.n, spec.p_s, rng);
  const Eigen::MatrixXd X = iid_normal(spec.n, spec.p_v, rng);
  if (spec.kind == EnvKind::linear) {
    cov.S = mix_linear(Z, spec.p_s, rng, false);
    cov.V = mix_linear(X, spec.p_v, rng, true);
  } else {
    cov.S = mix_nonlinear(Z, spec.p_s, rng);
    cov.V = mix_nonlinear(X, spec.p_v, rng);
  }
  return cov;
}

Eigen::VectorXd stable_beta(int p_s) {
  static const double pattern[6] = {1.0 / 3.0, -2.0 / 3.0, 1.0, -1.0 / 3.0, 2.0 / 3.0, -1.0};
  Eigen::VectorXd beta(p_s);
  for (int j = 0; j < p_s; ++j) beta[j] = pattern[j % 6];
  return beta;
}

Eigen::VectorXd noise_free_label(const Eigen::MatrixXd& S) {
  if (S.cols() < 2) {
    throw TooFewStableColumns("labels: need at least 2 stable columns for the interaction term");
  }
  const Eigen::VectorXd beta = stable_beta(static_cast<int>(S.cols()));
  return S * beta + (S.col(0).array() * S.col(1).array()).matrix();
}

LabelVector gen_labels(const Eigen::MatrixXd& S, const Eigen::MatrixXd& V,
                       double noise_std, uint64_t seed) {
  if (V.rows() != S.rows()) throw DimensionMismatch("labels: S/V row mismatch");
  Eigen::VectorXd y = noise_free_label(S);
  Rng rng(mix_seed(seed, 0x1AB));
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += noise_std * rng.normal();
  LabelVector lv;
  lv.values = std::move(y);
  lv.task = LabelTask::real;
  return lv;
}

void check_bias_spec(const BiasSpec& spec) {
  const double a = std::abs(spec.r);
  if (!(a > 1.0) || !(a <= 3.0)) {
    throw InvalidValue("bias: |r| must lie in (1, 3]");
  }
  if (!(spec.b_fraction > 0.0) || spec.b_fraction > 1.0) {
    throw InvalidValue("bias: b_fraction must lie in (0, 1]");
  }
}

int bias_dim_count(const BiasSpec& spec, int p_total, int p_v) {
  int nb = static_cast<int>(std::lround(spec.b_fraction * p_total));
  if (nb < 1) nb = 1;
  if (nb > p_v) nb = p_v;
  return nb;
}

Eigen::VectorXd bias_acceptance_probs(const Eigen::MatrixXd& S,
                                      const Eigen::MatrixXd& V,
                                      const BiasSpec& spec, int p_total) {
  check_bias_spec(spec);
  if (S.rows() != V.rows()) throw DimensionMismatch("bias: S/V row mismatch");
  const int nb = bias_dim_count(spec, p_total, static_cast<int>(V.cols()));
  const double sgn = spec.r > 0 ? 1.0 : -1.0;
  const double log_abs_r = std::log(std::abs(spec.r));
  const Eigen::VectorXd f = noise_free_label(S);
  Eigen::VectorXd pr(S.rows());
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    double d_sum = 0.0;
    for (int j = 0; j < nb; ++j) d_sum += std::abs(f[i] - sgn * V(i, j));
    pr[i] = std::exp(-5.0 * d_sum * log_abs_r);
  }
  return pr;
}

std::vector<int> bias_sample(const Eigen::MatrixXd& S, const Eigen::MatrixXd& V,
                             const BiasSpec& spec, int p_total, uint64_t seed,
                             bool normalize) {
  Eigen::VectorXd pr = bias_acceptance_probs(S, V, spec, p_total);
  if (normalize) {
    const double mx = pr.maxCoeff();
    if (mx > 0.0) pr /= mx;
  }
  Rng rng(mix_seed(seed, 0xB1A5));
  std::vector<int> kept;
  for (Eigen::Index i = 0; i < pr.size(); ++i) {
    if (rng.uniform01() <= pr[i]) kept.push_back(static_cast<int>(i));
  }
  if (kept.empty()) {
    throw EmptySelection("bias: all rows rejected; enlarge n or weaken |r|");
  }
  return kept;
}

std::vector<int> bias_subsample(const Eigen::MatrixXd& S, const Eigen::MatrixXd& V,
                                const BiasSpec& spec, int p_total, int k, uint64_t seed) {
  check_bias_spec(spec);
  if (k < 1) throw InvalidValue("bias: subsample size must be >= 1");
  if (S.rows() != V.rows()) throw DimensionMismatch("bias: S/V row mismatch");
  const int nb = bias_dim_count(spec, p_total, static_cast<int>(V.cols()));
  const double sgn = spec.r > 0 ? 1.0 : -1.0;
  const double log_abs_r = std::log(std::abs(spec.r));
  const Eigen::VectorXd f = noise_free_label(S);

  // Efraimidis-Spirakis: keep the k largest u^(1/w). Ranking by
  // log(-log u) - log w avoids overflow for log-weights spanning hundreds.
  Rng rng(mix_seed(seed, 0x5E1));
  const Eigen::Index n = S.rows();
  std::vector<std::pair<double, int>> keyed(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double d_sum = 0.0;
    for (int j = 0; j < nb; ++j) d_sum += std::abs(f[i] - sgn * V(i, j));
    const double log_w = -5.0 * d_sum * log_abs_r;
    const double u = rng.uniform01();
    keyed[static_cast<size_t>(i)] = {std::log(-std::log(u)) - log_w, static_cast<int>(i)};
  }
  const size_t keep = std::min(static_cast<size_t>(k), keyed.size());
  std::partial_sort(keyed.begin(), keyed.begin() + keep, keyed.end());
  std::vector<int> rows(keep);
  for (size_t i = 0; i < keep; ++i) rows[i] = keyed[i].second;
  std::sort(rows.begin(), rows.end());
  return rows;
}

void write_synth_csv(const std::string& path, const Eigen::MatrixXd& S,
                     const Eigen::MatrixXd& V, const Eigen::VectorXd& y) {
  if (S.rows() != V.rows() || S.rows() != y.size()) {
    throw DimensionMismatch("synth csv: row count mismatch");
  }
  CsvTable t;
  for (Eigen::Index j = 0; j < S.cols(); ++j) t.header.push_back("S_" + std::to_string(j));
  for (Eigen::Index j = 0; j < V.cols(); ++j) t.header.push_back("V_" + std::to_string(j));
  t.header.push_back("Y");
  t.rows.reserve(S.rows());
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    std::vector<std::string> row;
    row.reserve(t.header.size());
    for (Eigen::Index j = 0; j < S.cols(); ++j) row.push_back(format_double(S(i, j)));
    for (Eigen::Index j = 0; j < V.cols(); ++j) row.push_back(format_double(V(i, j)));
    row.push_back(format_double(y[i]));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

std::string env_kind_name(EnvKind kind) {
  return kind == EnvKind::linear ? "linear" : "nonlinear";
}

EnvKind env_kind_from_name(const std::string& name) {
  if (name == "linear") return EnvKind::linear;
  if (name == "nonlinear") return EnvKind::nonlinear;
  throw InvalidValue("env: unknown kind '" + name + "'");
}

}  // namespace stablerules
