#include "stablerules/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include <nlohmann/json.hpp>

#include "stablerules/csv.hpp"
#include "stablerules/dataset.hpp"
#include "stablerules/rng.hpp"

namespace stablerules {

using json = nlohmann::json;

BetaErrors beta_errors(const Eigen::VectorXd& est, const Eigen::VectorXd& beta_true,
                       const SplitSpec& split) {
  if (est.size() != beta_true.size()) {
    throw DimensionMismatch("beta errors: estimate/truth length mismatch");
  }
  check_split_spec(split, static_cast<int>(est.size()));
  auto mean_abs = [&](const std::vector<int>& idx) {
    if (idx.empty()) return 0.0;
    double s = 0.0;
    for (int j : idx) s += std::abs(est[j] - beta_true[j]);
    return s / static_cast<double>(idx.size());
  };
  BetaErrors e;
  e.beta_s_err = mean_abs(split.stable_idx);
  e.beta_v_err = mean_abs(split.unstable_idx);
  e.beta_err = 0.5 * (e.beta_s_err + e.beta_v_err);
  return e;
}

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& y) {
  if (pred.size() != y.size()) throw DimensionMismatch("rmse: length mismatch");
  if (pred.size() == 0) throw EmptyInput("rmse: empty input");
  return std::sqrt((pred - y).squaredNorm() / static_cast<double>(pred.size()));
}

ClassificationMetrics classification_metrics(const Eigen::VectorXd& pred,
                                             const Eigen::VectorXd& y) {
  if (pred.size() != y.size()) throw DimensionMismatch("metrics: length mismatch");
  if (pred.size() == 0) throw EmptyInput("metrics: empty input");
  int tp = 0, fp = 0, fn = 0, tn = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const bool actual_pos = y[i] > 0;
    const bool pred_pos = pred[i] > 0;
    if (pred_pos && actual_pos) ++tp;
    else if (pred_pos && !actual_pos) ++fp;
    else if (!pred_pos && actual_pos) ++fn;
    else ++tn;
  }
  ClassificationMetrics m;
  m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(pred.size());
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / (tp + fp);
  else m.degenerate = true;
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / (tp + fn);
  else m.degenerate = true;
  if (m.precision + m.recall > 0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.degenerate = true;
  }
  return m;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw DimensionMismatch("pearson: length mismatch");
  const double n = static_cast<double>(a.size());
  const double ma = a.mean();
  const double mb = b.mean();
  const Eigen::ArrayXd da = a.array() - ma;
  const Eigen::ArrayXd db = b.array() - mb;
  const double va = da.square().sum() / n;
  const double vb = db.square().sum() / n;
  if (va <= 0.0 || vb <= 0.0) return 0.0;
  return (da * db).sum() / n / std::sqrt(va * vb);
}

namespace {

Eigen::VectorXd average_ranks(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return v[a] < v[b]; });
  Eigen::VectorXd ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && v[order[static_cast<size_t>(j + 1)]] == v[order[static_cast<size_t>(i)]]) {
      ++j;
    }
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based average rank
    for (Eigen::Index k = i; k <= j; ++k) ranks[order[static_cast<size_t>(k)]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw DimensionMismatch("spearman: length mismatch");
  if (a.size() < 2) throw TooFewItems("spearman: need at least 2 items");
  return pearson(average_ranks(a), average_ranks(b));
}

double CorrelationProfile::mean_abs(ProfilePanel panel) const {
  const Eigen::MatrixXd* m = nullptr;
  switch (panel) {
    case ProfilePanel::linear: m = &linear; break;
    case ProfilePanel::square: m = &square; break;
    case ProfilePanel::cube: m = &cube; break;
    case ProfilePanel::expo: m = &expo; break;
  }
  const Eigen::Index p = m->rows();
  if (p < 2) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (i != j) s += std::abs((*m)(i, j));
    }
  }
  return s / static_cast<double>(p * (p - 1));
}

CorrelationProfile correlation_profile(const Eigen::MatrixXd& V, const Eigen::VectorXd& w) {
  if (V.rows() < 3) throw TooFewSamples("profile: need n >= 3");
  if (w.size() != V.rows()) throw DimensionMismatch("profile: V/w row mismatch");
  const double mean_w = w.mean();
  if (mean_w <= 0.0) throw InvalidValue("profile: weights sum to zero");
  const Eigen::ArrayXd ws = w.array() / mean_w;  // scale to mean 1
  const Eigen::Index p = V.cols();

  Eigen::MatrixXd WV = V.array().colwise() * ws;
  CorrelationProfile prof;
  prof.linear.setZero(p, p);
  prof.square.setZero(p, p);
  prof.cube.setZero(p, p);
  prof.expo.setZero(p, p);

  Eigen::MatrixXd sq = WV.array().square();
  Eigen::MatrixXd cu = WV.array().cube();
  Eigen::MatrixXd ex = WV.array().exp();

  auto is_const = [](const Eigen::VectorXd& c) {
    return (c.array() - c.mean()).square().sum() <= 0.0;
  };
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (i == j) continue;
      if (is_const(WV.col(i))) { prof.had_constant = true; continue; }
      prof.linear(i, j) = pearson(WV.col(i), WV.col(j));
      prof.square(i, j) = pearson(WV.col(i), sq.col(j));
      prof.cube(i, j) = pearson(WV.col(i), cu.col(j));
      prof.expo(i, j) = pearson(WV.col(i), ex.col(j));
    }
  }
  return prof;
}

// ---------------------------------------------------------------------------

std::string method_name(Method m) {
  switch (m) {
    case Method::ols: return "OLS";
    case Method::lasso: return "Lasso";
    case Method::ridge: return "Ridge";
    case Method::svm: return "SVM";
    case Method::dwr: return "DWR";
    case Method::dwr_svm: return "DWR_SVM";
    case Method::our: return "OUR";
  }
  return "OLS";
}

Method method_from_name(const std::string& name) {
  for (Method m : all_methods()) {
    if (method_name(m) == name) return m;
  }
  throw InvalidValue("experiment: unknown method '" + name + "'");
}

std::vector<Method> all_methods() {
  return {Method::ols, Method::lasso, Method::ridge, Method::svm, Method::dwr,
          Method::dwr_svm, Method::our};
}

double MethodCellStats::mean(const std::vector<double>& v) const {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double MethodCellStats::stddev(const std::vector<double>& v) const {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

namespace {

struct RepeatOutcome {
  // per method: beta errors and per-r rmse; empty error string on success
  std::vector<BetaErrors> betas;
  std::vector<std::vector<double>> rmse;  // [method][r index]
  std::vector<std::string> errors;
};

// Draw a training or test environment: generate a pool, optionally thin it
// with the bias-rate selection, and keep at most n rows.
struct EnvDraw {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  EnvSpec spec;
};

EnvDraw draw_environment(const ExperimentConfig& cfg, EnvKind env, int n, int p,
                         uint64_t seed, double r) {
  EnvDraw draw;
  const bool biased = r != 0.0;
  EnvSpec spec = make_env_spec(env, biased ? n * cfg.test_pool_factor : n, p, seed,
                               cfg.noise_std, cfg.stable_split);
  const Covariates cov = gen_covariates(spec);
  const LabelVector labels = gen_labels(cov.S, cov.V, spec.noise_std, mix_seed(seed, 0x77));
  std::vector<int> rows;
  if (biased) {
    BiasSpec bias;
    bias.r = r;
    bias.b_fraction = cfg.bias_fraction;
    rows = bias_subsample(cov.S, cov.V, bias, p, n, mix_seed(seed, 0xB1));
  } else {
    rows.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) rows[static_cast<size_t>(i)] = i;
  }
  draw.X.resize(static_cast<Eigen::Index>(rows.size()), p);
  draw.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    draw.X.row(static_cast<Eigen::Index>(i)).head(spec.p_s) = cov.S.row(rows[i]);
    draw.X.row(static_cast<Eigen::Index>(i)).tail(spec.p_v) = cov.V.row(rows[i]);
    draw.y[static_cast<Eigen::Index>(i)] = labels.values[rows[i]];
  }
  draw.spec = spec;
  draw.spec.n = static_cast<int>(rows.size());
  return draw;
}

// learned weights enter the margin costs at mean 1 so they are commensurate
// with the C floor, mirroring the profile convention
Eigen::VectorXd scale_to_mean_one(const Eigen::VectorXd& w) {
  const double m = w.mean();
  return m > 0 ? Eigen::VectorXd(w / m) : w;
}

RepeatOutcome run_repeat(const ExperimentConfig& cfg, EnvKind env, int n, int p,
                         int cell_index, int repeat) {
  const uint64_t seed = mix_seed(cfg.base_seed, static_cast<uint64_t>(cell_index) * 7919 + 13,
                                 static_cast<uint64_t>(repeat));
  const EnvDraw train = draw_environment(cfg, env, n, p, seed, cfg.train_r);
  const EnvSpec& spec = train.spec;
  const Eigen::MatrixXd& X = train.X;
  const Eigen::VectorXd& y = train.y;
  const int n_train = static_cast<int>(X.rows());

  Eigen::VectorXd beta_true(p);
  beta_true.head(spec.p_s) = stable_beta(spec.p_s);
  beta_true.tail(spec.p_v).setZero();
  const SplitSpec split = make_split_spec(spec.p_s, spec.p_v);

  const size_t n_methods = cfg.methods.size();
  RepeatOutcome out;
  out.betas.resize(n_methods);
  out.rmse.assign(n_methods, std::vector<double>(cfg.test_rmse ? cfg.r_grid.size() : 0,
                                                 std::numeric_limits<double>::quiet_NaN()));
  out.errors.assign(n_methods, "");

  // shared weight learners, computed lazily at most once per repeat
  bool have_our = false, have_dwr = false;
  Eigen::VectorXd w_our, w_dwr;
  LinearModel dwr_model;
  auto ensure_our = [&]() {
    if (have_our) return;
    const StandardizeResult std_x = standardize_matrix(X);
    const LearnWeightsResult lw = learn_weights(std_x.data.values, cfg.decor);
    w_our = scale_to_mean_one(lw.weights.w);
    have_our = true;
  };
  auto ensure_dwr = [&]() {
    if (have_dwr) return;
    const DwrResult res = fit_dwr(X, y, cfg.dwr_lambda2);
    w_dwr = scale_to_mean_one(res.weights.w);
    dwr_model = res.model;
    have_dwr = true;
  };

  std::vector<LinearModel> fitted(n_methods);
  for (size_t mi = 0; mi < n_methods; ++mi) {
    const Method method = cfg.methods[mi];
    try {
      LinearModel model;
      switch (method) {
        case Method::ols:
          model = fit_linear_baseline(X, y, ModelKind::ols, 0.0);
          break;
        case Method::lasso:
          model = fit_linear_baseline(X, y, ModelKind::lasso, cfg.lasso_lambda);
          break;
        case Method::ridge:
          model = fit_linear_baseline(X, y, ModelKind::ridge, cfg.ridge_lambda);
          break;
        case Method::svm: {
          SvmConfig plain = cfg.svm;
          plain.C = 1.0;  // unweighted baseline: unit cost per sample
          model = fit_weighted_svr(X, y, Eigen::VectorXd::Zero(n_train), plain);
          model.kind = ModelKind::svr;
          break;
        }
        case Method::dwr:
          ensure_dwr();
          model = dwr_model;
          break;
        case Method::dwr_svm:
          ensure_dwr();
          model = fit_weighted_svr(X, y, w_dwr, cfg.svm);
          break;
        case Method::our:
          ensure_our();
          model = fit_weighted_svr(X, y, w_our, cfg.svm);
          break;
      }
      out.betas[mi] = beta_errors(model.beta, beta_true, split);
      fitted[mi] = std::move(model);
    } catch (const std::exception& e) {
      out.errors[mi] = e.what();
    }
  }

  if (cfg.test_rmse) {
    for (size_t ri = 0; ri < cfg.r_grid.size(); ++ri) {
      try {
        const EnvDraw test =
            draw_environment(cfg, env, n, p, mix_seed(seed, 0x7E57, ri), cfg.r_grid[ri]);
        for (size_t mi = 0; mi < n_methods; ++mi) {
          if (!out.errors[mi].empty()) continue;
          out.rmse[mi][ri] = rmse(predict(fitted[mi], test.X), test.y);
        }
      } catch (const std::exception& e) {
        for (size_t mi = 0; mi < n_methods; ++mi) {
          if (out.errors[mi].empty()) {
            out.errors[mi] = std::string("test env r=") + format_double(cfg.r_grid[ri]) +
                             ": " + e.what();
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.repeats < 1) throw InvalidValue("experiment: repeats must be >= 1");
  if (cfg.methods.empty()) throw InvalidValue("experiment: no methods");
  const auto t0 = std::chrono::steady_clock::now();

  ExperimentReport report;
  report.config = cfg;

  int cell_index = 0;
  for (EnvKind env : cfg.envs) {
    for (const auto& [n, p] : cfg.sizes) {
      CellReport cell;
      cell.n = n;
      cell.p = p;
      cell.env = env;

      std::vector<RepeatOutcome> outcomes(static_cast<size_t>(cfg.repeats));
      const int jobs = std::max(1, std::min(cfg.jobs, cfg.repeats));
      if (jobs == 1) {
        for (int rep = 0; rep < cfg.repeats; ++rep) {
          outcomes[static_cast<size_t>(rep)] = run_repeat(cfg, env, n, p, cell_index, rep);
        }
      } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int t = 0; t < jobs; ++t) {
          pool.emplace_back([&]() {
            while (true) {
              const int rep = next.fetch_add(1);
              if (rep >= cfg.repeats) return;
              outcomes[static_cast<size_t>(rep)] = run_repeat(cfg, env, n, p, cell_index, rep);
            }
          });
        }
        for (auto& th : pool) th.join();
      }

      for (size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        MethodCellStats stats;
        stats.method = cfg.methods[mi];
        stats.rmse_per_r.assign(cfg.test_rmse ? cfg.r_grid.size() : 0, {});
        for (int rep = 0; rep < cfg.repeats; ++rep) {
          const RepeatOutcome& oc = outcomes[static_cast<size_t>(rep)];
          if (!oc.errors[mi].empty()) {
            stats.errors.push_back("repeat " + std::to_string(rep) + ": " + oc.errors[mi]);
            continue;
          }
          stats.beta_s.push_back(oc.betas[mi].beta_s_err);
          stats.beta_v.push_back(oc.betas[mi].beta_v_err);
          stats.beta_e.push_back(oc.betas[mi].beta_err);
          for (size_t ri = 0; ri < stats.rmse_per_r.size(); ++ri) {
            const double v = oc.rmse[mi][ri];
            if (std::isfinite(v)) stats.rmse_per_r[ri].push_back(v);
          }
        }
        cell.methods.push_back(std::move(stats));
      }
      report.cells.push_back(std::move(cell));
      ++cell_index;
    }
  }
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

void write_report_csv(const std::string& path, const ExperimentReport& report) {
  CsvTable t;
  t.header = {"env", "n", "m", "method", "repeats", "beta_s_err", "beta_s_std",
              "beta_v_err", "beta_v_std", "beta_err", "beta_std"};
  for (const auto& cell : report.cells) {
    for (const auto& ms : cell.methods) {
      t.rows.push_back({env_kind_name(cell.env), std::to_string(cell.n),
                        std::to_string(cell.p), method_name(ms.method),
                        std::to_string(ms.beta_s.size()), format_double(ms.mean(ms.beta_s)),
                        format_double(ms.stddev(ms.beta_s)), format_double(ms.mean(ms.beta_v)),
                        format_double(ms.stddev(ms.beta_v)), format_double(ms.mean(ms.beta_e)),
                        format_double(ms.stddev(ms.beta_e))});
    }
  }
  write_csv(path, t);
}

void write_rsweep_csv(const std::string& path, const ExperimentReport& report) {
  CsvTable t;
  t.header = {"env", "n", "m", "method", "r", "rmse_mean", "rmse_std", "repeats"};
  for (const auto& cell : report.cells) {
    for (const auto& ms : cell.methods) {
      for (size_t ri = 0; ri < ms.rmse_per_r.size(); ++ri) {
        t.rows.push_back({env_kind_name(cell.env), std::to_string(cell.n),
                          std::to_string(cell.p), method_name(ms.method),
                          format_double(report.config.r_grid[ri]),
                          format_double(ms.mean(ms.rmse_per_r[ri])),
                          format_double(ms.stddev(ms.rmse_per_r[ri])),
                          std::to_string(ms.rmse_per_r[ri].size())});
      }
    }
  }
  write_csv(path, t);
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  json methods = json::array();
  for (Method m : cfg.methods) methods.push_back(method_name(m));
  j["methods"] = methods;
  json sizes = json::array();
  for (const auto& [n, p] : cfg.sizes) sizes.push_back({{"n", n}, {"p", p}});
  j["sizes"] = sizes;
  json envs = json::array();
  for (EnvKind e : cfg.envs) envs.push_back(env_kind_name(e));
  j["envs"] = envs;
  j["repeats"] = cfg.repeats;
  j["base_seed"] = cfg.base_seed;
  j["jobs"] = cfg.jobs;
  j["noise_std"] = cfg.noise_std;
  j["stable_split"] = cfg.stable_split;
  j["decor"] = {{"degree", cfg.decor.degree},
                {"gamma", cfg.decor.gamma},
                {"lambda5", cfg.decor.lambda5},
                {"lambda6", cfg.decor.lambda6},
                {"max_iters", cfg.decor.max_iters},
                {"step_size", cfg.decor.step_size},
                {"tolerance", cfg.decor.tolerance}};
  j["svm"] = {{"C", cfg.svm.C},
              {"epsilon", cfg.svm.epsilon},
              {"max_iters", cfg.svm.max_iters},
              {"tolerance", cfg.svm.tolerance}};
  j["lasso_lambda"] = cfg.lasso_lambda;
  j["ridge_lambda"] = cfg.ridge_lambda;
  j["dwr_lambda2"] = cfg.dwr_lambda2;
  j["train_r"] = cfg.train_r;
  j["test_rmse"] = cfg.test_rmse;
  j["r_grid"] = cfg.r_grid;
  j["bias_fraction"] = cfg.bias_fraction;
  j["test_pool_factor"] = cfg.test_pool_factor;
  return j.dump();
}

std::string report_to_json(const ExperimentReport& report) {
  json j;
  j["config"] = json::parse(experiment_config_to_json(report.config));
  json cells = json::array();
  for (const auto& cell : report.cells) {
    json jc;
    jc["env"] = env_kind_name(cell.env);
    jc["n"] = cell.n;
    jc["m"] = cell.p;
    json methods = json::array();
    for (const auto& ms : cell.methods) {
      json jm;
      jm["method"] = method_name(ms.method);
      jm["repeats"] = ms.beta_s.size();
      jm["beta_s_err"] = {{"mean", ms.mean(ms.beta_s)}, {"std", ms.stddev(ms.beta_s)}};
      jm["beta_v_err"] = {{"mean", ms.mean(ms.beta_v)}, {"std", ms.stddev(ms.beta_v)}};
      jm["beta_err"] = {{"mean", ms.mean(ms.beta_e)}, {"std", ms.stddev(ms.beta_e)}};
      json rmse_arr = json::array();
      for (size_t ri = 0; ri < ms.rmse_per_r.size(); ++ri) {
        rmse_arr.push_back({{"r", report.config.r_grid[ri]},
                            {"mean", ms.mean(ms.rmse_per_r[ri])},
                            {"std", ms.stddev(ms.rmse_per_r[ri])},
                            {"repeats", ms.rmse_per_r[ri].size()}});
      }
      jm["rmse"] = rmse_arr;
      jm["errors"] = ms.errors;
      methods.push_back(std::move(jm));
    }
    jc["methods"] = std::move(methods);
    cells.push_back(std::move(jc));
  }
  j["cells"] = std::move(cells);
  return j.dump(2);
}

}  // namespace stablerules
