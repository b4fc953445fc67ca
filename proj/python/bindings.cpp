// pybind11 surface for the main operations: synthetic environments,
// decorrelation weights, weighted SVM/SVR and baselines, rule mining and
// selection, and the evaluation metrics.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stablerules/dataset.hpp"
#include "stablerules/rng.hpp"
#include "stablerules/decorrelation.hpp"
#include "stablerules/evaluation.hpp"
#include "stablerules/mining.hpp"
#include "stablerules/models.hpp"
#include "stablerules/selection.hpp"
#include "stablerules/synthesis.hpp"

namespace py = pybind11;
using namespace stablerules;

namespace {

ValidatedDataset dataset_from_binary(const Eigen::MatrixXd& X,
                                     const std::vector<std::string>& names,
                                     const Eigen::VectorXd& y) {
  FeatureMatrix fm;
  fm.values = X;
  fm.column_names = names;
  fm.column_kinds.assign(static_cast<size_t>(X.cols()), ColumnKind::binary);
  LabelVector lv;
  lv.task = LabelTask::binary;
  lv.values = y;
  return validate_dataset(std::move(fm), std::move(lv));
}

TransactionDb db_from_rows(const std::vector<std::vector<std::string>>& rows) {
  TransactionDb db;
  for (const auto& row : rows) db.add(row);
  return db;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "stablerules: decorrelation-weighted rule learning";

  py::register_exception<Error>(m, "StableRulesError");

  // --- synthesis -----------------------------------------------------------
  m.def(
      "gen_covariates",
      [](const std::string& env, int n, int p, uint64_t seed, double noise_std,
         double stable_split) {
        const EnvSpec spec =
            make_env_spec(env_kind_from_name(env), n, p, seed, noise_std, stable_split);
        const Covariates cov = gen_covariates(spec);
        return py::make_tuple(cov.S, cov.V);
      },
      py::arg("env"), py::arg("n"), py::arg("p"), py::arg("seed"),
      py::arg("noise_std") = 0.3, py::arg("stable_split") = 0.4,
      "Stable and unstable covariate blocks of a synthetic environment");

  m.def(
      "gen_labels",
      [](const Eigen::MatrixXd& S, const Eigen::MatrixXd& V, double noise_std, uint64_t seed) {
        return gen_labels(S, V, noise_std, seed).values;
      },
      py::arg("S"), py::arg("V"), py::arg("noise_std"), py::arg("seed"));

  m.def("stable_beta", &stable_beta, py::arg("p_s"));
  m.def("noise_free_label", &noise_free_label, py::arg("S"));

  m.def(
      "bias_acceptance_probs",
      [](const Eigen::MatrixXd& S, const Eigen::MatrixXd& V, double r, double b_fraction,
         int p_total) {
        BiasSpec spec;
        spec.r = r;
        spec.b_fraction = b_fraction;
        return bias_acceptance_probs(S, V, spec, p_total);
      },
      py::arg("S"), py::arg("V"), py::arg("r"), py::arg("b_fraction"), py::arg("p_total"));

  m.def(
      "bias_subsample",
      [](const Eigen::MatrixXd& S, const Eigen::MatrixXd& V, double r, double b_fraction,
         int p_total, int k, uint64_t seed) {
        BiasSpec spec;
        spec.r = r;
        spec.b_fraction = b_fraction;
        return bias_subsample(S, V, spec, p_total, k, seed);
      },
      py::arg("S"), py::arg("V"), py::arg("r"), py::arg("b_fraction"), py::arg("p_total"),
      py::arg("k"), py::arg("seed"));

  // --- decorrelation ---------------------------------------------------------
  m.def(
      "weighted_poly_fit",
      [](const Eigen::VectorXd& x_src, const Eigen::VectorXd& x_tgt, const Eigen::VectorXd& w,
         int degree) { return weighted_poly_fit(x_src, x_tgt, w, degree).coeffs; },
      py::arg("x_src"), py::arg("x_tgt"), py::arg("w"), py::arg("degree"));

  m.def("decor_penalty", &decor_penalty, py::arg("X"), py::arg("w"), py::arg("degree"));

  m.def(
      "learn_weights",
      [](const Eigen::MatrixXd& X, int degree, double gamma, double lambda5, double lambda6,
         int max_iters, double step_size, double tolerance, double ess_fraction) {
        DecorConfig cfg;
        cfg.degree = degree;
        cfg.gamma = gamma;
        cfg.lambda5 = lambda5;
        cfg.lambda6 = lambda6;
        cfg.max_iters = max_iters;
        cfg.step_size = step_size;
        cfg.tolerance = tolerance;
        cfg.ess_fraction = ess_fraction;
        const LearnWeightsResult res = learn_weights(X, cfg);
        py::dict out;
        out["weights"] = res.weights.w;
        out["objective"] = res.objective;
        out["iterations"] = res.iterations;
        out["converged"] = res.converged;
        return out;
      },
      py::arg("X"), py::arg("degree") = 2, py::arg("gamma") = 600.0,
      py::arg("lambda5") = 5e-4, py::arg("lambda6") = 5e-4, py::arg("max_iters") = 2000,
      py::arg("step_size") = 1e-2, py::arg("tolerance") = 1e-8,
      py::arg("ess_fraction") = 0.5);

  // --- models ----------------------------------------------------------------
  py::class_<LinearModel>(m, "LinearModel")
      .def_readonly("beta", &LinearModel::beta)
      .def_readonly("b", &LinearModel::b)
      .def_readonly("converged", &LinearModel::converged)
      .def_readonly("iterations", &LinearModel::iterations)
      .def_property_readonly("kind",
                             [](const LinearModel& mdl) { return model_kind_name(mdl.kind); })
      .def("__repr__", [](const LinearModel& mdl) {
        return "<LinearModel kind=" + model_kind_name(mdl.kind) +
               " p=" + std::to_string(mdl.beta.size()) + ">";
      });

  m.def(
      "fit_linear_baseline",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::string& method,
         double lam) { return fit_linear_baseline(X, y, model_kind_from_name(method), lam); },
      py::arg("X"), py::arg("y"), py::arg("method"), py::arg("lam") = 0.0);

  m.def(
      "fit_dwr",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda2) {
        const DwrResult res = fit_dwr(X, y, lambda2);
        return py::make_tuple(res.model, res.weights.w);
      },
      py::arg("X"), py::arg("y"), py::arg("lambda2") = 600.0);

  m.def(
      "fit_weighted_svm",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double C,
         double tolerance) {
        SvmConfig cfg;
        cfg.C = C;
        cfg.tolerance = tolerance;
        return fit_weighted_svm(X, y, w, cfg);
      },
      py::arg("X"), py::arg("y"), py::arg("w"), py::arg("C") = 0.5,
      py::arg("tolerance") = 1e-6);

  m.def(
      "fit_weighted_svr",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double C,
         double epsilon, double tolerance) {
        SvmConfig cfg;
        cfg.C = C;
        cfg.epsilon = epsilon;
        cfg.tolerance = tolerance;
        return fit_weighted_svr(X, y, w, cfg);
      },
      py::arg("X"), py::arg("y"), py::arg("w"), py::arg("C") = 0.5, py::arg("epsilon") = 0.1,
      py::arg("tolerance") = 1e-6);

  m.def("predict", &predict, py::arg("model"), py::arg("X"));
  m.def("predict_class", &predict_class, py::arg("model"), py::arg("X"));

  // --- mining and selection ---------------------------------------------------
  py::class_<Rule>(m, "Rule")
      .def_readonly("antecedent", &Rule::antecedent)
      .def_readonly("consequent", &Rule::consequent)
      .def_readonly("support", &Rule::support)
      .def_readonly("confidence", &Rule::confidence)
      .def_readonly("lift", &Rule::lift)
      .def("score", &Rule::score)
      .def("__repr__", [](const Rule& r) {
        std::string s = "<Rule ";
        for (size_t i = 0; i < r.antecedent.size(); ++i) {
          if (i) s += ",";
          s += r.antecedent[i];
        }
        s += " => " + std::string(r.consequent > 0 ? "+1" : "-1") + ">";
        return s;
      });

  m.def(
      "mine_frequent_itemsets",
      [](const std::vector<std::vector<std::string>>& rows, double min_support, int max_len) {
        const TransactionDb db = db_from_rows(rows);
        py::list out;
        for (const auto& s : mine_frequent_itemsets(db, min_support, max_len)) {
          std::vector<std::string> names;
          for (Item it : s.items) names.push_back(db.catalog.name_of(it));
          out.append(py::make_tuple(names, s.count, s.support));
        }
        return out;
      },
      py::arg("transactions"), py::arg("min_support"), py::arg("max_len") = 0);

  m.def(
      "mine_class_rules",
      [](const Eigen::MatrixXd& X01, const std::vector<std::string>& names,
         const Eigen::VectorXd& y, double min_support, double min_confidence, int max_len) {
        const ValidatedDataset ds = dataset_from_binary(X01, names, y);
        const TransactionDb db = transactions_from_dataset(ds, true);
        const auto itemsets =
            mine_frequent_itemsets(db, min_support, max_len > 0 ? max_len + 1 : 0);
        std::vector<Rule> rules;
        for (int cls : {1, -1}) {
          const int item = db.catalog.find(class_item_name(cls));
          if (item < 0) continue;
          const auto part = derive_rules(itemsets, db.catalog, min_confidence, item, cls);
          rules.insert(rules.end(), part.begin(), part.end());
        }
        return rules;
      },
      py::arg("X"), py::arg("names"), py::arg("y"), py::arg("min_support") = 0.05,
      py::arg("min_confidence") = 0.6, py::arg("max_len") = 4);

  m.def(
      "build_rule_matrix",
      [](const Eigen::MatrixXd& X01, const std::vector<std::string>& names,
         const Eigen::VectorXd& y, const std::vector<Rule>& rules) {
        return build_rule_matrix(dataset_from_binary(X01, names, y), rules).values;
      },
      py::arg("X"), py::arg("names"), py::arg("y"), py::arg("rules"));

  m.def(
      "select_rules",
      [](const Eigen::MatrixXd& X01, const std::vector<std::string>& names,
         const Eigen::VectorXd& y, const std::vector<Rule>& rules, int lambda1, int lambda2,
         int folds, uint64_t seed) {
        const ValidatedDataset ds = dataset_from_binary(X01, names, y);
        const RuleMatrix rm = build_rule_matrix(ds, rules);
        SelectionBounds bounds;
        bounds.lambda1 = lambda1;
        bounds.lambda2 = lambda2;
        const SelectionResult sel = rules_selection(rm, ds.labels, bounds, seed);
        std::vector<Rule> kept;
        for (int idx : sel.kept) kept.push_back(rules[static_cast<size_t>(idx)]);
        return item_reduce(kept, ds, folds, mix_seed(seed, 0x17)).rules;
      },
      py::arg("X"), py::arg("names"), py::arg("y"), py::arg("rules"),
      py::arg("lambda1") = 1 << 20, py::arg("lambda2") = 1, py::arg("folds") = 5,
      py::arg("seed") = 1);

  // --- evaluation ---------------------------------------------------------------
  m.def("rmse", &rmse, py::arg("pred"), py::arg("y"));
  m.def("pearson", &pearson, py::arg("a"), py::arg("b"));
  m.def("spearman", &spearman, py::arg("a"), py::arg("b"));
  m.def(
      "classification_metrics",
      [](const Eigen::VectorXd& pred, const Eigen::VectorXd& y) {
        const ClassificationMetrics cm = classification_metrics(pred, y);
        py::dict out;
        out["accuracy"] = cm.accuracy;
        out["precision"] = cm.precision;
        out["recall"] = cm.recall;
        out["f1"] = cm.f1;
        out["degenerate"] = cm.degenerate;
        return out;
      },
      py::arg("pred"), py::arg("y"));

  m.def(
      "beta_errors",
      [](const Eigen::VectorXd& est, const Eigen::VectorXd& truth, int p_s) {
        const BetaErrors e =
            beta_errors(est, truth, make_split_spec(p_s, static_cast<int>(est.size()) - p_s));
        return py::make_tuple(e.beta_s_err, e.beta_v_err, e.beta_err);
      },
      py::arg("est"), py::arg("truth"), py::arg("p_s"));

  m.def(
      "correlation_profile",
      [](const Eigen::MatrixXd& V, const Eigen::VectorXd& w) {
        const CorrelationProfile prof = correlation_profile(V, w);
        py::dict out;
        out["linear"] = prof.linear;
        out["square"] = prof.square;
        out["cube"] = prof.cube;
        out["exp"] = prof.expo;
        out["mean_abs"] =
            py::dict(py::arg("linear") = prof.mean_abs(ProfilePanel::linear),
                     py::arg("square") = prof.mean_abs(ProfilePanel::square),
                     py::arg("cube") = prof.mean_abs(ProfilePanel::cube),
                     py::arg("exp") = prof.mean_abs(ProfilePanel::expo));
        return out;
      },
      py::arg("V"), py::arg("w"));

  m.def(
      "standardize",
      [](const Eigen::MatrixXd& X) { return standardize_matrix(X).data.values; },
      py::arg("X"));
}
