#include "stablerules/selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "stablerules/dataset.hpp"
#include "stablerules/models.hpp"
#include "stablerules/rng.hpp"

namespace stablerules {

void check_selection_bounds(const SelectionBounds& bounds) {
  if (bounds.lambda1 < 1 || bounds.lambda2 < 1) {
    throw InvalidValue("selection: bounds must be >= 1");
  }
  if (bounds.lambda2 > bounds.lambda1) {
    throw InvalidValue("selection: lambda2 must not exceed lambda1");
  }
}

namespace {

constexpr double kGradTol = 1e-6;
constexpr int kMaxIters = 5000;

// Squared-hinge objective F(w,b) = ||w||^2 + sum_i max(0, 1 - y_i (A_i w + b))^2
struct ScoreSolve {
  Eigen::VectorXd w;
  double b = 0.0;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
  std::vector<double> trace;
};

double score_objective(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& w, double b) {
  const Eigen::ArrayXd margin = 1.0 - y.array() * ((A * w).array() + b);
  return w.squaredNorm() + margin.max(0.0).square().sum();
}

ScoreSolve solve_score(const Eigen::MatrixXd& A, const Eigen::VectorXd& y) {
  ScoreSolve s;
  s.w = Eigen::VectorXd::Zero(A.cols());
  double obj = score_objective(A, y, s.w, s.b);
  s.trace.push_back(obj);
  double eta = 1.0;
  Eigen::VectorXd grad_w(A.cols());
  double grad_b = 0.0;

  auto gradient = [&](const Eigen::VectorXd& w, double b) {
    const Eigen::ArrayXd margin = 1.0 - y.array() * ((A * w).array() + b);
    const Eigen::ArrayXd active = margin.max(0.0);
    const Eigen::VectorXd gvec = (active * y.array()).matrix();
    grad_w = 2.0 * w - 2.0 * (A.transpose() * gvec);
    grad_b = -2.0 * gvec.sum();
  };

  gradient(s.w, s.b);
  for (int iter = 0; iter < kMaxIters; ++iter) {
    const double gnorm = std::sqrt(grad_w.squaredNorm() + grad_b * grad_b);
    s.grad_norm = gnorm;
    s.iterations = iter;
    if (gnorm < kGradTol) {
      s.converged = true;
      return s;
    }
    bool accepted = false;
    while (eta > 1e-18) {
      const Eigen::VectorXd w_next = s.w - eta * grad_w;
      const double b_next = s.b - eta * grad_b;
      const double obj_next = score_objective(A, y, w_next, b_next);
      // strict decrease: a bit-identical objective means the Armijo margin
      // fell below the representable resolution
      if (obj_next < obj && obj_next <= obj - 1e-4 * eta * gnorm * gnorm) {
        s.w = w_next;
        s.b = b_next;
        obj = obj_next;
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    s.trace.push_back(obj);
    if (!accepted) {
      // no representable descent step remains: the iterate is the machine-
      // precision optimum even if the absolute gradient norm stays above
      // the nominal threshold
      s.converged = true;
      return s;
    }
    gradient(s.w, s.b);
    eta *= 2.0;
  }
  s.grad_norm = std::sqrt(grad_w.squaredNorm() + grad_b * grad_b);
  s.converged = s.grad_norm < kGradTol;
  return s;
}

Eigen::MatrixXd scaled_activations(const RuleMatrix& rm) {
  Eigen::MatrixXd A = rm.values;
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    A.col(j) *= rm.rules[static_cast<size_t>(j)].score();
  }
  return A;
}

RuleScoreModel score_from_solve(const RuleMatrix& rm, ScoreSolve&& s) {
  RuleScoreModel model;
  model.w = std::move(s.w);
  model.b = s.b;
  model.theta.resize(static_cast<Eigen::Index>(rm.rules.size()));
  for (size_t j = 0; j < rm.rules.size(); ++j) {
    model.theta[static_cast<Eigen::Index>(j)] = rm.rules[j].score();
  }
  model.converged = s.converged;
  model.iterations = s.iterations;
  model.grad_norm = s.grad_norm;
  model.objective_trace = std::move(s.trace);
  return model;
}

void check_score_inputs(const RuleMatrix& rm, const LabelVector& labels) {
  if (rm.r() == 0) throw EmptyRuleSet("score: no rules");
  if (rm.n() != labels.n()) throw DimensionMismatch("score: matrix/labels row mismatch");
  if (labels.task != LabelTask::binary) throw InvalidLabel("score: binary labels required");
  if (rm.rules.size() != static_cast<size_t>(rm.r())) {
    throw DimensionMismatch("score: rule list does not match matrix width");
  }
}

}  // namespace

RuleScoreModel try_score_rules(const RuleMatrix& rm, const LabelVector& labels) {
  check_score_inputs(rm, labels);
  return score_from_solve(rm, solve_score(scaled_activations(rm), labels.values));
}

RuleScoreModel score_rules(const RuleMatrix& rm, const LabelVector& labels) {
  RuleScoreModel model = try_score_rules(rm, labels);
  if (!model.converged) {
    throw NonConvergence("score: iteration cap hit, gradient norm " +
                         std::to_string(model.grad_norm));
  }
  return model;
}

double rule_model_accuracy(const RuleScoreModel& model, const Eigen::MatrixXd& activations,
                           const Eigen::VectorXd& y) {
  const Eigen::ArrayXd h = (activations * model.w).array() + model.b;
  int correct = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double pred = h[i] >= 0.0 ? 1.0 : -1.0;
    if (pred == y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(y.size());
}

namespace {

// train on the 80% split restricted to `cols`, accuracy on the 20% split
double heldout_accuracy(const Eigen::MatrixXd& A_train, const Eigen::VectorXd& y_train,
                        const Eigen::MatrixXd& A_test, const Eigen::VectorXd& y_test,
                        const std::vector<int>& cols, Eigen::VectorXd* w_out) {
  Eigen::MatrixXd At(A_train.rows(), static_cast<Eigen::Index>(cols.size()));
  Eigen::MatrixXd Ah(A_test.rows(), static_cast<Eigen::Index>(cols.size()));
  for (size_t c = 0; c < cols.size(); ++c) {
    At.col(static_cast<Eigen::Index>(c)) = A_train.col(cols[c]);
    Ah.col(static_cast<Eigen::Index>(c)) = A_test.col(cols[c]);
  }
  ScoreSolve s = solve_score(At, y_train);
  if (w_out) *w_out = s.w;
  const Eigen::ArrayXd h = (Ah * s.w).array() + s.b;
  int correct = 0;
  for (Eigen::Index i = 0; i < y_test.size(); ++i) {
    const double pred = h[i] >= 0.0 ? 1.0 : -1.0;
    if (pred == y_test[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(y_test.size());
}

}  // namespace

SelectionResult rules_selection(const RuleMatrix& rm, const LabelVector& labels,
                                const SelectionBounds& bounds, uint64_t seed) {
  check_selection_bounds(bounds);
  check_score_inputs(rm, labels);
  const int r0 = static_cast<int>(rm.r());
  if (r0 < bounds.lambda2) {
    throw BoundsInfeasible("selection: fewer rules than lambda2");
  }

  const Eigen::MatrixXd A = scaled_activations(rm);
  auto [train_idx, test_idx] = split_indices(rm.n(), 0.2, seed);
  Eigen::MatrixXd A_train(static_cast<Eigen::Index>(train_idx.size()), A.cols());
  Eigen::MatrixXd A_test(static_cast<Eigen::Index>(test_idx.size()), A.cols());
  Eigen::VectorXd y_train(static_cast<Eigen::Index>(train_idx.size()));
  Eigen::VectorXd y_test(static_cast<Eigen::Index>(test_idx.size()));
  for (size_t i = 0; i < train_idx.size(); ++i) {
    A_train.row(static_cast<Eigen::Index>(i)) = A.row(train_idx[i]);
    y_train[static_cast<Eigen::Index>(i)] = labels.values[train_idx[i]];
  }
  for (size_t i = 0; i < test_idx.size(); ++i) {
    A_test.row(static_cast<Eigen::Index>(i)) = A.row(test_idx[i]);
    y_test[static_cast<Eigen::Index>(i)] = labels.values[test_idx[i]];
  }

  SelectionResult result;
  std::vector<int> current(static_cast<size_t>(r0));
  for (int j = 0; j < r0; ++j) current[static_cast<size_t>(j)] = j;

  auto weakest_rule = [&](const std::vector<int>& cols) {
    Eigen::VectorXd w;
    heldout_accuracy(A_train, y_train, A_test, y_test, cols, &w);
    int arg = 0;
    double best = w[0] * w[0];
    for (Eigen::Index j = 1; j < w.size(); ++j) {
      const double v = w[j] * w[j];
      if (v < best) { best = v; arg = static_cast<int>(j); }
    }
    return arg;
  };

  // forced removals while above the rule-count cap
  while (static_cast<int>(current.size()) > bounds.lambda1) {
    const int arg = weakest_rule(current);
    result.history.push_back({"force_remove",
                              "rule " + std::to_string(current[static_cast<size_t>(arg)]),
                              0.0, static_cast<int>(current.size()) - 1});
    current.erase(current.begin() + arg);
  }

  double best_acc = heldout_accuracy(A_train, y_train, A_test, y_test, current, nullptr);
  result.kept = current;
  result.best_accuracy = best_acc;
  result.history.push_back({"baseline", "", best_acc, static_cast<int>(current.size())});

  while (static_cast<int>(current.size()) > bounds.lambda2) {
    const int arg = weakest_rule(current);
    const int removed = current[static_cast<size_t>(arg)];
    std::vector<int> cand = current;
    cand.erase(cand.begin() + arg);
    const double acc = heldout_accuracy(A_train, y_train, A_test, y_test, cand, nullptr);
    if (acc + 1e-12 >= best_acc) {
      current = std::move(cand);
      best_acc = std::max(best_acc, acc);
      result.kept = current;
      result.best_accuracy = best_acc;
      result.history.push_back({"remove_rule", "rule " + std::to_string(removed), acc,
                                static_cast<int>(current.size())});
    } else {
      result.history.push_back({"reject", "rule " + std::to_string(removed), acc,
                                static_cast<int>(current.size())});
      break;  // fixpoint: one rejected removal ends the loop
    }
  }
  return result;
}

namespace {

struct CvSplits {
  std::vector<std::vector<int>> fold_of;  // fold -> row indices
};

CvSplits make_folds(Eigen::Index n, int folds, uint64_t seed) {
  std::vector<int> idx(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = static_cast<int>(i);
  Rng rng(mix_seed(seed, 0xF01D));
  rng.shuffle(idx);
  CvSplits s;
  s.fold_of.resize(static_cast<size_t>(folds));
  for (size_t i = 0; i < idx.size(); ++i) {
    s.fold_of[i % static_cast<size_t>(folds)].push_back(idx[i]);
  }
  return s;
}

// mean CV accuracy of a plain hinge-loss linear classifier on the rule matrix
double cv_accuracy(const std::vector<Rule>& rules, const ValidatedDataset& ds,
                   const CvSplits& splits) {
  if (rules.empty()) return 0.0;
  const RuleMatrix rm = build_rule_matrix(ds, rules);
  SvmConfig cfg;
  cfg.C = 1.0;
  cfg.tolerance = 1e-6;
  double acc_sum = 0.0;
  int used = 0;
  for (size_t f = 0; f < splits.fold_of.size(); ++f) {
    const auto& val_rows = splits.fold_of[f];
    if (val_rows.empty()) continue;
    std::vector<int> train_rows;
    for (size_t g = 0; g < splits.fold_of.size(); ++g) {
      if (g == f) continue;
      train_rows.insert(train_rows.end(), splits.fold_of[g].begin(), splits.fold_of[g].end());
    }
    Eigen::MatrixXd Xt(static_cast<Eigen::Index>(train_rows.size()), rm.r());
    Eigen::VectorXd yt(static_cast<Eigen::Index>(train_rows.size()));
    for (size_t i = 0; i < train_rows.size(); ++i) {
      Xt.row(static_cast<Eigen::Index>(i)) = rm.values.row(train_rows[i]);
      yt[static_cast<Eigen::Index>(i)] = ds.labels.values[train_rows[i]];
    }
    const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(Xt.rows());
    const LinearModel m = fit_weighted_svm(Xt, yt, zeros, cfg);
    int correct = 0;
    for (int row : val_rows) {
      const double h = rm.values.row(row).dot(m.beta) + m.b;
      const double pred = h >= 0.0 ? 1.0 : -1.0;
      if (pred == ds.labels.values[row]) ++correct;
    }
    acc_sum += static_cast<double>(correct) / static_cast<double>(val_rows.size());
    ++used;
  }
  return used > 0 ? acc_sum / used : 0.0;
}

// delete an item from every antecedent; drop emptied rules, merge duplicates,
// restat survivors against the dataset
std::vector<Rule> delete_item(const std::vector<Rule>& rules, const std::string& item,
                              const ValidatedDataset& ds) {
  std::vector<Rule> out;
  std::set<std::pair<std::vector<std::string>, int>> seen;
  for (const auto& r : rules) {
    std::vector<std::string> ante;
    for (const auto& a : r.antecedent) {
      if (a != item) ante.push_back(a);
    }
    if (ante.empty()) continue;
    if (ante.size() == r.antecedent.size()) {
      if (seen.insert({r.antecedent, r.consequent}).second) out.push_back(r);
      continue;
    }
    Rule nr = restat_rule(ante, r.consequent, ds);
    if (seen.insert({nr.antecedent, nr.consequent}).second) out.push_back(std::move(nr));
  }
  return out;
}

}  // namespace

ItemReduceResult item_reduce(const std::vector<Rule>& rules, const ValidatedDataset& ds,
                             int folds, uint64_t seed) {
  if (folds < 2) throw InvalidValue("item reduce: folds must be >= 2");
  if (ds.labels.task != LabelTask::binary) {
    throw InvalidLabel("item reduce: binary labels required");
  }
  ItemReduceResult result;
  result.rules = rules;
  if (rules.empty()) return result;

  const CvSplits splits = make_folds(ds.n(), folds, seed);
  double best_acc = cv_accuracy(result.rules, ds, splits);
  result.best_accuracy = best_acc;
  result.history.push_back({"baseline", "", best_acc, static_cast<int>(result.rules.size())});

  while (!result.rules.empty()) {
    // candidate items with their rule-occurrence counts
    std::map<std::string, int> items;
    for (const auto& r : result.rules) {
      for (const auto& a : r.antecedent) ++items[a];
    }
    if (items.empty()) break;

    std::string best_item;
    int best_occurrences = -1;
    double best_cand_acc = -1.0;
    std::vector<Rule> best_rules;
    for (const auto& [item, occurrences] : items) {
      std::vector<Rule> cand = delete_item(result.rules, item, ds);
      const double acc = cv_accuracy(cand, ds, splits);
      // ties broken toward the item appearing in the most rules, then
      // lexicographically (map iteration is already sorted by name)
      const bool better = acc > best_cand_acc + 1e-12 ||
                          (std::abs(acc - best_cand_acc) <= 1e-12 &&
                           occurrences > best_occurrences);
      if (better) {
        best_cand_acc = acc;
        best_item = item;
        best_occurrences = occurrences;
        best_rules = std::move(cand);
      }
    }
    if (best_cand_acc + 1e-12 >= best_acc) {
      best_acc = std::max(best_acc, best_cand_acc);
      result.rules = std::move(best_rules);
      result.best_accuracy = best_acc;
      result.history.push_back({"delete_item", best_item, best_cand_acc,
                                static_cast<int>(result.rules.size())});
      if (result.rules.empty()) break;
    } else {
      result.history.push_back({"stop", best_item, best_cand_acc,
                                static_cast<int>(result.rules.size())});
      break;
    }
  }
  return result;
}

}  // namespace stablerules
