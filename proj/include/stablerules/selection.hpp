#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stablerules/mining.hpp"
#include "stablerules/types.hpp"

namespace stablerules {

struct SelectionBounds {
  int lambda1 = 1 << 20;  // max rule count
  int lambda2 = 1;        // min rule count
};

void check_selection_bounds(const SelectionBounds& bounds);

// Linear score over confidence-scaled rule activations, fitted by full
// gradient descent on ||w||^2 + ||max(0, 1 - y h)||^2.
struct RuleScoreModel {
  Eigen::VectorXd w;
  double b = 0.0;
  Eigen::VectorXd theta;  // per-rule activation scale actually used
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
  std::vector<double> objective_trace;
};

// Throws NonConvergence when the iteration cap is hit before the gradient
// norm drops below 1e-6.
RuleScoreModel score_rules(const RuleMatrix& rm, const LabelVector& labels);

// Same solve without the cap-hit throw; selection loops use this.
RuleScoreModel try_score_rules(const RuleMatrix& rm, const LabelVector& labels);

struct SelectionStep {
  std::string action;   // "remove_rule", "reject", "delete_item", ...
  std::string detail;
  double accuracy = 0.0;
  int rules_left = 0;
};

struct SelectionResult {
  std::vector<int> kept;  // indices into the input rule list
  double best_accuracy = 0.0;
  std::vector<SelectionStep> history;
};

// Backward elimination per the w_i^2 ranking with accuracy-gated acceptance
// on a fixed 80/20 held-out split; forced removals first while the rule
// count exceeds lambda1, never below lambda2.
SelectionResult rules_selection(const RuleMatrix& rm, const LabelVector& labels,
                                const SelectionBounds& bounds, uint64_t seed);

struct ItemReduceResult {
  std::vector<Rule> rules;
  double best_accuracy = 0.0;
  std::vector<SelectionStep> history;
};

// Greedy global item deletion: each pass removes the item whose deletion
// from every antecedent maximizes mean k-fold CV accuracy of a hinge-loss
// linear classifier on the rebuilt rule matrix; accepts while accuracy does
// not drop. Rules whose antecedent empties are discarded, duplicates merged.
ItemReduceResult item_reduce(const std::vector<Rule>& rules, const ValidatedDataset& ds,
                             int folds, uint64_t seed);

// Mean accuracy of sign(h) under the rule-score model, used by both the
// selection loop and its tests.
double rule_model_accuracy(const RuleScoreModel& model, const Eigen::MatrixXd& activations,
                           const Eigen::VectorXd& y);

}  // namespace stablerules
