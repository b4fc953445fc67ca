#pragma once

#include <Eigen/Dense>
#include <string>
#include <unordered_map>
#include <vector>

#include "stablerules/types.hpp"

namespace stablerules {

using Item = int;

struct ItemCatalog {
  std::vector<std::string> names;
  std::unordered_map<std::string, Item> index;

  Item intern(const std::string& name);
  int find(const std::string& name) const;
  const std::string& name_of(Item item) const { return names[static_cast<size_t>(item)]; }
};

// Transaction database; each row is a sorted, duplicate-free item list.
struct TransactionDb {
  ItemCatalog catalog;
  std::vector<std::vector<Item>> rows;

  int n() const { return static_cast<int>(rows.size()); }
  void add(const std::vector<std::string>& items);
};

struct Itemset {
  std::vector<Item> items;  // sorted
  int count = 0;
  double support = 0.0;
};

// Level-wise Apriori. Returns every itemset with support >= min_support
// (closed downward); max_len = 0 means unbounded.
std::vector<Itemset> mine_frequent_itemsets(const TransactionDb& db, double min_support,
                                            int max_len = 0);

enum class ClassTag { positive, negative, mixed };

struct Rule {
  std::vector<std::string> antecedent;  // item names, sorted
  int consequent = 1;                   // +1 or -1
  double support = 0.0;
  double confidence = 0.0;
  double lift = 0.0;

  // selection-time feature scale: theta for positive-class rules, the
  // inverse of theta for negative-class rules
  double score() const { return consequent > 0 ? confidence : 1.0 / confidence; }
};

// Every rule A => consequent with A and A+consequent frequent and
// confidence >= min_confidence, computed from the provided supports.
std::vector<Rule> derive_rules(const std::vector<Itemset>& itemsets,
                               const ItemCatalog& catalog, double min_confidence,
                               Item consequent_item, int consequent_class);

struct RuleMatrix {
  Eigen::MatrixXd values;  // n x r one-zero
  std::vector<Rule> rules;
  ClassTag tag = ClassTag::mixed;

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index r() const { return values.cols(); }
};

// (i,j) = 1 iff sample i carries every antecedent item of rule j; the
// dataset must be one-hot (all feature entries 0/1).
RuleMatrix build_rule_matrix(const ValidatedDataset& ds, const std::vector<Rule>& rules,
                             ClassTag tag = ClassTag::mixed);

// Item names are the one-hot column names active in each row; when
// with_class_items is set the row label is appended as "class=+1"/"class=-1".
TransactionDb transactions_from_dataset(const ValidatedDataset& ds, bool with_class_items);

std::string class_item_name(int consequent_class);

// Recompute support/confidence/lift of an antecedent against a dataset;
// used after item deletions change a rule.
Rule restat_rule(const std::vector<std::string>& antecedent, int consequent_class,
                 const ValidatedDataset& ds);

// Line format: antecedent items joined by ',', then consequent, support,
// confidence, lift, tab-separated.
std::string rules_to_text(const std::vector<Rule>& rules);
std::vector<Rule> rules_from_text(const std::string& text);
std::string rules_to_json(const std::vector<Rule>& rules);

}  // namespace stablerules
