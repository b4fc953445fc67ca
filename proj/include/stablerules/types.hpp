#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "stablerules/errors.hpp"

namespace stablerules {

enum class ColumnKind { continuous, categorical, binary };

// n x p design matrix plus column metadata. Rows are samples.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> column_names;
  std::vector<ColumnKind> column_kinds;

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index p() const { return values.cols(); }

  // -1 when absent
  int column_index(const std::string& name) const {
    for (size_t j = 0; j < column_names.size(); ++j) {
      if (column_names[j] == name) return static_cast<int>(j);
    }
    return -1;
  }
};

enum class LabelTask { binary, real };

struct LabelVector {
  Eigen::VectorXd values;
  LabelTask task = LabelTask::real;

  Eigen::Index n() const { return values.size(); }
};

// Nonnegative per-sample weights. After learning the sum is expected to sit
// within [1-delta, 1+delta]; the sum constraint is a soft penalty, not a
// projection, hence the tolerance.
struct SampleWeights {
  Eigen::VectorXd w;

  Eigen::Index n() const { return w.size(); }
  double sum() const { return w.sum(); }
};

void check_weights(const SampleWeights& sw, bool learned = false, double delta = 0.05);

// Index split into stable (S) and unstable (V) column sets.
struct SplitSpec {
  std::vector<int> stable_idx;
  std::vector<int> unstable_idx;
};

SplitSpec make_split_spec(int p_s, int p_v);
void check_split_spec(const SplitSpec& split, int p);

struct ValidatedDataset {
  FeatureMatrix features;
  LabelVector labels;

  Eigen::Index n() const { return features.n(); }
  Eigen::Index p() const { return features.p(); }
};

}  // namespace stablerules
