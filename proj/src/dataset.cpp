#include "stablerules/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "stablerules/rng.hpp"

namespace stablerules {

void check_weights(const SampleWeights& sw, bool learned, double delta) {
  for (Eigen::Index i = 0; i < sw.w.size(); ++i) {
    const double v = sw.w[i];
    if (!std::isfinite(v)) throw InvalidValue("weights: non-finite entry");
    if (v < 0.0) throw InvalidValue("weights: negative entry at " + std::to_string(i));
  }
  if (learned) {
    const double s = sw.w.sum();
    if (s < 1.0 - delta || s > 1.0 + delta) {
      throw InvalidValue("weights: sum " + std::to_string(s) +
                         " outside [1-delta, 1+delta], delta=" + std::to_string(delta));
    }
  }
}

SplitSpec make_split_spec(int p_s, int p_v) {
  SplitSpec s;
  s.stable_idx.resize(p_s);
  s.unstable_idx.resize(p_v);
  for (int j = 0; j < p_s; ++j) s.stable_idx[j] = j;
  for (int j = 0; j < p_v; ++j) s.unstable_idx[j] = p_s + j;
  return s;
}

void check_split_spec(const SplitSpec& split, int p) {
  std::vector<char> seen(p, 0);
  auto mark = [&](const std::vector<int>& idx) {
    for (int j : idx) {
      if (j < 0 || j >= p) throw DimensionMismatch("split: index out of range");
      if (seen[j]) throw InvalidValue("split: index sets not disjoint");
      seen[j] = 1;
    }
  };
  mark(split.stable_idx);
  mark(split.unstable_idx);
  for (int j = 0; j < p; ++j) {
    if (!seen[j]) throw InvalidValue("split: union does not cover all columns");
  }
}

ValidatedDataset validate_dataset(FeatureMatrix features, LabelVector labels) {
  const Eigen::Index n = features.values.rows();
  const Eigen::Index p = features.values.cols();
  if (n < 1 || p < 1) throw DimensionMismatch("dataset: need n >= 1 and p >= 1");
  if (labels.values.size() != n) {
    throw DimensionMismatch("dataset: " + std::to_string(n) + " rows but " +
                            std::to_string(labels.values.size()) + " labels");
  }
  if (!features.column_names.empty() &&
      features.column_names.size() != static_cast<size_t>(p)) {
    throw DimensionMismatch("dataset: column_names size mismatch");
  }
  if (features.column_names.empty()) {
    for (Eigen::Index j = 0; j < p; ++j) {
      features.column_names.push_back("x" + std::to_string(j));
    }
  }
  if (features.column_kinds.empty()) {
    features.column_kinds.assign(p, ColumnKind::continuous);
  } else if (features.column_kinds.size() != static_cast<size_t>(p)) {
    throw DimensionMismatch("dataset: column_kinds size mismatch");
  }
  std::unordered_set<std::string> names;
  for (const auto& name : features.column_names) {
    if (!names.insert(name).second) {
      throw InvalidValue("dataset: duplicate column name '" + name + "'");
    }
  }
  if (!features.values.allFinite()) throw InvalidValue("dataset: NaN/Inf in features");
  if (!labels.values.allFinite()) throw InvalidValue("dataset: NaN/Inf in labels");
  if (labels.task == LabelTask::binary) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double y = labels.values[i];
      if (y != 1.0 && y != -1.0) {
        throw InvalidLabel("dataset: binary label at row " + std::to_string(i) +
                           " is " + std::to_string(y) + ", expected -1 or +1");
      }
    }
  }
  return ValidatedDataset{std::move(features), std::move(labels)};
}

std::pair<std::vector<int>, std::vector<int>> split_indices(Eigen::Index n,
                                                            double test_fraction,
                                                            uint64_t seed) {
  if (!(test_fraction > 0.0) || !(test_fraction < 1.0)) {
    throw InvalidFraction("split: test_fraction must lie in (0, 1)");
  }
  const int n_test = static_cast<int>(std::ceil(static_cast<double>(n) * test_fraction));
  std::vector<int> idx(n);
  for (Eigen::Index i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  Rng rng(seed);
  rng.shuffle(idx);
  std::vector<int> test(idx.begin(), idx.begin() + n_test);
  std::vector<int> train(idx.begin() + n_test, idx.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {train, test};
}

ValidatedDataset take_rows(const ValidatedDataset& ds, const std::vector<int>& rows) {
  FeatureMatrix fm;
  fm.column_names = ds.features.column_names;
  fm.column_kinds = ds.features.column_kinds;
  fm.values.resize(static_cast<Eigen::Index>(rows.size()), ds.features.p());
  LabelVector lv;
  lv.task = ds.labels.task;
  lv.values.resize(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    fm.values.row(static_cast<Eigen::Index>(i)) = ds.features.values.row(rows[i]);
    lv.values[static_cast<Eigen::Index>(i)] = ds.labels.values[rows[i]];
  }
  return ValidatedDataset{std::move(fm), std::move(lv)};
}

std::pair<ValidatedDataset, ValidatedDataset> split_train_test(const ValidatedDataset& ds,
                                                               double test_fraction,
                                                               uint64_t seed) {
  auto [train_idx, test_idx] = split_indices(ds.n(), test_fraction, seed);
  return {take_rows(ds, train_idx), take_rows(ds, test_idx)};
}

namespace {

ColumnStats column_stats(const Eigen::VectorXd& col) {
  ColumnStats st;
  const double n = static_cast<double>(col.size());
  st.mean = col.sum() / n;
  const double var = (col.array() - st.mean).square().sum() / n;
  st.stddev = std::sqrt(var);
  st.constant = st.stddev == 0.0;
  return st;
}

}  // namespace

StandardizeResult standardize(const FeatureMatrix& features) {
  StandardizeResult out;
  out.data = features;
  out.stats.resize(features.p());
  for (Eigen::Index j = 0; j < features.p(); ++j) {
    if (features.column_kinds[j] != ColumnKind::continuous) continue;
    ColumnStats st = column_stats(features.values.col(j));
    if (!st.constant) {
      out.data.values.col(j) = (features.values.col(j).array() - st.mean) / st.stddev;
      st.standardized = true;
    }
    out.stats[static_cast<size_t>(j)] = st;
  }
  return out;
}

FeatureMatrix destandardize(const FeatureMatrix& features,
                            const std::vector<ColumnStats>& stats) {
  if (stats.size() != static_cast<size_t>(features.p())) {
    throw DimensionMismatch("destandardize: stats size mismatch");
  }
  FeatureMatrix out = features;
  for (Eigen::Index j = 0; j < features.p(); ++j) {
    const ColumnStats& st = stats[static_cast<size_t>(j)];
    if (st.standardized) {
      out.values.col(j) = features.values.col(j).array() * st.stddev + st.mean;
    }
  }
  return out;
}

StandardizeResult standardize_matrix(const Eigen::MatrixXd& values) {
  FeatureMatrix fm;
  fm.values = values;
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    fm.column_names.push_back("x" + std::to_string(j));
  }
  fm.column_kinds.assign(values.cols(), ColumnKind::continuous);
  return standardize(fm);
}

}  // namespace stablerules
