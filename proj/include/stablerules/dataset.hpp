#pragma once

#include <cstdint>
#include <utility>

#include "stablerules/types.hpp"

namespace stablerules {

// Enforces the container invariants: finite entries, unique column names,
// matching lengths, binary labels drawn from {-1,+1}.
ValidatedDataset validate_dataset(FeatureMatrix features, LabelVector labels);

// Disjoint partition with ceil(n * test_fraction) test rows; deterministic
// per seed. Throws InvalidFraction unless 0 < test_fraction < 1.
std::pair<ValidatedDataset, ValidatedDataset> split_train_test(
    const ValidatedDataset& ds, double test_fraction, uint64_t seed);

std::pair<std::vector<int>, std::vector<int>> split_indices(
    Eigen::Index n, double test_fraction, uint64_t seed);

ValidatedDataset take_rows(const ValidatedDataset& ds, const std::vector<int>& rows);

struct ColumnStats {
  double mean = 0.0;
  double stddev = 1.0;   // population (1/n) std
  bool standardized = false;
  bool constant = false;
};

struct StandardizeResult {
  FeatureMatrix data;
  std::vector<ColumnStats> stats;
};

// Continuous columns to mean 0 / population std 1; categorical and binary
// columns pass through, constant columns pass through flagged.
StandardizeResult standardize(const FeatureMatrix& features);

FeatureMatrix destandardize(const FeatureMatrix& features,
                            const std::vector<ColumnStats>& stats);

// Plain-matrix variant used by the experiment pipeline (all columns treated
// as continuous).
StandardizeResult standardize_matrix(const Eigen::MatrixXd& values);

}  // namespace stablerules
