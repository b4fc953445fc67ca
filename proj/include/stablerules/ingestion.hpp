#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stablerules/types.hpp"

namespace stablerules {

enum class ColumnRole { continuous, categorical, binary, label };

struct ColumnSchema {
  std::string name;
  ColumnRole role = ColumnRole::categorical;
  int bins = 0;  // optional binning hint for continuous columns
};

std::vector<ColumnSchema> schema_from_json(const std::string& text);
std::string schema_to_json(const std::vector<ColumnSchema>& schema);

// Missing cells: empty string, "NA" or "?".
struct RawColumn {
  std::vector<std::string> raw;   // categorical/binary/label cells
  std::vector<double> num;        // continuous cells
  std::vector<char> missing;
};

struct RawTable {
  std::vector<ColumnSchema> schema;
  std::vector<RawColumn> cols;

  size_t n() const { return cols.empty() ? 0 : cols[0].missing.size(); }
  int col_index(const std::string& name) const;
  int label_index() const;  // -1 when absent
};

// Typed load; header must contain every schema column (extra file columns are
// ignored). Parse failures report (row, column).
RawTable load_csv(const std::string& path, const std::vector<ColumnSchema>& schema);
RawTable table_from_csv_text(const std::string& text, const std::vector<ColumnSchema>& schema);

enum class BinStrategy { equal_width, quantile };

struct BinEdges {
  // k+1 boundaries; values are assigned to the bin whose half-open interval
  // [edges[b], edges[b+1]) contains them, the last bin being closed
  std::vector<double> edges;
};

// Replaces a continuous column with categorical bin labels "bin0".."bin{k-1}"
// and returns the fitted edges for test-set reuse.
BinEdges discretize(RawTable& table, const std::string& column, BinStrategy strategy, int k);

// Applies previously fitted edges; out-of-range values clamp to the first or
// last bin and set *clamped.
void apply_bins(RawTable& table, const std::string& column, const BinEdges& edges,
                bool* clamped = nullptr);

struct ImputeValue {
  std::string category;  // mode, for categorical/binary/label columns
  double number = 0.0;   // median, for continuous columns
};

struct ImputeStats {
  std::vector<ImputeValue> per_column;
};

ImputeStats fit_impute(const RawTable& table);
void apply_impute(RawTable& table, const ImputeStats& stats);

// Mode/median imputation followed by random minority oversampling (with
// replacement) to class parity; deterministic per seed.
RawTable impute_and_balance(const RawTable& table, uint64_t seed);

struct OneHotVocab {
  // per source column: observed category list (training order = sorted)
  std::vector<std::string> source;
  std::vector<ColumnRole> role;
  std::vector<std::vector<std::string>> categories;
};

struct OneHotResult {
  ValidatedDataset ds;
  OneHotVocab vocab;
  bool unseen = false;  // a test row carried a category absent at fit time
};

// One binary column per (column, category) pair; binary columns pass through
// as a single 0/1 column; the label column maps to -1/+1.
OneHotResult one_hot(const RawTable& table);
OneHotResult one_hot_apply(const RawTable& table, const OneHotVocab& vocab);

struct FeatureRanking {
  std::vector<std::string> order;                 // most important first
  std::vector<std::pair<int, double>> size_scores;  // subset size -> mean CV accuracy
  std::vector<std::string> best_subset;
};

// Recursive elimination ranked by squared coefficients of a hinge-loss linear
// model, scored by k-fold CV accuracy per subset size.
FeatureRanking feature_select(const ValidatedDataset& ds, const std::vector<int>& subset_sizes,
                              int folds, uint64_t seed);

// Fitted preprocessing bundle, serializable for exact test-time replay.
struct FittedPipeline {
  std::vector<ColumnSchema> schema;
  std::vector<std::optional<BinEdges>> bins;  // per schema column
  ImputeStats impute;
  OneHotVocab vocab;
};

std::string pipeline_to_json(const FittedPipeline& pipe);
FittedPipeline pipeline_from_json(const std::string& text);

// fit: impute -> discretize continuous columns (quantile(4) by default or the
// schema's bins hint) -> one-hot; apply: replay on new data.
struct PipelineResult {
  ValidatedDataset ds;
  FittedPipeline pipeline;
  bool clamped = false;
  bool unseen = false;
};

PipelineResult fit_pipeline(const RawTable& table, int default_bins = 4,
                            BinStrategy strategy = BinStrategy::quantile);
PipelineResult apply_pipeline(const RawTable& table, const FittedPipeline& pipe);

}  // namespace stablerules
