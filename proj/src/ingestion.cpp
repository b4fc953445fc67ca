#include "stablerules/ingestion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stablerules/csv.hpp"
#include "stablerules/dataset.hpp"
#include "stablerules/models.hpp"
#include "stablerules/rng.hpp"

namespace stablerules {

using json = nlohmann::json;

namespace {

std::string role_name(ColumnRole role) {
  switch (role) {
    case ColumnRole::continuous: return "continuous";
    case ColumnRole::categorical: return "categorical";
    case ColumnRole::binary: return "binary";
    case ColumnRole::label: return "label";
  }
  return "categorical";
}

ColumnRole role_from_name(const std::string& name) {
  for (ColumnRole r : {ColumnRole::continuous, ColumnRole::categorical, ColumnRole::binary,
                       ColumnRole::label}) {
    if (role_name(r) == name) return r;
  }
  throw SchemaMismatch("schema: unknown column role '" + name + "'");
}

bool is_missing_token(const std::string& s) {
  return s.empty() || s == "NA" || s == "?";
}

}  // namespace

std::vector<ColumnSchema> schema_from_json(const std::string& text) {
  const json j = json::parse(text);
  std::vector<ColumnSchema> schema;
  for (const auto& jc : j.at("columns")) {
    ColumnSchema c;
    c.name = jc.at("name").get<std::string>();
    c.role = role_from_name(jc.at("role").get<std::string>());
    if (jc.contains("bins")) c.bins = jc["bins"].get<int>();
    schema.push_back(std::move(c));
  }
  int labels = 0;
  for (const auto& c : schema) labels += c.role == ColumnRole::label ? 1 : 0;
  if (labels != 1) throw SchemaMismatch("schema: exactly one label column required");
  return schema;
}

std::string schema_to_json(const std::vector<ColumnSchema>& schema) {
  json cols = json::array();
  for (const auto& c : schema) {
    json jc = {{"name", c.name}, {"role", role_name(c.role)}};
    if (c.bins > 0) jc["bins"] = c.bins;
    cols.push_back(std::move(jc));
  }
  return json{{"columns", cols}}.dump(2);
}

int RawTable::col_index(const std::string& name) const {
  for (size_t j = 0; j < schema.size(); ++j) {
    if (schema[j].name == name) return static_cast<int>(j);
  }
  return -1;
}

int RawTable::label_index() const {
  for (size_t j = 0; j < schema.size(); ++j) {
    if (schema[j].role == ColumnRole::label) return static_cast<int>(j);
  }
  return -1;
}

RawTable table_from_csv_text(const std::string& text, const std::vector<ColumnSchema>& schema) {
  const CsvTable csv = parse_csv(text);
  std::vector<int> src(schema.size(), -1);
  for (size_t j = 0; j < schema.size(); ++j) {
    for (size_t h = 0; h < csv.header.size(); ++h) {
      if (csv.header[h] == schema[j].name) { src[j] = static_cast<int>(h); break; }
    }
    if (src[j] < 0) {
      throw SchemaMismatch("csv: header missing schema column '" + schema[j].name + "'");
    }
  }
  RawTable t;
  t.schema = schema;
  t.cols.resize(schema.size());
  const size_t n = csv.rows.size();
  for (size_t j = 0; j < schema.size(); ++j) {
    t.cols[j].missing.assign(n, 0);
    if (schema[j].role == ColumnRole::continuous) t.cols[j].num.assign(n, 0.0);
    else t.cols[j].raw.assign(n, "");
  }
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < schema.size(); ++j) {
      const std::string& cell = csv.rows[i][static_cast<size_t>(src[j])];
      if (is_missing_token(cell)) {
        t.cols[j].missing[i] = 1;
        continue;
      }
      if (schema[j].role == ColumnRole::continuous) {
        bool ok = false;
        const double v = parse_double(cell, &ok);
        if (!ok) {
          throw ParseError("csv: cell '" + cell + "' at row " + std::to_string(i + 2) +
                           ", column '" + schema[j].name + "' is not numeric");
        }
        t.cols[j].num[i] = v;
      } else {
        t.cols[j].raw[i] = cell;
      }
    }
  }
  return t;
}

RawTable load_csv(const std::string& path, const std::vector<ColumnSchema>& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("csv: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return table_from_csv_text(ss.str(), schema);
}

namespace {

std::vector<double> present_values(const RawColumn& col) {
  std::vector<double> v;
  for (size_t i = 0; i < col.missing.size(); ++i) {
    if (!col.missing[i]) v.push_back(col.num[i]);
  }
  return v;
}

int bin_of(double v, const BinEdges& e, bool* clamped) {
  const int k = static_cast<int>(e.edges.size()) - 1;
  if (v < e.edges.front()) {
    if (clamped) *clamped = true;
    return 0;
  }
  if (v >= e.edges.back()) {
    if (v > e.edges.back() && clamped) *clamped = true;
    return k - 1;
  }
  int b = static_cast<int>(std::upper_bound(e.edges.begin(), e.edges.end(), v) -
                           e.edges.begin()) - 1;
  if (b >= k) b = k - 1;
  return b;
}

void write_bin_labels(RawTable& table, int j, const BinEdges& edges, bool* clamped) {
  RawColumn& col = table.cols[static_cast<size_t>(j)];
  RawColumn out;
  out.missing = col.missing;
  out.raw.assign(col.missing.size(), "");
  for (size_t i = 0; i < col.missing.size(); ++i) {
    if (col.missing[i]) continue;
    out.raw[i] = "bin" + std::to_string(bin_of(col.num[i], edges, clamped));
  }
  col = std::move(out);
  table.schema[static_cast<size_t>(j)].role = ColumnRole::categorical;
}

}  // namespace

BinEdges discretize(RawTable& table, const std::string& column, BinStrategy strategy, int k) {
  if (k < 2) throw InvalidValue("discretize: need k >= 2");
  const int j = table.col_index(column);
  if (j < 0) throw SchemaMismatch("discretize: unknown column '" + column + "'");
  if (table.schema[static_cast<size_t>(j)].role != ColumnRole::continuous) {
    throw InvalidValue("discretize: column '" + column + "' is not continuous");
  }
  std::vector<double> v = present_values(table.cols[static_cast<size_t>(j)]);
  if (v.empty()) throw AllMissingColumn("discretize: column '" + column + "' is all missing");
  const auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
  if (*mn_it == *mx_it) {
    throw DegenerateColumn("discretize: column '" + column + "' is constant");
  }

  BinEdges edges;
  edges.edges.resize(static_cast<size_t>(k) + 1);
  if (strategy == BinStrategy::equal_width) {
    const double lo = *mn_it, hi = *mx_it;
    for (int b = 0; b <= k; ++b) {
      edges.edges[static_cast<size_t>(b)] = lo + (hi - lo) * b / static_cast<double>(k);
    }
  } else {
    std::sort(v.begin(), v.end());
    edges.edges.front() = v.front();
    edges.edges.back() = v.back();
    for (int b = 1; b < k; ++b) {
      // linear-interpolation quantile at q = b/k
      const double pos = (v.size() - 1) * static_cast<double>(b) / k;
      const size_t lo = static_cast<size_t>(std::floor(pos));
      const double frac = pos - static_cast<double>(lo);
      const double q = lo + 1 < v.size() ? v[lo] * (1 - frac) + v[lo + 1] * frac : v[lo];
      edges.edges[static_cast<size_t>(b)] = q;
    }
  }
  write_bin_labels(table, j, edges, nullptr);
  return edges;
}

void apply_bins(RawTable& table, const std::string& column, const BinEdges& edges,
                bool* clamped) {
  const int j = table.col_index(column);
  if (j < 0) throw SchemaMismatch("bins: unknown column '" + column + "'");
  if (table.schema[static_cast<size_t>(j)].role != ColumnRole::continuous) {
    throw InvalidValue("bins: column '" + column + "' is not continuous");
  }
  write_bin_labels(table, j, edges, clamped);
}

ImputeStats fit_impute(const RawTable& table) {
  ImputeStats stats;
  stats.per_column.resize(table.schema.size());
  for (size_t j = 0; j < table.schema.size(); ++j) {
    const RawColumn& col = table.cols[j];
    if (table.schema[j].role == ColumnRole::continuous) {
      std::vector<double> v = present_values(col);
      if (v.empty()) {
        throw AllMissingColumn("impute: column '" + table.schema[j].name + "' is all missing");
      }
      std::sort(v.begin(), v.end());
      const size_t n = v.size();
      stats.per_column[j].number =
          n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    } else {
      std::map<std::string, int> counts;
      for (size_t i = 0; i < col.missing.size(); ++i) {
        if (!col.missing[i]) ++counts[col.raw[i]];
      }
      if (counts.empty()) {
        throw AllMissingColumn("impute: column '" + table.schema[j].name + "' is all missing");
      }
      int best = -1;
      for (const auto& [cat, c] : counts) {
        if (c > best) { best = c; stats.per_column[j].category = cat; }
      }
    }
  }
  return stats;
}

void apply_impute(RawTable& table, const ImputeStats& stats) {
  if (stats.per_column.size() != table.schema.size()) {
    throw DimensionMismatch("impute: stats size mismatch");
  }
  for (size_t j = 0; j < table.schema.size(); ++j) {
    RawColumn& col = table.cols[j];
    for (size_t i = 0; i < col.missing.size(); ++i) {
      if (!col.missing[i]) continue;
      if (table.schema[j].role == ColumnRole::continuous) {
        col.num[i] = stats.per_column[j].number;
      } else {
        col.raw[i] = stats.per_column[j].category;
      }
      col.missing[i] = 0;
    }
  }
}

namespace {

RawTable take_table_rows(const RawTable& table, const std::vector<int>& rows) {
  RawTable out;
  out.schema = table.schema;
  out.cols.resize(table.cols.size());
  for (size_t j = 0; j < table.cols.size(); ++j) {
    const RawColumn& src = table.cols[j];
    RawColumn& dst = out.cols[j];
    dst.missing.reserve(rows.size());
    for (int i : rows) {
      dst.missing.push_back(src.missing[static_cast<size_t>(i)]);
      if (!src.num.empty()) dst.num.push_back(src.num[static_cast<size_t>(i)]);
      if (!src.raw.empty()) dst.raw.push_back(src.raw[static_cast<size_t>(i)]);
    }
  }
  return out;
}

}  // namespace

RawTable impute_and_balance(const RawTable& table, uint64_t seed) {
  const int lj = table.label_index();
  if (lj < 0) throw SchemaMismatch("balance: label column required");
  RawTable out = table;
  apply_impute(out, fit_impute(out));

  // class counts over the (now complete) label column
  std::map<std::string, std::vector<int>> by_class;
  const RawColumn& label = out.cols[static_cast<size_t>(lj)];
  for (size_t i = 0; i < label.raw.size(); ++i) {
    by_class[label.raw[i]].push_back(static_cast<int>(i));
  }
  if (by_class.size() < 2) return out;  // single class, nothing to balance

  size_t target = 0;
  for (const auto& [cls, rows] : by_class) target = std::max(target, rows.size());
  std::vector<int> extra;
  Rng rng(mix_seed(seed, 0xBA1A));
  for (const auto& [cls, rows] : by_class) {
    for (size_t need = rows.size(); need < target; ++need) {
      extra.push_back(rows[static_cast<size_t>(
          rng.uniform_int(0, static_cast<int>(rows.size()) - 1))]);
    }
  }
  if (extra.empty()) return out;
  std::vector<int> all(out.n());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  all.insert(all.end(), extra.begin(), extra.end());
  return take_table_rows(out, all);
}

namespace {

double label_value(const std::string& cell, const std::vector<std::string>& classes) {
  // two sorted classes map to -1/+1
  return cell == classes[0] ? -1.0 : 1.0;
}

OneHotResult one_hot_with_vocab(const RawTable& table, const OneHotVocab* fixed) {
  const int lj = table.label_index();
  if (lj < 0) throw SchemaMismatch("one-hot: label column required");
  const size_t n = table.n();
  if (n == 0) throw EmptyInput("one-hot: empty table");

  OneHotResult res;
  OneHotVocab vocab;
  if (fixed) {
    vocab = *fixed;
  } else {
    for (size_t j = 0; j < table.schema.size(); ++j) {
      const auto& sc = table.schema[j];
      if (sc.role == ColumnRole::label) continue;
      if (sc.role == ColumnRole::continuous) {
        throw InvalidValue("one-hot: column '" + sc.name + "' is continuous; discretize first");
      }
      vocab.source.push_back(sc.name);
      vocab.role.push_back(sc.role);
      if (sc.role == ColumnRole::binary) {
        vocab.categories.push_back({});
        continue;
      }
      std::set<std::string> cats;
      for (size_t i = 0; i < n; ++i) {
        if (!table.cols[j].missing[i]) cats.insert(table.cols[j].raw[i]);
      }
      vocab.categories.emplace_back(cats.begin(), cats.end());
    }
  }

  // label classes from vocab? labels are mapped per sorted class pair
  std::set<std::string> label_set;
  const RawColumn& label_col = table.cols[static_cast<size_t>(lj)];
  for (size_t i = 0; i < n; ++i) {
    if (label_col.missing[i]) throw InvalidLabel("one-hot: missing label value");
    label_set.insert(label_col.raw[i]);
  }
  std::vector<std::string> classes(label_set.begin(), label_set.end());
  if (classes.size() == 2 && classes[0] == "-1" && classes[1] == "+1") {
    // already signed
  } else if (classes.size() > 2) {
    throw InvalidLabel("one-hot: more than two label classes");
  }

  // output width
  std::vector<std::string> names;
  std::vector<ColumnKind> kinds;
  for (size_t g = 0; g < vocab.source.size(); ++g) {
    if (vocab.role[g] == ColumnRole::binary) {
      names.push_back(vocab.source[g]);
      kinds.push_back(ColumnKind::binary);
    } else {
      for (const auto& cat : vocab.categories[g]) {
        names.push_back(vocab.source[g] + "=" + cat);
        kinds.push_back(ColumnKind::binary);
      }
    }
  }

  FeatureMatrix fm;
  fm.column_names = names;
  fm.column_kinds = kinds;
  fm.values.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(names.size()));
  Eigen::Index out_col = 0;
  for (size_t g = 0; g < vocab.source.size(); ++g) {
    const int j = table.col_index(vocab.source[g]);
    if (j < 0) throw SchemaMismatch("one-hot: column '" + vocab.source[g] + "' missing");
    const RawColumn& col = table.cols[static_cast<size_t>(j)];
    if (vocab.role[g] == ColumnRole::binary) {
      for (size_t i = 0; i < n; ++i) {
        if (col.missing[i]) throw InvalidValue("one-hot: missing binary cell; impute first");
        const std::string& cell = col.raw[i];
        double v;
        if (cell == "0" || cell == "0.0") v = 0.0;
        else if (cell == "1" || cell == "1.0") v = 1.0;
        else {
          bool ok = false;
          v = parse_double(cell, &ok);
          if (!ok || (v != 0.0 && v != 1.0)) {
            throw InvalidValue("one-hot: binary column '" + vocab.source[g] +
                               "' carries non 0/1 value '" + cell + "'");
          }
        }
        fm.values(static_cast<Eigen::Index>(i), out_col) = v;
      }
      ++out_col;
      continue;
    }
    const auto& cats = vocab.categories[g];
    for (size_t i = 0; i < n; ++i) {
      if (col.missing[i]) throw InvalidValue("one-hot: missing cell; impute first");
      const auto it = std::lower_bound(cats.begin(), cats.end(), col.raw[i]);
      if (it == cats.end() || *it != col.raw[i]) {
        res.unseen = true;  // unseen category: all-zero group for this row
        continue;
      }
      fm.values(static_cast<Eigen::Index>(i),
                out_col + static_cast<Eigen::Index>(it - cats.begin())) = 1.0;
    }
    out_col += static_cast<Eigen::Index>(cats.size());
  }

  LabelVector lv;
  lv.task = LabelTask::binary;
  lv.values.resize(static_cast<Eigen::Index>(n));
  for (size_t i = 0; i < n; ++i) {
    const std::string& cell = label_col.raw[i];
    double y;
    if (cell == "+1" || cell == "1" || cell == "1.0") y = 1.0;
    else if (cell == "-1") y = -1.0;
    else if (classes.size() == 2) y = label_value(cell, classes);
    else throw InvalidLabel("one-hot: cannot map label '" + cell + "' to -1/+1");
    lv.values[static_cast<Eigen::Index>(i)] = y;
  }

  res.ds = validate_dataset(std::move(fm), std::move(lv));
  res.vocab = std::move(vocab);
  return res;
}

}  // namespace

OneHotResult one_hot(const RawTable& table) { return one_hot_with_vocab(table, nullptr); }

OneHotResult one_hot_apply(const RawTable& table, const OneHotVocab& vocab) {
  return one_hot_with_vocab(table, &vocab);
}

FeatureRanking feature_select(const ValidatedDataset& ds, const std::vector<int>& subset_sizes,
                              int folds, uint64_t seed) {
  if (folds < 2) throw InvalidValue("feature select: folds must be >= 2");
  if (ds.labels.task != LabelTask::binary) {
    throw InvalidLabel("feature select: binary labels required");
  }
  const Eigen::Index n = ds.n();
  const int p = static_cast<int>(ds.p());

  // fixed folds reused across subset sizes
  std::vector<int> idx(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = static_cast<int>(i);
  Rng rng(mix_seed(seed, 0xFEA7));
  rng.shuffle(idx);
  std::vector<std::vector<int>> fold_rows(static_cast<size_t>(folds));
  for (size_t i = 0; i < idx.size(); ++i) fold_rows[i % static_cast<size_t>(folds)].push_back(idx[i]);

  const StandardizeResult std_x = standardize(ds.features);
  const Eigen::MatrixXd& X = std_x.data.values;
  const Eigen::VectorXd& y = ds.labels.values;
  SvmConfig cfg;
  cfg.C = 1.0;
  cfg.tolerance = 1e-6;

  auto subset_matrix = [&](const std::vector<int>& cols, const std::vector<int>& rows,
                           Eigen::MatrixXd& Xs, Eigen::VectorXd& ys) {
    Xs.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    ys.resize(static_cast<Eigen::Index>(rows.size()));
    for (size_t i = 0; i < rows.size(); ++i) {
      for (size_t c = 0; c < cols.size(); ++c) {
        Xs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = X(rows[i], cols[c]);
      }
      ys[static_cast<Eigen::Index>(i)] = y[rows[i]];
    }
  };

  auto cv_accuracy = [&](const std::vector<int>& cols) {
    double acc = 0.0;
    for (size_t f = 0; f < fold_rows.size(); ++f) {
      std::vector<int> train_rows;
      for (size_t g = 0; g < fold_rows.size(); ++g) {
        if (g != f) train_rows.insert(train_rows.end(), fold_rows[g].begin(), fold_rows[g].end());
      }
      Eigen::MatrixXd Xt, Xv;
      Eigen::VectorXd yt, yv;
      subset_matrix(cols, train_rows, Xt, yt);
      subset_matrix(cols, fold_rows[f], Xv, yv);
      const LinearModel m =
          fit_weighted_svm(Xt, yt, Eigen::VectorXd::Zero(Xt.rows()), cfg);
      int correct = 0;
      for (Eigen::Index i = 0; i < yv.size(); ++i) {
        const double h = Xv.row(i).dot(m.beta) + m.b;
        if ((h >= 0 ? 1.0 : -1.0) == yv[i]) ++correct;
      }
      acc += static_cast<double>(correct) / static_cast<double>(yv.size());
    }
    return acc / static_cast<double>(fold_rows.size());
  };

  std::vector<int> current(static_cast<size_t>(p));
  for (int j = 0; j < p; ++j) current[static_cast<size_t>(j)] = j;
  std::vector<std::string> eliminated;  // worst first
  FeatureRanking rank;

  while (!current.empty()) {
    const double acc = cv_accuracy(current);
    rank.size_scores.push_back({static_cast<int>(current.size()), acc});
    if (current.size() == 1) {
      eliminated.push_back(ds.features.column_names[static_cast<size_t>(current[0])]);
      break;
    }
    Eigen::MatrixXd Xall;
    Eigen::VectorXd yall;
    std::vector<int> all_rows(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) all_rows[static_cast<size_t>(i)] = static_cast<int>(i);
    subset_matrix(current, all_rows, Xall, yall);
    const LinearModel m =
        fit_weighted_svm(Xall, yall, Eigen::VectorXd::Zero(Xall.rows()), cfg);
    int arg = 0;
    double worst = m.beta[0] * m.beta[0];
    for (Eigen::Index j = 1; j < m.beta.size(); ++j) {
      const double v = m.beta[j] * m.beta[j];
      if (v < worst) { worst = v; arg = static_cast<int>(j); }
    }
    eliminated.push_back(ds.features.column_names[static_cast<size_t>(current[static_cast<size_t>(arg)])]);
    current.erase(current.begin() + arg);
  }

  rank.order.assign(eliminated.rbegin(), eliminated.rend());
  std::reverse(rank.size_scores.begin(), rank.size_scores.end());  // size 1 first

  if (!subset_sizes.empty()) {
    std::vector<std::pair<int, double>> filtered;
    for (const auto& [size, score] : rank.size_scores) {
      if (std::find(subset_sizes.begin(), subset_sizes.end(), size) != subset_sizes.end()) {
        filtered.push_back({size, score});
      }
    }
    if (!filtered.empty()) rank.size_scores = std::move(filtered);
  }

  int best_size = rank.size_scores.front().first;
  double best_score = rank.size_scores.front().second;
  for (const auto& [size, score] : rank.size_scores) {
    if (score > best_score + 1e-12) { best_score = score; best_size = size; }
  }
  rank.best_subset.assign(rank.order.begin(), rank.order.begin() + best_size);
  return rank;
}

std::string pipeline_to_json(const FittedPipeline& pipe) {
  json cols = json::array();
  for (size_t j = 0; j < pipe.schema.size(); ++j) {
    json jc = {{"name", pipe.schema[j].name}, {"role", role_name(pipe.schema[j].role)}};
    if (pipe.bins[j].has_value()) jc["edges"] = pipe.bins[j]->edges;
    if (pipe.schema[j].role == ColumnRole::continuous) {
      jc["fill"] = pipe.impute.per_column[j].number;
    } else {
      jc["fill"] = pipe.impute.per_column[j].category;
    }
    cols.push_back(std::move(jc));
  }
  json j;
  j["columns"] = std::move(cols);
  json groups = json::array();
  for (size_t g = 0; g < pipe.vocab.source.size(); ++g) {
    groups.push_back({{"source", pipe.vocab.source[g]},
                      {"role", role_name(pipe.vocab.role[g])},
                      {"categories", pipe.vocab.categories[g]}});
  }
  j["one_hot"] = std::move(groups);
  return j.dump(2);
}

FittedPipeline pipeline_from_json(const std::string& text) {
  const json j = json::parse(text);
  FittedPipeline pipe;
  for (const auto& jc : j.at("columns")) {
    ColumnSchema sc;
    sc.name = jc.at("name").get<std::string>();
    sc.role = role_from_name(jc.at("role").get<std::string>());
    pipe.schema.push_back(sc);
    if (jc.contains("edges")) {
      BinEdges e;
      e.edges = jc["edges"].get<std::vector<double>>();
      pipe.bins.push_back(e);
    } else {
      pipe.bins.push_back(std::nullopt);
    }
    ImputeValue iv;
    if (sc.role == ColumnRole::continuous) iv.number = jc.at("fill").get<double>();
    else iv.category = jc.at("fill").get<std::string>();
    pipe.impute.per_column.push_back(std::move(iv));
  }
  for (const auto& jg : j.at("one_hot")) {
    pipe.vocab.source.push_back(jg.at("source").get<std::string>());
    pipe.vocab.role.push_back(role_from_name(jg.at("role").get<std::string>()));
    pipe.vocab.categories.push_back(jg.at("categories").get<std::vector<std::string>>());
  }
  return pipe;
}

PipelineResult fit_pipeline(const RawTable& table, int default_bins, BinStrategy strategy) {
  PipelineResult res;
  RawTable work = table;
  res.pipeline.schema = table.schema;
  res.pipeline.impute = fit_impute(work);
  apply_impute(work, res.pipeline.impute);
  res.pipeline.bins.assign(table.schema.size(), std::nullopt);
  for (size_t j = 0; j < table.schema.size(); ++j) {
    if (table.schema[j].role != ColumnRole::continuous) continue;
    const int k = table.schema[j].bins > 1 ? table.schema[j].bins : default_bins;
    res.pipeline.bins[j] = discretize(work, table.schema[j].name, strategy, k);
  }
  OneHotResult oh = one_hot(work);
  res.ds = std::move(oh.ds);
  res.pipeline.vocab = std::move(oh.vocab);
  res.unseen = oh.unseen;
  return res;
}

PipelineResult apply_pipeline(const RawTable& table, const FittedPipeline& pipe) {
  PipelineResult res;
  res.pipeline = pipe;
  RawTable work = table;
  if (work.schema.size() != pipe.schema.size()) {
    throw SchemaMismatch("pipeline: schema width mismatch");
  }
  apply_impute(work, pipe.impute);
  for (size_t j = 0; j < pipe.schema.size(); ++j) {
    if (!pipe.bins[j].has_value()) continue;
    bool clamped = false;
    apply_bins(work, pipe.schema[j].name, *pipe.bins[j], &clamped);
    res.clamped = res.clamped || clamped;
  }
  OneHotResult oh = one_hot_apply(work, pipe.vocab);
  res.ds = std::move(oh.ds);
  res.unseen = oh.unseen;
  return res;
}

}  // namespace stablerules
