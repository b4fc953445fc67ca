// stablerules command-line interface: synthetic benchmark generation, rule
// mining and selection, decorrelation weights, model training/evaluation,
// and the experiment reproductions.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "stablerules/csv.hpp"
#include "stablerules/dataset.hpp"
#include "stablerules/rng.hpp"
#include "stablerules/decorrelation.hpp"
#include "stablerules/evaluation.hpp"
#include "stablerules/ingestion.hpp"
#include "stablerules/mining.hpp"
#include "stablerules/models.hpp"
#include "stablerules/selection.hpp"
#include "stablerules/synthesis.hpp"

using json = nlohmann::json;
using namespace stablerules;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNonConvergence = 3;

// ---------------------------------------------------------------------------
// flat key-value config file with precedence: CLI flag > file > default

class ConfigFile {
 public:
  void load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    bool blank = true;
    for (char c : text) {
      if (!isspace(static_cast<unsigned char>(c))) { blank = false; break; }
    }
    if (blank) return;  // empty file keeps every default
    json j;
    try {
      j = json::parse(text);
    } catch (const std::exception& e) {
      throw ParseError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigTypeError("config: top level must be an object");
    for (const auto& [key, value] : j.items()) values_[key] = value;
  }

  // every lookup registers the key as known; leftovers are typos
  template <typename T>
  void apply(const std::string& key, T& target) {
    known_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return;
    try {
      target = it->second.get<T>();
    } catch (const std::exception&) {
      throw ConfigTypeError("config: key '" + key + "' has the wrong type");
    }
  }

  // the key is legitimate but an explicit CLI flag outranks the file
  void mark(const std::string& key) { known_.insert(key); }

  void finish() const {
    for (const auto& [key, value] : values_) {
      if (!known_.count(key)) throw UnknownKey("config: unknown key '" + key + "'");
    }
  }

  json echo() const {
    json j = json::object();
    for (const auto& [key, value] : values_) j[key] = value;
    return j;
  }

 private:
  std::map<std::string, json> values_;
  std::set<std::string> known_;
};

uint64_t resolve_seed(uint64_t flag_seed) {
  if (const char* env = std::getenv("STABLERULES_SEED")) {
    return static_cast<uint64_t>(std::strtoull(env, nullptr, 10));
  }
  return flag_seed;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sidecar_path(const std::string& out) {
  const size_t dot = out.find_last_of('.');
  const size_t slash = out.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return out + ".json";
  }
  const std::string stem = out.substr(0, dot);
  if (out.substr(dot) == ".json") return stem + ".meta.json";
  return stem + ".json";
}

void write_sidecar(const std::string& out, const json& config) {
  json j;
  j["artifact"] = out;
  j["config"] = config;
  write_text(sidecar_path(out), j.dump(2) + "\n");
}

// numeric csv -> matrix + optional label column
struct LoadedData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  bool has_label = false;
  std::vector<std::string> feature_names;
};

LoadedData load_numeric_csv(const std::string& path, const std::string& label_col) {
  const CsvTable t = read_csv(path);
  LoadedData d;
  int label_idx = -1;
  for (size_t j = 0; j < t.header.size(); ++j) {
    if (t.header[j] == label_col) label_idx = static_cast<int>(j);
    else d.feature_names.push_back(t.header[j]);
  }
  d.has_label = label_idx >= 0;
  const Eigen::Index n = static_cast<Eigen::Index>(t.rows.size());
  if (n == 0) throw EmptyInput("csv: no data rows in " + path);
  d.X.resize(n, static_cast<Eigen::Index>(d.feature_names.size()));
  if (d.has_label) d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index col = 0;
    for (size_t j = 0; j < t.header.size(); ++j) {
      bool ok = false;
      const double v = parse_double(t.rows[static_cast<size_t>(i)][j], &ok);
      if (!ok) {
        throw ParseError("csv: non-numeric cell at row " + std::to_string(i + 2) +
                         ", column '" + t.header[j] + "'");
      }
      if (static_cast<int>(j) == label_idx) d.y[i] = v;
      else d.X(i, col++) = v;
    }
  }
  return d;
}

Eigen::VectorXd load_weights_csv(const std::string& path, Eigen::Index expected_n) {
  const CsvTable t = read_csv(path);
  if (t.header.size() != 1 || t.header[0] != "weight") {
    throw SchemaMismatch("weights: expected a single 'weight' column in " + path);
  }
  Eigen::VectorXd w(static_cast<Eigen::Index>(t.rows.size()));
  for (size_t i = 0; i < t.rows.size(); ++i) {
    bool ok = false;
    w[static_cast<Eigen::Index>(i)] = parse_double(t.rows[i][0], &ok);
    if (!ok) throw ParseError("weights: bad number at row " + std::to_string(i + 2));
  }
  if (expected_n >= 0 && w.size() != expected_n) {
    throw DimensionMismatch("weights: " + std::to_string(w.size()) + " rows but data has " +
                            std::to_string(expected_n));
  }
  return w;
}

// dataset loading for the mining/selection path: either a schema-driven raw
// table run through the fitted pipeline, or an already one-hot CSV
struct MiningData {
  ValidatedDataset ds;
  std::optional<FittedPipeline> pipeline;
};

MiningData load_mining_data(const std::string& data_path, const std::string& schema_path,
                            const std::string& pipeline_path, const std::string& label_col,
                            bool balance, int bins, uint64_t seed) {
  MiningData out;
  if (!schema_path.empty()) {
    const auto schema = schema_from_json(read_text(schema_path));
    RawTable table = load_csv(data_path, schema);
    if (!pipeline_path.empty()) {
      const FittedPipeline pipe = pipeline_from_json(read_text(pipeline_path));
      out.ds = apply_pipeline(table, pipe).ds;
      out.pipeline = pipe;
      return out;
    }
    if (balance) table = impute_and_balance(table, mix_seed(seed, 0xBA));
    PipelineResult fit = fit_pipeline(table, bins);
    out.ds = std::move(fit.ds);
    out.pipeline = std::move(fit.pipeline);
    return out;
  }
  // no schema: columns are already one-hot, the label column carries +-1
  const LoadedData d = load_numeric_csv(data_path, label_col);
  if (!d.has_label) throw SchemaMismatch("mine: label column '" + label_col + "' not found");
  FeatureMatrix fm;
  fm.values = d.X;
  fm.column_names = d.feature_names;
  fm.column_kinds.assign(static_cast<size_t>(d.X.cols()), ColumnKind::binary);
  LabelVector lv;
  lv.task = LabelTask::binary;
  lv.values = d.y;
  out.ds = validate_dataset(std::move(fm), std::move(lv));
  return out;
}

void write_weights_csv(const std::string& path, const Eigen::VectorXd& w) {
  CsvTable t;
  t.header = {"weight"};
  for (Eigen::Index i = 0; i < w.size(); ++i) t.rows.push_back({format_double(w[i])});
  write_csv(path, t);
}

// ---------------------------------------------------------------------------

struct CommonOpts {
  std::string config_path;
  uint64_t seed = 1;
  int jobs = 2;
};

int cmd_synth(const CommonOpts& common, ConfigFile& cfgfile, const std::string& env_name,
              int n, int p, double noise_std, double split, double bias_r, int pool_factor,
              const std::string& out) {
  const uint64_t seed = resolve_seed(common.seed);
  const EnvKind kind = env_kind_from_name(env_name);
  cfgfile.finish();

  Eigen::MatrixXd S, V;
  Eigen::VectorXd y;
  if (bias_r != 0.0) {
    BiasSpec bias;
    bias.r = bias_r;
    check_bias_spec(bias);
    const EnvSpec spec = make_env_spec(kind, n * pool_factor, p, seed, noise_std, split);
    const Covariates cov = gen_covariates(spec);
    const LabelVector labels = gen_labels(cov.S, cov.V, noise_std, mix_seed(seed, 0x77));
    const auto rows = bias_subsample(cov.S, cov.V, bias, p, n, mix_seed(seed, 0xB1));
    S.resize(static_cast<Eigen::Index>(rows.size()), spec.p_s);
    V.resize(static_cast<Eigen::Index>(rows.size()), spec.p_v);
    y.resize(static_cast<Eigen::Index>(rows.size()));
    for (size_t i = 0; i < rows.size(); ++i) {
      S.row(static_cast<Eigen::Index>(i)) = cov.S.row(rows[i]);
      V.row(static_cast<Eigen::Index>(i)) = cov.V.row(rows[i]);
      y[static_cast<Eigen::Index>(i)] = labels.values[rows[i]];
    }
  } else {
    const EnvSpec spec = make_env_spec(kind, n, p, seed, noise_std, split);
    const Covariates cov = gen_covariates(spec);
    S = cov.S;
    V = cov.V;
    y = gen_labels(S, V, noise_std, mix_seed(seed, 0x77)).values;
  }
  write_synth_csv(out, S, V, y);

  json cfg = {{"command", "synth"}, {"env", env_name},     {"n", n},
              {"p", p},             {"p_s", S.cols()},      {"p_v", V.cols()},
              {"rows", S.rows()},   {"noise_std", noise_std}, {"stable_split", split},
              {"bias_r", bias_r},   {"pool_factor", pool_factor}, {"seed", seed}};
  write_sidecar(out, cfg);
  std::cout << "wrote " << out << " (" << S.rows() << " rows)\n";
  return kExitOk;
}

int cmd_mine(const CommonOpts& common, ConfigFile& cfgfile, const std::string& data,
             const std::string& schema, const std::string& label_col, bool no_balance,
             int bins, double min_support, double min_confidence, int max_len,
             const std::string& out, const std::string& pipeline_out) {
  const uint64_t seed = resolve_seed(common.seed);
  cfgfile.finish();
  const MiningData md =
      load_mining_data(data, schema, "", label_col, !no_balance, bins, seed);

  const TransactionDb db = transactions_from_dataset(md.ds, true);
  // max itemset length = antecedent bound + the class item
  const auto itemsets = mine_frequent_itemsets(db, min_support, max_len > 0 ? max_len + 1 : 0);
  std::vector<Rule> rules;
  for (int cls : {1, -1}) {
    const int item = db.catalog.find(class_item_name(cls));
    if (item < 0) continue;
    const auto part = derive_rules(itemsets, db.catalog, min_confidence, item, cls);
    rules.insert(rules.end(), part.begin(), part.end());
  }
  write_text(out, rules_to_text(rules));

  json cfg = {{"command", "mine"},          {"data", data},
              {"schema", schema},           {"label_col", label_col},
              {"balance", !no_balance},     {"bins", bins},
              {"min_support", min_support}, {"min_confidence", min_confidence},
              {"max_antecedent", max_len},  {"rules", rules.size()},
              {"seed", seed}};
  json side;
  side["artifact"] = out;
  side["config"] = cfg;
  side["rules"] = json::parse(rules_to_json(rules));
  write_text(sidecar_path(out), side.dump(2) + "\n");
  if (md.pipeline.has_value() && !pipeline_out.empty()) {
    write_text(pipeline_out, pipeline_to_json(*md.pipeline));
  }
  std::cout << "mined " << rules.size() << " rules -> " << out << "\n";
  return kExitOk;
}

int cmd_select(const CommonOpts& common, ConfigFile& cfgfile, const std::string& data,
               const std::string& schema, const std::string& pipeline,
               const std::string& label_col, const std::string& rules_path, int lambda1,
               int lambda2, int folds, const std::string& out) {
  const uint64_t seed = resolve_seed(common.seed);
  cfgfile.finish();
  const MiningData md = load_mining_data(data, schema, pipeline, label_col, false, 4, seed);
  const std::vector<Rule> rules = rules_from_text(read_text(rules_path));
  if (rules.empty()) throw EmptyRuleSet("select: no rules in " + rules_path);

  const RuleMatrix rm = build_rule_matrix(md.ds, rules);
  SelectionBounds bounds;
  bounds.lambda1 = lambda1;
  bounds.lambda2 = lambda2;
  const SelectionResult sel = rules_selection(rm, md.ds.labels, bounds, seed);
  std::vector<Rule> selected;
  for (int idx : sel.kept) selected.push_back(rules[static_cast<size_t>(idx)]);
  const ItemReduceResult reduced = item_reduce(selected, md.ds, folds, mix_seed(seed, 0x17));
  write_text(out, rules_to_text(reduced.rules));

  json history = json::array();
  for (const auto& step : sel.history) {
    history.push_back({{"stage", "rules_selection"}, {"action", step.action},
                       {"detail", step.detail}, {"accuracy", step.accuracy},
                       {"rules_left", step.rules_left}});
  }
  for (const auto& step : reduced.history) {
    history.push_back({{"stage", "item_reduce"}, {"action", step.action},
                       {"detail", step.detail}, {"accuracy", step.accuracy},
                       {"rules_left", step.rules_left}});
  }
  json side;
  side["artifact"] = out;
  side["config"] = {{"command", "select"}, {"data", data},      {"rules", rules_path},
                    {"lambda1", lambda1},  {"lambda2", lambda2}, {"folds", folds},
                    {"seed", seed}};
  side["selection_accuracy"] = sel.best_accuracy;
  side["cv_accuracy"] = reduced.best_accuracy;
  side["history"] = std::move(history);
  write_text(sidecar_path(out), side.dump(2) + "\n");
  std::cout << "selected " << reduced.rules.size() << " of " << rules.size() << " rules -> "
            << out << "\n";
  return kExitOk;
}

int cmd_decorrelate(const CommonOpts& common, ConfigFile& cfgfile, const std::string& data,
                    const std::string& label_col, bool no_standardize, DecorConfig decor,
                    const std::string& out) {
  const uint64_t seed = resolve_seed(common.seed);
  (void)seed;  // deterministic given the data; echoed for provenance only
  cfgfile.finish();
  const LoadedData d = load_numeric_csv(data, label_col);
  Eigen::MatrixXd X = d.X;
  if (!no_standardize) X = standardize_matrix(X).data.values;
  const LearnWeightsResult res = learn_weights(X, decor);
  write_weights_csv(out, res.weights.w);

  json cfg = {{"command", "decorrelate"},
              {"data", data},
              {"label_col", label_col},
              {"standardize", !no_standardize},
              {"degree", decor.degree},
              {"gamma", decor.gamma},
              {"lambda5", decor.lambda5},
              {"lambda6", decor.lambda6},
              {"max_iters", decor.max_iters},
              {"step_size", decor.step_size},
              {"tolerance", decor.tolerance},
              {"seed", resolve_seed(common.seed)},
              {"objective", res.objective},
              {"iterations", res.iterations},
              {"converged", res.converged},
              {"rescaled", res.rescaled}};
  write_sidecar(out, cfg);
  std::cout << "learned weights for " << X.rows() << " samples -> " << out
            << " (objective " << res.objective << ", " << res.iterations << " iters)\n";
  return res.converged ? kExitOk : kExitNonConvergence;
}

int cmd_train(const CommonOpts& common, ConfigFile& cfgfile, const std::string& data,
              const std::string& label_col, const std::string& weights_path,
              const std::string& rules_path, const std::string& schema,
              const std::string& pipeline, const std::string& model_name, double lambda,
              SvmConfig svm, const std::string& out) {
  const uint64_t seed = resolve_seed(common.seed);
  cfgfile.finish();
  const ModelKind kind = model_kind_from_name(model_name);

  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  if (!rules_path.empty()) {
    const MiningData md = load_mining_data(data, schema, pipeline, label_col, false, 4, seed);
    const std::vector<Rule> rules = rules_from_text(read_text(rules_path));
    const RuleMatrix rm = build_rule_matrix(md.ds, rules);
    X = rm.values;
    y = md.ds.labels.values;
  } else {
    const LoadedData d = load_numeric_csv(data, label_col);
    if (!d.has_label) throw SchemaMismatch("train: label column '" + label_col + "' not found");
    X = d.X;
    y = d.y;
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(X.rows());
  if (!weights_path.empty()) {
    w = load_weights_csv(weights_path, X.rows());
    const double mean = w.mean();
    if (mean > 0) w /= mean;  // margin costs expect weights commensurate with C
  }

  LinearModel model;
  SampleWeights dwr_weights;
  switch (kind) {
    case ModelKind::ols:
    case ModelKind::ridge:
    case ModelKind::lasso:
      model = fit_linear_baseline(X, y, kind, lambda);
      break;
    case ModelKind::dwr: {
      const DwrResult res = fit_dwr(X, y, lambda > 0 ? lambda : 600.0);
      model = res.model;
      dwr_weights = res.weights;
      break;
    }
    case ModelKind::svm: {
      SvmConfig plain = svm;
      plain.C = plain.C > 0 ? plain.C : 1.0;
      model = fit_weighted_svm(X, y, Eigen::VectorXd::Zero(X.rows()), plain);
      model.kind = ModelKind::svm;
      break;
    }
    case ModelKind::wsvm:
      model = fit_weighted_svm(X, y, w, svm);
      break;
    case ModelKind::svr: {
      SvmConfig plain = svm;
      plain.C = plain.C > 0 ? plain.C : 1.0;
      model = fit_weighted_svr(X, y, Eigen::VectorXd::Zero(X.rows()), plain);
      model.kind = ModelKind::svr;
      break;
    }
    case ModelKind::wsvr:
      model = fit_weighted_svr(X, y, w, svm);
      break;
  }

  json meta = {{"command", "train"},   {"data", data},           {"label_col", label_col},
               {"weights", weights_path}, {"rules", rules_path}, {"model", model_name},
               {"lambda", lambda},     {"C", svm.C},             {"epsilon", svm.epsilon},
               {"seed", seed},         {"n", X.rows()},          {"p", X.cols()}};
  write_text(out, model_to_json(model, meta.dump()) + "\n");
  std::cout << "trained " << model_name << " on " << X.rows() << " samples -> " << out << "\n";
  return model.converged ? kExitOk : kExitNonConvergence;
}

int cmd_evaluate(const CommonOpts& common, ConfigFile& cfgfile, const std::string& model_path,
                 const std::string& data, const std::string& label_col,
                 const std::string& task, const std::string& scores_a,
                 const std::string& scores_b, const std::string& weights_path,
                 const std::string& out) {
  cfgfile.finish();
  json result;
  result["command"] = "evaluate";
  result["task"] = task;

  if (task == "spearman") {
    const CsvTable ta = read_csv(scores_a);
    const CsvTable tb = read_csv(scores_b);
    auto column = [](const CsvTable& t, const std::string& path) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(t.rows.size()));
      for (size_t i = 0; i < t.rows.size(); ++i) {
        bool ok = false;
        v[static_cast<Eigen::Index>(i)] = parse_double(t.rows[i][0], &ok);
        if (!ok) throw ParseError("scores: bad number in " + path);
      }
      return v;
    };
    const double rho = spearman(column(ta, scores_a), column(tb, scores_b));
    result["spearman"] = rho;
    std::cout << "spearman " << rho << "\n";
  } else if (task == "profile") {
    const LoadedData d = load_numeric_csv(data, label_col);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(d.X.rows());
    if (!weights_path.empty()) w = load_weights_csv(weights_path, d.X.rows());
    const CorrelationProfile prof = correlation_profile(d.X, w);
    result["mean_abs"] = {{"linear", prof.mean_abs(ProfilePanel::linear)},
                          {"square", prof.mean_abs(ProfilePanel::square)},
                          {"cube", prof.mean_abs(ProfilePanel::cube)},
                          {"exp", prof.mean_abs(ProfilePanel::expo)}};
    std::cout << "profile mean |corr|: linear " << prof.mean_abs(ProfilePanel::linear)
              << ", square " << prof.mean_abs(ProfilePanel::square) << ", cube "
              << prof.mean_abs(ProfilePanel::cube) << ", exp "
              << prof.mean_abs(ProfilePanel::expo) << "\n";
  } else {
    const LinearModel model = model_from_json(read_text(model_path));
    const LoadedData d = load_numeric_csv(data, label_col);
    if (!d.has_label) {
      throw SchemaMismatch("evaluate: label column '" + label_col + "' not found");
    }
    if (task == "regression") {
      const double e = rmse(predict(model, d.X), d.y);
      result["rmse"] = e;
      std::cout << "rmse " << e << "\n";
    } else if (task == "classification") {
      const ClassificationMetrics m = classification_metrics(predict_class(model, d.X), d.y);
      result["accuracy"] = m.accuracy;
      result["precision"] = m.precision;
      result["recall"] = m.recall;
      result["f1"] = m.f1;
      result["degenerate"] = m.degenerate;
      std::cout << "accuracy " << m.accuracy << " precision " << m.precision << " recall "
                << m.recall << " f1 " << m.f1 << "\n";
    } else {
      throw InvalidValue("evaluate: unknown task '" + task + "'");
    }
  }
  result["seed"] = resolve_seed(common.seed);
  if (!out.empty()) write_text(out, result.dump(2) + "\n");
  return kExitOk;
}

int emit_experiment(const ExperimentReport& report, const std::string& out) {
  write_report_csv(out, report);
  json side;
  side["artifact"] = out;
  side["report"] = json::parse(report_to_json(report));
  write_text(sidecar_path(out), side.dump(2) + "\n");
  if (report.config.test_rmse) {
    const size_t dot = out.find_last_of('.');
    const std::string stem = dot == std::string::npos ? out : out.substr(0, dot);
    const std::string rpath = stem + "_rsweep.csv";
    write_rsweep_csv(rpath, report);
    write_sidecar(rpath, json::parse(experiment_config_to_json(report.config)));
  }
  std::cerr << "experiment wall time " << report.wall_time_seconds << "s\n";
  bool any_errors = false;
  for (const auto& cell : report.cells) {
    for (const auto& ms : cell.methods) any_errors = any_errors || !ms.errors.empty();
  }
  return any_errors ? kExitNonConvergence : kExitOk;
}

int cmd_table1(const CommonOpts& common, ConfigFile& cfgfile, ExperimentConfig cfg,
               const std::string& out) {
  cfg.base_seed = resolve_seed(cfg.base_seed);
  cfg.jobs = common.jobs;
  cfgfile.finish();
  const ExperimentReport report = run_experiment(cfg);
  const int status = emit_experiment(report, out);
  std::cout << "wrote " << out << "\n";
  return status;
}

int cmd_table2(const CommonOpts& common, ConfigFile& cfgfile, ExperimentConfig base,
               std::vector<double> c_grid, const std::string& out) {
  base.base_seed = resolve_seed(base.base_seed);
  base.jobs = common.jobs;
  base.methods = {Method::our};
  cfgfile.finish();

  CsvTable t;
  t.header = {"C", "repeats", "beta_s_err", "beta_s_std", "beta_v_err", "beta_v_std",
              "beta_err", "beta_std", "rmse_mean"};
  json cells = json::array();
  for (double c : c_grid) {
    ExperimentConfig cfg = base;
    cfg.svm.C = c;
    const ExperimentReport report = run_experiment(cfg);
    const MethodCellStats& ms = report.cells[0].methods[0];
    double rmse_mean = std::numeric_limits<double>::quiet_NaN();
    if (!ms.rmse_per_r.empty()) {
      double acc = 0;
      int cnt = 0;
      for (const auto& per_r : ms.rmse_per_r) {
        if (!per_r.empty()) { acc += ms.mean(per_r); ++cnt; }
      }
      if (cnt > 0) rmse_mean = acc / cnt;
    }
    t.rows.push_back({format_double(c), std::to_string(ms.beta_s.size()),
                      format_double(ms.mean(ms.beta_s)), format_double(ms.stddev(ms.beta_s)),
                      format_double(ms.mean(ms.beta_v)), format_double(ms.stddev(ms.beta_v)),
                      format_double(ms.mean(ms.beta_e)), format_double(ms.stddev(ms.beta_e)),
                      format_double(rmse_mean)});
    json jc = json::parse(report_to_json(report));
    jc["C"] = c;
    cells.push_back(std::move(jc));
  }
  write_csv(out, t);
  json side;
  side["artifact"] = out;
  side["config"] = json::parse(experiment_config_to_json(base));
  side["c_grid"] = c_grid;
  side["runs"] = std::move(cells);
  write_text(sidecar_path(out), side.dump(2) + "\n");
  std::cout << "wrote " << out << "\n";
  return kExitOk;
}

int cmd_fig2(const CommonOpts& common, ConfigFile& cfgfile, int n, int p, int n_seeds,
             uint64_t base_seed, double noise_std, double split, DecorConfig decor,
             double dwr_lambda2, const std::string& out) {
  const uint64_t seed0 = resolve_seed(base_seed);
  cfgfile.finish();

  CsvTable t;
  t.header = {"seed", "weighting", "panel", "i", "j", "corr"};
  const char* panel_names[4] = {"linear", "square", "cube", "exp"};
  json summary = json::array();
  double sums[3][4] = {{0}};

  for (int s = 0; s < n_seeds; ++s) {
    const uint64_t seed = mix_seed(seed0, 0xF16, static_cast<uint64_t>(s));
    const EnvSpec spec = make_env_spec(EnvKind::nonlinear, n, p, seed, noise_std, split);
    const Covariates cov = gen_covariates(spec);
    const LabelVector labels = gen_labels(cov.S, cov.V, noise_std, mix_seed(seed, 0x77));
    Eigen::MatrixXd X(n, p);
    X.leftCols(spec.p_s) = cov.S;
    X.rightCols(spec.p_v) = cov.V;

    const Eigen::VectorXd uniform = Eigen::VectorXd::Ones(n);
    const LearnWeightsResult lw = learn_weights(standardize_matrix(X).data.values, decor);
    const DwrResult dwr = fit_dwr(X, labels.values, dwr_lambda2);

    const std::pair<std::string, Eigen::VectorXd> weightings[3] = {
        {"uniform", uniform}, {"ours", lw.weights.w}, {"dwr", dwr.weights.w}};
    for (int wi = 0; wi < 3; ++wi) {
      const CorrelationProfile prof = correlation_profile(cov.V, weightings[wi].second);
      const Eigen::MatrixXd* panels[4] = {&prof.linear, &prof.square, &prof.cube, &prof.expo};
      for (int pi = 0; pi < 4; ++pi) {
        for (int i = 0; i < spec.p_v; ++i) {
          for (int j = 0; j < spec.p_v; ++j) {
            if (i == j) continue;
            t.rows.push_back({std::to_string(s), weightings[wi].first, panel_names[pi],
                              std::to_string(i), std::to_string(j),
                              format_double((*panels[pi])(i, j))});
          }
        }
        sums[wi][pi] += prof.mean_abs(static_cast<ProfilePanel>(pi));
      }
    }
  }
  write_csv(out, t);

  for (int wi = 0; wi < 3; ++wi) {
    const char* names[3] = {"uniform", "ours", "dwr"};
    summary.push_back({{"weighting", names[wi]},
                       {"linear", sums[wi][0] / n_seeds},
                       {"square", sums[wi][1] / n_seeds},
                       {"cube", sums[wi][2] / n_seeds},
                       {"exp", sums[wi][3] / n_seeds}});
  }
  json side;
  side["artifact"] = out;
  side["config"] = {{"command", "reproduce-fig2"}, {"n", n},           {"p", p},
                    {"seeds", n_seeds},            {"base_seed", seed0}, {"noise_std", noise_std},
                    {"stable_split", split},       {"gamma", decor.gamma},
                    {"lambda5", decor.lambda5},    {"lambda6", decor.lambda6},
                    {"degree", decor.degree},      {"dwr_lambda2", dwr_lambda2}};
  side["mean_abs_corr"] = std::move(summary);
  write_text(sidecar_path(out), side.dump(2) + "\n");
  std::cout << "wrote " << out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stablerules: decorrelation-weighted rule learning and its benchmarks"};
  app.require_subcommand(1);

  CommonOpts common;
  ConfigFile cfgfile;
  std::string config_path;
  app.add_option("--config", config_path, "flat key-value JSON config file")
      ->each([&](const std::string& path) { cfgfile.load(path); });

  try {
    // defaults shared by several subcommands; config file may override, CLI wins
    DecorConfig decor;
    SvmConfig svm;
    ExperimentConfig exp_defaults;

    // synth ------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a synthetic environment CSV");
    std::string synth_env = "nonlinear", synth_out = "synth.csv";
    int synth_n = 1000, synth_p = 10, synth_pool = 10;
    double synth_noise = 0.3, synth_split = 0.4, synth_bias_r = 0.0;
    synth->add_option("--env", synth_env, "linear|nonlinear");
    synth->add_option("--n", synth_n, "sample count");
    synth->add_option("--p", synth_p, "total variable count");
    synth->add_option("--seed", common.seed, "base seed");
    synth->add_option("--noise-std", synth_noise, "label noise std");
    synth->add_option("--split", synth_split, "stable fraction of p");
    synth->add_option("--bias-r", synth_bias_r, "bias rate r, 0 disables the shift");
    synth->add_option("--pool-factor", synth_pool, "pool multiple for biased draws");
    synth->add_option("--out", synth_out, "output CSV path")->required();

    // mine ---------------------------------------------------------------
    auto* mine = app.add_subcommand("mine", "mine association rules from a dataset");
    std::string mine_data, mine_schema, mine_label = "Y", mine_out = "rules.txt";
    std::string mine_pipeline_out;
    bool mine_no_balance = false;
    int mine_bins = 4, mine_maxlen = 4;
    double mine_support = 0.05, mine_conf = 0.6;
    mine->add_option("--data", mine_data)->required();
    mine->add_option("--schema", mine_schema, "column schema JSON for raw CSVs");
    mine->add_option("--label-col", mine_label, "label column for one-hot CSVs");
    mine->add_flag("--no-balance", mine_no_balance, "skip imputation/oversampling");
    mine->add_option("--bins", mine_bins, "quantile bins for continuous columns");
    mine->add_option("--min-support", mine_support);
    mine->add_option("--min-confidence", mine_conf);
    mine->add_option("--max-len", mine_maxlen, "max antecedent length, 0 unbounded");
    mine->add_option("--seed", common.seed);
    mine->add_option("--out", mine_out)->required();
    mine->add_option("--pipeline-out", mine_pipeline_out, "write the fitted pipeline JSON");

    // select -------------------------------------------------------------
    auto* select = app.add_subcommand("select", "rule selection and item reduction");
    std::string sel_data, sel_schema, sel_pipeline, sel_label = "Y", sel_rules, sel_out;
    int sel_l1 = 1 << 20, sel_l2 = 1, sel_folds = 5;
    select->add_option("--data", sel_data)->required();
    select->add_option("--schema", sel_schema);
    select->add_option("--pipeline", sel_pipeline, "fitted pipeline JSON from mine");
    select->add_option("--label-col", sel_label);
    select->add_option("--rules", sel_rules)->required();
    select->add_option("--lambda1", sel_l1, "max selected rules");
    select->add_option("--lambda2", sel_l2, "min selected rules");
    select->add_option("--folds", sel_folds);
    select->add_option("--seed", common.seed);
    select->add_option("--out", sel_out)->required();

    // decorrelate ----------------------------------------------------------
    auto* decor_cmd = app.add_subcommand("decorrelate", "learn decorrelating sample weights");
    std::string dec_data, dec_label = "Y", dec_out = "weights.csv";
    bool dec_no_std = false;
    decor_cmd->add_option("--data", dec_data)->required();
    decor_cmd->add_option("--label-col", dec_label, "excluded column, if present");
    decor_cmd->add_flag("--no-standardize", dec_no_std);
    decor_cmd->add_option("--degree", decor.degree);
    decor_cmd->add_option("--gamma", decor.gamma);
    decor_cmd->add_option("--lambda5", decor.lambda5);
    decor_cmd->add_option("--lambda6", decor.lambda6);
    decor_cmd->add_option("--max-iters", decor.max_iters);
    decor_cmd->add_option("--step-size", decor.step_size);
    decor_cmd->add_option("--tolerance", decor.tolerance);
    decor_cmd->add_option("--seed", common.seed);
    decor_cmd->add_option("--out", dec_out)->required();

    // train --------------------------------------------------------------
    auto* train = app.add_subcommand("train", "fit a model");
    std::string tr_data, tr_label = "Y", tr_weights, tr_rules, tr_schema, tr_pipeline;
    std::string tr_model = "wsvr", tr_out = "model.json";
    double tr_lambda = 0.1;
    train->add_option("--data", tr_data)->required();
    train->add_option("--label-col", tr_label);
    train->add_option("--weights", tr_weights, "sample weight CSV");
    train->add_option("--rules", tr_rules, "train on the rule-matrix representation");
    train->add_option("--schema", tr_schema);
    train->add_option("--pipeline", tr_pipeline);
    train->add_option("--model", tr_model, "ols|ridge|lasso|dwr|svm|wsvm|svr|wsvr");
    train->add_option("--lambda", tr_lambda, "ridge/lasso penalty or dwr lambda2");
    train->add_option("--C", svm.C);
    train->add_option("--epsilon", svm.epsilon);
    train->add_option("--svm-max-iters", svm.max_iters);
    train->add_option("--svm-tolerance", svm.tolerance);
    train->add_option("--seed", common.seed);
    train->add_option("--out", tr_out)->required();

    // evaluate -------------------------------------------------------------
    auto* eval = app.add_subcommand("evaluate", "apply a model / compute metrics");
    std::string ev_model, ev_data, ev_label = "Y", ev_task = "regression";
    std::string ev_scores_a, ev_scores_b, ev_weights, ev_out;
    eval->add_option("--model", ev_model);
    eval->add_option("--data", ev_data);
    eval->add_option("--label-col", ev_label);
    eval->add_option("--task", ev_task, "regression|classification|spearman|profile");
    eval->add_option("--scores-a", ev_scores_a, "first rating column CSV (spearman)");
    eval->add_option("--scores-b", ev_scores_b, "second rating column CSV (spearman)");
    eval->add_option("--weights", ev_weights, "weight CSV (profile)");
    eval->add_option("--out", ev_out, "metrics JSON path");

    // reproduce-* ----------------------------------------------------------
    ExperimentConfig t1 = exp_defaults;
    int t1_n = 1000, t1_m = 10;
    bool t1_no_rmse = false;
    std::string t1_env = "nonlinear", t1_out = "table1.csv";
    auto* table1 = app.add_subcommand("reproduce-table1", "beta-error grid per method");
    table1->add_option("--n", t1_n);
    table1->add_option("--m", t1_m, "total variable count");
    table1->add_option("--repeats", t1.repeats);
    table1->add_option("--seed", t1.base_seed);
    table1->add_option("--env", t1_env);
    table1->add_option("--train-r", t1.train_r, "training bias rate, 0 for unshifted");
    table1->add_option("--pool-factor", t1.test_pool_factor);
    table1->add_option("--gamma", t1.decor.gamma);
    table1->add_option("--lambda5", t1.decor.lambda5);
    table1->add_option("--lambda6", t1.decor.lambda6);
    table1->add_option("--C", t1.svm.C);
    table1->add_option("--epsilon", t1.svm.epsilon);
    table1->add_option("--dwr-lambda2", t1.dwr_lambda2);
    table1->add_option("--lasso-lambda", t1.lasso_lambda);
    table1->add_option("--ridge-lambda", t1.ridge_lambda);
    table1->add_flag("--no-rmse", t1_no_rmse, "skip the shifted-environment RMSE sweep");
    table1->add_option("--jobs", common.jobs);
    table1->add_option("--out", t1_out)->required();

    ExperimentConfig t2 = exp_defaults;
    int t2_n = 1000, t2_m = 10;
    double t2_lambda = 1e-4;
    std::vector<double> t2_c_grid = {0.0, 0.5, 1.0};
    bool t2_no_rmse = false;
    std::string t2_out = "table2.csv";
    auto* table2 = app.add_subcommand("reproduce-table2", "C ablation at fixed penalties");
    table2->add_option("--n", t2_n);
    table2->add_option("--m", t2_m);
    table2->add_option("--repeats", t2.repeats)->default_val(20);
    table2->add_option("--seed", t2.base_seed);
    table2->add_option("--gamma", t2.decor.gamma);
    table2->add_option("--lambda", t2_lambda, "sets both lambda5 and lambda6");
    table2->add_option("--train-r", t2.train_r);
    table2->add_option("--c-grid", t2_c_grid, "C values to sweep");
    table2->add_flag("--no-rmse", t2_no_rmse);
    table2->add_option("--jobs", common.jobs);
    table2->add_option("--out", t2_out)->required();

    int f2_n = 2000, f2_p = 10, f2_seeds = 20;
    uint64_t f2_seed = 1;
    double f2_noise = 0.3, f2_split = 0.4, f2_dwr_lambda2 = 600.0;
    DecorConfig f2_decor;
    std::string f2_out = "fig2.csv";
    auto* fig2 = app.add_subcommand("reproduce-fig2", "weighted correlation profiles");
    fig2->add_option("--n", f2_n);
    fig2->add_option("--p", f2_p);
    fig2->add_option("--seeds", f2_seeds, "number of environment draws");
    fig2->add_option("--seed", f2_seed, "base seed");
    fig2->add_option("--noise-std", f2_noise);
    fig2->add_option("--split", f2_split);
    fig2->add_option("--gamma", f2_decor.gamma);
    fig2->add_option("--lambda5", f2_decor.lambda5);
    fig2->add_option("--lambda6", f2_decor.lambda6);
    fig2->add_option("--degree", f2_decor.degree);
    fig2->add_option("--dwr-lambda2", f2_dwr_lambda2);
    fig2->add_option("--out", f2_out)->required();

    app.parse(argc, argv);

    // config-file values fill in anything the CLI left at its default;
    // an explicit flag keeps the key known but outranks the file
    auto merge = [&](CLI::App* cmd, const std::string& flag, const std::string& key,
                     auto& var) {
      if (cmd->count(flag) == 0) cfgfile.apply(key, var);
      else cfgfile.mark(key);
    };

    if (synth->parsed()) {
      merge(synth, "--seed", "seed", common.seed);
      merge(synth, "--noise-std", "noise_std", synth_noise);
      merge(synth, "--split", "stable_split", synth_split);
      merge(synth, "--pool-factor", "pool_factor", synth_pool);
      return cmd_synth(common, cfgfile, synth_env, synth_n, synth_p, synth_noise,
                       synth_split, synth_bias_r, synth_pool, synth_out);
    }
    if (mine->parsed()) {
      merge(mine, "--min-support", "min_support", mine_support);
      merge(mine, "--min-confidence", "min_confidence", mine_conf);
      merge(mine, "--max-len", "max_antecedent", mine_maxlen);
      merge(mine, "--bins", "bins", mine_bins);
      merge(mine, "--seed", "seed", common.seed);
      return cmd_mine(common, cfgfile, mine_data, mine_schema, mine_label, mine_no_balance,
                      mine_bins, mine_support, mine_conf, mine_maxlen, mine_out,
                      mine_pipeline_out);
    }
    if (select->parsed()) {
      merge(select, "--lambda1", "lambda1", sel_l1);
      merge(select, "--lambda2", "lambda2", sel_l2);
      merge(select, "--folds", "folds", sel_folds);
      merge(select, "--seed", "seed", common.seed);
      return cmd_select(common, cfgfile, sel_data, sel_schema, sel_pipeline, sel_label,
                        sel_rules, sel_l1, sel_l2, sel_folds, sel_out);
    }
    if (decor_cmd->parsed()) {
      merge(decor_cmd, "--gamma", "gamma", decor.gamma);
      merge(decor_cmd, "--lambda5", "lambda5", decor.lambda5);
      merge(decor_cmd, "--lambda6", "lambda6", decor.lambda6);
      merge(decor_cmd, "--degree", "degree", decor.degree);
      merge(decor_cmd, "--max-iters", "decor_max_iters", decor.max_iters);
      merge(decor_cmd, "--step-size", "decor_step", decor.step_size);
      merge(decor_cmd, "--tolerance", "decor_tol", decor.tolerance);
      merge(decor_cmd, "--seed", "seed", common.seed);
      check_decor_config(decor);
      return cmd_decorrelate(common, cfgfile, dec_data, dec_label, dec_no_std, decor, dec_out);
    }
    if (train->parsed()) {
      merge(train, "--C", "C", svm.C);
      merge(train, "--epsilon", "epsilon", svm.epsilon);
      merge(train, "--lambda", "lambda", tr_lambda);
      merge(train, "--seed", "seed", common.seed);
      check_svm_config(svm);
      return cmd_train(common, cfgfile, tr_data, tr_label, tr_weights, tr_rules, tr_schema,
                       tr_pipeline, tr_model, tr_lambda, svm, tr_out);
    }
    if (eval->parsed()) {
      merge(eval, "--task", "task", ev_task);
      merge(eval, "--label-col", "label_col", ev_label);
      return cmd_evaluate(common, cfgfile, ev_model, ev_data, ev_label, ev_task, ev_scores_a,
                          ev_scores_b, ev_weights, ev_out);
    }
    if (table1->parsed()) {
      t1.sizes = {{t1_n, t1_m}};
      t1.envs = {env_kind_from_name(t1_env)};
      t1.test_rmse = !t1_no_rmse;
      merge(table1, "--seed", "seed", t1.base_seed);
      merge(table1, "--gamma", "gamma", t1.decor.gamma);
      merge(table1, "--lambda5", "lambda5", t1.decor.lambda5);
      merge(table1, "--lambda6", "lambda6", t1.decor.lambda6);
      merge(table1, "--train-r", "train_r", t1.train_r);
      merge(table1, "--C", "C", t1.svm.C);
      merge(table1, "--epsilon", "epsilon", t1.svm.epsilon);
      merge(table1, "--dwr-lambda2", "dwr_lambda2", t1.dwr_lambda2);
      merge(table1, "--lasso-lambda", "lasso_lambda", t1.lasso_lambda);
      merge(table1, "--ridge-lambda", "ridge_lambda", t1.ridge_lambda);
      merge(table1, "--pool-factor", "pool_factor", t1.test_pool_factor);
      merge(table1, "--jobs", "jobs", common.jobs);
      return cmd_table1(common, cfgfile, t1, t1_out);
    }
    if (table2->parsed()) {
      t2.sizes = {{t2_n, t2_m}};
      t2.test_rmse = !t2_no_rmse;
      merge(table2, "--seed", "seed", t2.base_seed);
      merge(table2, "--gamma", "gamma", t2.decor.gamma);
      merge(table2, "--lambda", "lambda", t2_lambda);
      merge(table2, "--train-r", "train_r", t2.train_r);
      merge(table2, "--jobs", "jobs", common.jobs);
      t2.decor.lambda5 = t2_lambda;
      t2.decor.lambda6 = t2_lambda;
      return cmd_table2(common, cfgfile, t2, t2_c_grid, t2_out);
    }
    if (fig2->parsed()) {
      merge(fig2, "--seed", "seed", f2_seed);
      merge(fig2, "--gamma", "gamma", f2_decor.gamma);
      merge(fig2, "--lambda5", "lambda5", f2_decor.lambda5);
      merge(fig2, "--lambda6", "lambda6", f2_decor.lambda6);
      merge(fig2, "--dwr-lambda2", "dwr_lambda2", f2_dwr_lambda2);
      return cmd_fig2(common, cfgfile, f2_n, f2_p, f2_seeds, f2_seed, f2_noise, f2_split,
                      f2_decor, f2_dwr_lambda2, f2_out);
    }
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  } catch (const UnknownKey& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigTypeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
