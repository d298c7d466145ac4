#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rsv/csv.hpp"
#include "rsv/error.hpp"
#include "rsv/learners/model.hpp"
#include "rsv/random.hpp"
#include "rsv/risk.hpp"

namespace rsv::evaluation {

using learners::Dataset;
using learners::ImportanceRanking;
using learners::Model;
using learners::ModelKind;

// ---------------------------------------------------------------------------
// Confusion matrix and per-class metrics

/// Rows are the true class, columns the predicted class.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};

  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& row : counts)
      for (auto c : row) t += c;
    return t;
  }

  std::size_t trace() const { return counts[0][0] + counts[1][1] + counts[2][2]; }

  double accuracy() const {
    const auto t = total();
    return t == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(t);
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(std::span<const RiskClass> truth, std::span<const RiskClass> pred) {
  if (truth.size() != pred.size())
    fail(ErrorKind::LengthMismatch, "truth has " + std::to_string(truth.size()) + " labels, predictions " +
                                        std::to_string(pred.size()));
  if (truth.empty()) fail(ErrorKind::EmptyInput, "confusion matrix of no samples");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < truth.size(); ++i) ++m.counts[index_of(truth[i])][index_of(pred[i])];
  return m;
}

struct OneVsRest {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline OneVsRest one_vs_rest(const ConfusionMatrix& m, RiskClass c) {
  const auto k = index_of(c);
  OneVsRest o;
  for (std::size_t i = 0; i < kNumClasses; ++i)
    for (std::size_t j = 0; j < kNumClasses; ++j) {
      const auto v = m.counts[i][j];
      if (i == k && j == k) o.tp += v;
      else if (j == k) o.fp += v;
      else if (i == k) o.fn += v;
      else o.tn += v;
    }
  return o;
}

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// F-1 is computed as 2TP / (2TP + FP + FN), the same rational as the
/// harmonic mean of precision and recall. Each value is one rounding away
/// from the exact fraction.
inline ClassMetrics prf1(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassMetrics m;
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (tp > 0) m.f1 = static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
  return m;
}

inline ClassMetrics prf1(const ConfusionMatrix& m, RiskClass c) {
  const auto o = one_vs_rest(m, c);
  return prf1(o.tp, o.fp, o.fn);
}

inline double macro_f1(const ConfusionMatrix& m) {
  double s = 0.0;
  for (auto c : kAllClasses) s += prf1(m, c).f1;
  return s / static_cast<double>(kNumClasses);
}

// ---------------------------------------------------------------------------
// ROC

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  RiskClass positive_class = RiskClass::LowRisk;
  std::vector<RocPoint> points;
  double auc = 0.0;
};

/// Sweeps the threshold down through the distinct scores. Tied scores move
/// the curve diagonally, which gives them half credit in the area. The area
/// is accumulated as an integer count of concordant pairs (ties doubled
/// halves) and divided once. It equals the Mann-Whitney statistic.
inline RocCurve roc_auc(std::span<const double> scores, const std::vector<bool>& positive,
                        RiskClass positive_class = RiskClass::LowRisk) {
  if (scores.size() != positive.size())
    fail(ErrorKind::LengthMismatch, "scores and labels differ in length");
  std::uint64_t n_pos = 0, n_neg = 0;
  for (bool p : positive) (p ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0) fail(ErrorKind::SingleClassLabels, "ROC needs both positive and negative labels");
  for (double s : scores)
    if (!std::isfinite(s)) fail(ErrorKind::NonFinite, "ROC score is not finite");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.positive_class = positive_class;
  curve.points.push_back({0.0, 0.0});
  std::uint64_t tp = 0, fp = 0;
  unsigned __int128 twice_area = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::uint64_t dtp = 0, dfp = 0;
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) (positive[order[i]] ? dtp : dfp) += 1;
    twice_area += static_cast<unsigned __int128>(dfp) * (2 * tp + dtp);
    tp += dtp;
    fp += dfp;
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                            static_cast<double>(tp) / static_cast<double>(n_pos)});
  }
  curve.auc = static_cast<double>(twice_area) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
  return curve;
}

inline void write_roc(std::ostream& out, const RocCurve& curve) {
  out << "positive_class,false_positive_rate,true_positive_rate\n";
  for (const auto& p : curve.points)
    csv::write_row(out, {std::string(to_string(curve.positive_class)), csv::format_double(p.fpr),
                         csv::format_double(p.tpr)});
}

// ---------------------------------------------------------------------------
// Stratified k-fold

/// Members of each class are shuffled with their own derived generator, then
/// dealt round-robin into folds. The dealing position carries over from one
/// class to the next, which keeps total fold sizes within one of each other.
inline std::vector<std::vector<std::size_t>> kfold_stratified(std::span<const RiskClass> labels, std::size_t k,
                                                              std::uint64_t seed) {
  if (k < 2) fail(ErrorKind::InvalidArgument, "k-fold needs k >= 2");
  std::array<std::vector<std::size_t>, kNumClasses> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[index_of(labels[i])].push_back(i);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t next = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto& m = members[c];
    if (m.empty()) continue;
    if (m.size() < k)
      fail(ErrorKind::ClassTooSmall, std::string(to_string(class_at(c))) + " has " + std::to_string(m.size()) +
                                         " rows, fewer than k = " + std::to_string(k));
    Rng rng(derive_seed(derive_seed(seed, "kfold"), c));
    rng.shuffle(std::span<std::size_t>(m));
    for (auto i : m) {
      folds[next].push_back(i);
      next = (next + 1) % k;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

// ---------------------------------------------------------------------------
// Model fitting by parameter type

using learners::BoostingParams;
using learners::ForestParams;
using learners::TreeParams;

using LearnerParams = std::variant<TreeParams, ForestParams, BoostingParams>;

inline ModelKind kind_of(const LearnerParams& p) { return static_cast<ModelKind>(p.index()); }

inline Model fit_model(const Dataset& data, const LearnerParams& params) {
  return std::visit(
      [&](const auto& p) -> Model {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, TreeParams>) return learners::grow_tree(data, p);
        else if constexpr (std::is_same_v<P, ForestParams>) return learners::fit_forest(data, p);
        else return learners::fit_boosting(data, p);
      },
      params);
}

inline std::vector<RiskClass> predict_all(const Model& model, const Dataset& data) {
  std::vector<RiskClass> out(data.size());
  std::vector<double> x(data.n_features());
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t f = 0; f < x.size(); ++f) x[f] = data.value(i, f);
    out[i] = argmax_severe(learners::predict_proba(model, x));
  }
  return out;
}

inline nlohmann::json params_to_json(const LearnerParams& params) {
  return std::visit(
      [](const auto& p) -> nlohmann::json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, TreeParams>)
          return {{"max_depth", p.max_depth},
                  {"min_samples_split", p.min_samples_split},
                  {"min_samples_leaf", p.min_samples_leaf},
                  {"complexity_parameter", p.complexity_parameter}};
        else if constexpr (std::is_same_v<P, ForestParams>)
          return {{"n_trees", p.n_trees},
                  {"mtry", p.mtry},
                  {"bootstrap", p.bootstrap},
                  {"seed", p.seed},
                  {"max_depth", p.max_depth},
                  {"min_samples_split", p.min_samples_split},
                  {"min_samples_leaf", p.min_samples_leaf}};
        else
          return {{"n_stages", p.n_stages},
                  {"learning_rate", p.learning_rate},
                  {"max_depth", p.max_depth},
                  {"min_samples_leaf", p.min_samples_leaf},
                  {"subsample", p.subsample},
                  {"seed", p.seed}};
      },
      params);
}

/// Inverse of params_to_json; `kind` picks the alternative. Missing keys keep
/// their defaults.
inline LearnerParams params_from_json(ModelKind kind, const nlohmann::json& j) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  switch (kind) {
    case ModelKind::Cart: {
      TreeParams p;
      get("max_depth", p.max_depth);
      get("min_samples_split", p.min_samples_split);
      get("min_samples_leaf", p.min_samples_leaf);
      get("complexity_parameter", p.complexity_parameter);
      return p;
    }
    case ModelKind::Forest: {
      ForestParams p;
      get("n_trees", p.n_trees);
      get("mtry", p.mtry);
      get("bootstrap", p.bootstrap);
      get("seed", p.seed);
      get("max_depth", p.max_depth);
      get("min_samples_split", p.min_samples_split);
      get("min_samples_leaf", p.min_samples_leaf);
      return p;
    }
    case ModelKind::Boosting: {
      BoostingParams p;
      get("n_stages", p.n_stages);
      get("learning_rate", p.learning_rate);
      get("max_depth", p.max_depth);
      get("min_samples_leaf", p.min_samples_leaf);
      get("subsample", p.subsample);
      get("seed", p.seed);
      return p;
    }
  }
  fail(ErrorKind::InvalidArgument, "unknown model kind");
}

// ---------------------------------------------------------------------------
// Cross-validation

struct CvRow {
  LearnerParams params;
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
};

struct CvResult {
  std::size_t best_index = 0;
  LearnerParams best_params;
  std::vector<CvRow> table;
  Model model;
};

namespace detail {

/// Smaller is simpler: ensemble size first, then the negated complexity
/// parameter (heavier pruning is simpler), then tree depth.
inline std::tuple<std::size_t, double, std::size_t> complexity(const LearnerParams& p) {
  return std::visit(
      [](const auto& q) -> std::tuple<std::size_t, double, std::size_t> {
        using P = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<P, TreeParams>) return {1, -q.complexity_parameter, q.max_depth};
        else if constexpr (std::is_same_v<P, ForestParams>) return {q.n_trees, 0.0, q.max_depth};
        else return {q.n_stages, 0.0, q.max_depth};
      },
      p);
}

}  // namespace detail

/// Mean k-fold validation accuracy for every grid point; the best is refit
/// on all of `train`. Ties in mean accuracy go to the simpler model, then to
/// the earlier grid point.
inline CvResult cross_validate(const std::vector<LearnerParams>& grid, const Dataset& train, std::size_t k,
                               std::uint64_t seed) {
  if (grid.empty()) fail(ErrorKind::InvalidArgument, "cross-validation grid is empty");
  const auto folds = kfold_stratified(train.labels(), k, seed);
  std::vector<std::size_t> fold_of(train.size());
  for (std::size_t f = 0; f < folds.size(); ++f)
    for (auto i : folds[f]) fold_of[i] = f;

  std::vector<Dataset> fit_sets, hold_sets;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> in;
    for (std::size_t i = 0; i < train.size(); ++i)
      if (fold_of[i] != f) in.push_back(i);
    fit_sets.push_back(train.subset(in));
    hold_sets.push_back(train.subset(folds[f]));
  }

  std::vector<CvRow> table;
  for (const auto& params : grid) {
    CvRow row{params, {}, 0.0};
    double sum = 0.0;
    for (std::size_t f = 0; f < k; ++f) {
      const auto model = fit_model(fit_sets[f], params);
      const auto pred = predict_all(model, hold_sets[f]);
      const double acc = confusion(hold_sets[f].labels(), pred).accuracy();
      row.fold_accuracy.push_back(acc);
      sum += acc;
    }
    row.mean_accuracy = sum / static_cast<double>(k);
    table.push_back(std::move(row));
  }

  std::size_t best = 0;
  for (std::size_t g = 1; g < table.size(); ++g) {
    const auto& a = table[g];
    const auto& b = table[best];
    if (a.mean_accuracy > b.mean_accuracy ||
        (a.mean_accuracy == b.mean_accuracy && detail::complexity(a.params) < detail::complexity(b.params)))
      best = g;
  }
  CvResult out{best, table[best].params, std::move(table), fit_model(train, grid[best])};
  return out;
}

inline void write_cv_table(std::ostream& out, const std::vector<CvRow>& table) {
  out << "grid_index,model_kind,params,mean_accuracy";
  const std::size_t k = table.empty() ? 0 : table.front().fold_accuracy.size();
  for (std::size_t f = 0; f < k; ++f) out << ",fold_" << f + 1;
  out << '\n';
  for (std::size_t g = 0; g < table.size(); ++g) {
    std::vector<std::string> fields{std::to_string(g), std::string(learners::to_string(kind_of(table[g].params))),
                                    params_to_json(table[g].params).dump(), csv::format_double(table[g].mean_accuracy)};
    for (double a : table[g].fold_accuracy) fields.push_back(csv::format_double(a));
    csv::write_row(out, fields);
  }
}

// ---------------------------------------------------------------------------
// Evaluation report

struct EvaluationReport {
  std::string model_id;
  ModelKind model_kind = ModelKind::Cart;
  /// Identifies the test set; reports are comparable only when these match.
  std::string test_set_id;
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  std::array<ClassMetrics, kNumClasses> per_class{};
  double macro_f1 = 0.0;
  std::array<double, kNumClasses> auc{};
  std::array<RocCurve, kNumClasses> roc{};
  ImportanceRanking importance;
};

/// AUC is left at NaN for a class absent from (or filling) the test set.
inline EvaluationReport evaluate(const Model& model, const Dataset& test, std::string model_id,
                                 std::string test_set_id) {
  if (test.size() == 0) fail(ErrorKind::EmptyInput, "cannot evaluate on an empty test set");
  EvaluationReport r;
  r.model_id = std::move(model_id);
  r.model_kind = learners::kind_of(model);
  r.test_set_id = std::move(test_set_id);

  std::vector<ClassProbs> probs(test.size());
  std::vector<RiskClass> pred(test.size());
  std::vector<double> x(test.n_features());
  for (std::size_t i = 0; i < test.size(); ++i) {
    for (std::size_t f = 0; f < x.size(); ++f) x[f] = test.value(i, f);
    probs[i] = learners::predict_proba(model, x);
    pred[i] = argmax_severe(probs[i]);
  }
  r.confusion = confusion(test.labels(), pred);
  r.accuracy = r.confusion.accuracy();
  for (auto c : kAllClasses) r.per_class[index_of(c)] = prf1(r.confusion, c);
  r.macro_f1 = macro_f1(r.confusion);
  for (auto c : kAllClasses) {
    const auto k = index_of(c);
    std::vector<double> scores(test.size());
    std::vector<bool> positive(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
      scores[i] = probs[i][k];
      positive[i] = test.label(i) == c;
    }
    const auto n_pos = std::count(positive.begin(), positive.end(), true);
    if (n_pos == 0 || static_cast<std::size_t>(n_pos) == test.size()) {
      r.auc[k] = std::numeric_limits<double>::quiet_NaN();
      r.roc[k].positive_class = c;
      continue;
    }
    r.roc[k] = roc_auc(scores, positive, c);
    r.auc[k] = r.roc[k].auc;
  }
  r.importance = learners::variable_importance(model);
  return r;
}

inline nlohmann::json to_json(const ImportanceRanking& r) {
  auto out = nlohmann::json::array();
  for (const auto& [name, value] : r.entries) out.push_back({{"feature", name}, {"importance", value}});
  return out;
}

inline ImportanceRanking importance_from_json(const nlohmann::json& j) {
  ImportanceRanking r;
  for (const auto& e : j) r.entries.emplace_back(e.at("feature").get<std::string>(), e.at("importance").get<double>());
  return r;
}

namespace detail {

inline nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline double number_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace detail

/// ROC points are not included; they go to their own CSV files.
inline nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json j;
  j["model_id"] = r.model_id;
  j["model_kind"] = learners::to_string(r.model_kind);
  j["test_set_id"] = r.test_set_id;
  j["confusion"] = {{"classes", {"LowRisk", "Alert", "Epidemic"}}, {"counts", r.confusion.counts}};
  j["accuracy"] = r.accuracy;
  j["per_class"] = nlohmann::json::object();
  for (auto c : kAllClasses) {
    const auto& m = r.per_class[index_of(c)];
    j["per_class"][std::string(to_string(c))] = {
        {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"auc", detail::number_or_null(r.auc[index_of(c)])}};
  }
  j["macro_f1"] = r.macro_f1;
  j["importance"] = to_json(r.importance);
  return j;
}

inline EvaluationReport report_from_json(const nlohmann::json& j) {
  EvaluationReport r;
  r.model_id = j.at("model_id").get<std::string>();
  auto kind = learners::parse_model_kind(j.at("model_kind").get<std::string>());
  if (!kind) fail(ErrorKind::CorruptArtifact, "unknown model_kind in report");
  r.model_kind = *kind;
  r.test_set_id = j.at("test_set_id").get<std::string>();
  r.confusion.counts = j.at("confusion").at("counts").get<decltype(r.confusion.counts)>();
  r.accuracy = j.at("accuracy").get<double>();
  for (auto c : kAllClasses) {
    const auto& e = j.at("per_class").at(std::string(to_string(c)));
    auto& m = r.per_class[index_of(c)];
    m.precision = e.at("precision").get<double>();
    m.recall = e.at("recall").get<double>();
    m.f1 = e.at("f1").get<double>();
    r.auc[index_of(c)] = detail::number_from(e.at("auc"));
    r.roc[index_of(c)].positive_class = c;
  }
  r.macro_f1 = j.at("macro_f1").get<double>();
  r.importance = importance_from_json(j.at("importance"));
  return r;
}

// ---------------------------------------------------------------------------
// Model comparison

struct ComparisonRow {
  std::string metric;
  std::vector<double> values;  // empty for the importance row
  std::vector<std::string> text;
  std::vector<bool> best;
  /// Set when exactly one model attains the best value.
  std::optional<std::size_t> winner;
  bool tied = false;
};

struct Comparison {
  std::vector<std::string> models;
  std::vector<std::string> model_ids;
  std::string test_set_id;
  std::vector<ComparisonRow> rows;
  std::vector<std::string> notes;

  const ComparisonRow& row(std::string_view metric) const {
    for (const auto& r : rows)
      if (r.metric == metric) return r;
    fail(ErrorKind::InvalidArgument, "no comparison row '" + std::string(metric) + "'");
  }
};

namespace detail {

inline std::string fixed3(double v) {
  if (!std::isfinite(v)) return "NA";
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(3);
  s << v;
  return s.str();
}

inline ComparisonRow metric_row(std::string name, std::vector<double> values) {
  ComparisonRow row;
  row.metric = std::move(name);
  double top = -std::numeric_limits<double>::infinity();
  for (double v : values)
    if (std::isfinite(v)) top = std::max(top, v);
  std::size_t n_best = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const bool b = std::isfinite(values[i]) && values[i] == top;
    row.best.push_back(b);
    row.text.push_back(fixed3(values[i]));
    if (b) {
      ++n_best;
      row.winner = i;
    }
  }
  if (n_best != 1) row.winner.reset();
  row.tied = n_best > 1;
  row.values = std::move(values);
  return row;
}

}  // namespace detail

/// Table of accuracy, macro F-1, per-class AUC and the four most important
/// variables, one column per report. Every report must carry the same test
/// set identifier.
inline Comparison compare_models(const std::vector<EvaluationReport>& reports) {
  if (reports.size() < 2) fail(ErrorKind::InvalidArgument, "comparison needs at least two reports");
  for (const auto& r : reports)
    if (r.test_set_id != reports.front().test_set_id)
      fail(ErrorKind::TestSetMismatch, "report " + r.model_id + " was built on test set '" + r.test_set_id +
                                           "', not '" + reports.front().test_set_id + "'");
  Comparison c;
  c.test_set_id = reports.front().test_set_id;
  for (const auto& r : reports) {
    c.models.emplace_back(learners::display_name(r.model_kind));
    c.model_ids.push_back(r.model_id);
  }
  auto collect = [&](auto&& get) {
    std::vector<double> v;
    for (const auto& r : reports) v.push_back(get(r));
    return v;
  };
  c.rows.push_back(detail::metric_row("Accuracy", collect([](const auto& r) { return r.accuracy; })));
  c.rows.push_back(detail::metric_row("F-1", collect([](const auto& r) { return r.macro_f1; })));
  for (auto cls : kAllClasses)
    c.rows.push_back(detail::metric_row("AUC (" + std::string(to_string(cls)) + ")",
                                        collect([&](const auto& r) { return r.auc[index_of(cls)]; })));
  ComparisonRow top;
  top.metric = "Top 4 variables";
  for (const auto& r : reports) {
    std::string s;
    for (const auto& name : r.importance.top(4)) s += (s.empty() ? "" : ", ") + name;
    top.text.push_back(s);
    top.best.push_back(false);
  }
  c.rows.push_back(std::move(top));
  return c;
}

inline nlohmann::json to_json(const Comparison& c) {
  nlohmann::json j;
  j["models"] = c.models;
  j["model_ids"] = c.model_ids;
  j["test_set_id"] = c.test_set_id;
  j["notes"] = c.notes;
  auto rows = nlohmann::json::array();
  for (const auto& r : c.rows) {
    nlohmann::json row{{"metric", r.metric}, {"text", r.text}, {"best", r.best}, {"tied", r.tied}};
    if (!r.values.empty()) {
      auto vals = nlohmann::json::array();
      for (double v : r.values) vals.push_back(detail::number_or_null(v));
      row["values"] = vals;
    }
    row["winner"] = r.winner ? nlohmann::json(c.models[*r.winner]) : nlohmann::json();
    rows.push_back(row);
  }
  j["rows"] = rows;
  return j;
}

/// Fixed-width text rendering. A trailing '*' marks the best value in a row.
inline std::string render_text(const Comparison& c) {
  std::size_t first = std::string("Metric").size();
  for (const auto& r : c.rows) first = std::max(first, r.metric.size());
  std::vector<std::size_t> width;
  for (std::size_t m = 0; m < c.models.size(); ++m) {
    std::size_t w = c.models[m].size();
    for (const auto& r : c.rows) w = std::max(w, r.text[m].size() + 1);
    width.push_back(w);
  }
  std::ostringstream out;
  auto pad = [&](const std::string& s, std::size_t w) { out << s << std::string(w - std::min(w, s.size()), ' '); };
  pad("Metric", first);
  for (std::size_t m = 0; m < c.models.size(); ++m) {
    out << " | ";
    pad(c.models[m], width[m]);
  }
  out << '\n';
  out << std::string(first, '-');
  for (auto w : width) out << "-+-" << std::string(w, '-');
  out << '\n';
  for (const auto& r : c.rows) {
    pad(r.metric, first);
    for (std::size_t m = 0; m < c.models.size(); ++m) {
      out << " | ";
      pad(r.text[m] + (r.best[m] ? "*" : ""), width[m]);
    }
    out << '\n';
  }
  for (const auto& n : c.notes) out << "note: " << n << '\n';
  return out.str();
}

}  // namespace rsv::evaluation
