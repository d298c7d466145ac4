#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "oracles/metrics_oracle.hpp"
#include "rsv/artifact.hpp"
#include "rsv/config.hpp"
#include "rsv/evaluation.hpp"
#include "support/fixtures.hpp"

using namespace rsv;
using namespace rsv::evaluation;
using nlohmann::json;

namespace {

template <typename F>
ErrorKind kind_thrown(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected rsv::Error";
  return ErrorKind::InvalidArgument;
}

std::vector<RiskClass> as_classes(const std::vector<int>& v) {
  std::vector<RiskClass> out;
  for (int x : v) out.push_back(class_at(static_cast<std::size_t>(x)));
  return out;
}

Dataset panel_dataset(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  return Dataset::from_panel(fixture::random_panel(rng, n));
}

}  // namespace

// --- metrics ----------------------------------------------------------------

TEST(Metrics, SpotValues) {
  const auto m = prf1(8, 2, 4);
  EXPECT_EQ(m.precision, 0.8);
  EXPECT_EQ(m.recall, 2.0 / 3.0);
  EXPECT_EQ(m.f1, 8.0 / 11.0);
  const auto f = oracle::f1({8, 2, 4, 0});
  EXPECT_EQ(f, (oracle::Fraction{8, 11}));
}

TEST(Metrics, DegenerateConventionsAreZero) {
  const auto none = prf1(0, 0, 0);
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f1, 0.0);
  EXPECT_EQ(prf1(0, 3, 0).precision, 0.0);
  EXPECT_EQ(prf1(0, 0, 3).recall, 0.0);
  EXPECT_EQ(prf1(0, 2, 2).f1, 0.0);
}

TEST(Metrics, AgreeWithBruteForceCounting) {
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(200);
    std::vector<int> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<int>(rng.below(3));
      pred[i] = rng.unit() < 0.6 ? truth[i] : static_cast<int>(rng.below(3));
    }
    const auto t = as_classes(truth), p = as_classes(pred);
    const auto cm = confusion(t, p);
    const auto want = oracle::confusion(truth, pred);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) EXPECT_EQ(static_cast<std::int64_t>(cm.counts[a][b]), want[a][b]);
    EXPECT_EQ(cm.accuracy(), oracle::accuracy(truth, pred).value());
    for (int c = 0; c < 3; ++c) {
      const auto k = oracle::one_vs_rest(truth, pred, c);
      const auto got = prf1(cm, class_at(static_cast<std::size_t>(c)));
      EXPECT_EQ(got.precision, oracle::precision(k).value());
      EXPECT_EQ(got.recall, oracle::recall(k).value());
      EXPECT_EQ(got.f1, oracle::f1(k).value());
    }
  }
}

TEST(Metrics, ConfusionErrors) {
  std::vector<RiskClass> a{RiskClass::Alert}, b;
  EXPECT_EQ(kind_thrown([&] { confusion(a, b); }), ErrorKind::LengthMismatch);
  EXPECT_EQ(kind_thrown([&] { confusion(b, b); }), ErrorKind::EmptyInput);
}

// --- ROC --------------------------------------------------------------------

TEST(Roc, AucMatchesMannWhitney) {
  Rng rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.below(199);
    std::vector<double> s(n);
    std::vector<bool> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(trial % 2 == 0 ? 5 : 1000)) / 10.0;
      pos[i] = rng.unit() < 0.4;
    }
    pos[0] = true;
    pos[1] = false;
    EXPECT_NEAR(roc_auc(s, pos).auc, oracle::mann_whitney_auc(s, pos), 1e-12);
  }
}

TEST(Roc, CurveEndpointsAndMonotone) {
  std::vector<double> s{0.9, 0.8, 0.8, 0.3, 0.1};
  std::vector<bool> pos{true, false, true, false, true};
  const auto c = roc_auc(s, pos, RiskClass::Alert);
  EXPECT_EQ(c.points.front().fpr, 0.0);
  EXPECT_EQ(c.points.back().tpr, 1.0);
  EXPECT_EQ(c.points.back().fpr, 1.0);
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    EXPECT_GE(c.points[i].fpr, c.points[i - 1].fpr);
    EXPECT_GE(c.points[i].tpr, c.points[i - 1].tpr);
  }
  std::ostringstream out;
  write_roc(out, c);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "positive_class,false_positive_rate,true_positive_rate");
}

TEST(Roc, Errors) {
  std::vector<double> s{0.1, 0.2};
  EXPECT_EQ(kind_thrown([&] { roc_auc(s, std::vector<bool>{true, true}); }), ErrorKind::SingleClassLabels);
  EXPECT_EQ(kind_thrown([&] { roc_auc(s, std::vector<bool>{true}); }), ErrorKind::LengthMismatch);
  std::vector<double> bad{0.1, NAN};
  EXPECT_EQ(kind_thrown([&] { roc_auc(bad, std::vector<bool>{true, false}); }), ErrorKind::NonFinite);
}

// --- k-fold -----------------------------------------------------------------

TEST(KFold, PartitionsAndStratifies) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 60 + rng.below(400);
    std::vector<RiskClass> labels(n);
    for (auto& l : labels) l = class_at(rng.unit() < 0.6 ? 0 : (rng.unit() < 0.5 ? 1 : 2));
    for (std::size_t c = 0; c < 3; ++c) labels[c] = class_at(c);
    const auto folds = kfold_stratified(labels, 10, rng.next());
    std::vector<int> seen(n, 0);
    std::array<double, 3> all{};
    for (auto l : labels) all[index_of(l)] += 1;
    for (const auto& f : folds) {
      std::array<double, 3> in{};
      for (auto i : f) {
        ++seen[i];
        in[index_of(labels[i])] += 1;
      }
      for (std::size_t c = 0; c < 3; ++c) EXPECT_LE(std::abs(in[c] - all[c] / 10.0), 1.0);
    }
    for (int s : seen) EXPECT_EQ(s, 1);
  }
}

TEST(KFold, Errors) {
  std::vector<RiskClass> labels(30, RiskClass::LowRisk);
  labels[0] = RiskClass::Alert;
  EXPECT_EQ(kind_thrown([&] { kfold_stratified(labels, 10, 1); }), ErrorKind::ClassTooSmall);
  EXPECT_EQ(kind_thrown([&] { kfold_stratified(labels, 1, 1); }), ErrorKind::InvalidArgument);
}

// --- cross-validation -------------------------------------------------------

TEST(CrossValidation, PicksBestAndRefits) {
  const auto train = panel_dataset(4, 300);
  std::vector<LearnerParams> grid;
  for (double cp : {0.0, 0.01, 0.2}) {
    TreeParams p;
    p.complexity_parameter = cp;
    grid.emplace_back(p);
  }
  const auto r = cross_validate(grid, train, 5, 7);
  ASSERT_EQ(r.table.size(), 3u);
  for (std::size_t g = 0; g < 3; ++g) EXPECT_LE(r.table[g].mean_accuracy, r.table[r.best_index].mean_accuracy);
  EXPECT_EQ(learners::kind_of(r.model), learners::ModelKind::Cart);
  const auto again = cross_validate(grid, train, 5, 7);
  EXPECT_EQ(again.best_index, r.best_index);
  std::ostringstream out;
  write_cv_table(out, r.table);
  EXPECT_NE(out.str().find("fold_5"), std::string::npos);
}

TEST(CrossValidation, TiesGoToTheSimplerModel) {
  // Identical grid points except the complexity parameter: a constant-label
  // training set makes every setting perfect.
  auto train = Dataset::with_features(1);
  for (int i = 0; i < 40; ++i) train.add_row(std::vector<double>{double(i)}, RiskClass::LowRisk);
  std::vector<LearnerParams> grid;
  for (double cp : {0.0, 0.05, 0.01}) {
    TreeParams p;
    p.complexity_parameter = cp;
    grid.emplace_back(p);
  }
  EXPECT_EQ(cross_validate(grid, train, 4, 1).best_index, 1u);
}

TEST(CrossValidation, ParamsJsonRoundTrip) {
  ForestParams f;
  f.mtry = 5;
  f.n_trees = 300;
  f.seed = 42;
  BoostingParams b;
  b.learning_rate = 0.05;
  b.max_depth = 2;
  for (const LearnerParams& p : std::vector<LearnerParams>{TreeParams{}, f, b})
    EXPECT_EQ(params_from_json(kind_of(p), params_to_json(p)), p);
}

// --- reports and comparison -------------------------------------------------

namespace {

EvaluationReport report_for(const Model& m, const Dataset& test, const std::string& id) {
  return evaluate(m, test, id, "test-set");
}

}  // namespace

TEST(Report, EvaluateMatchesItsParts) {
  const auto train = panel_dataset(5, 400), test = panel_dataset(6, 150);
  TreeParams p;
  p.complexity_parameter = 0.01;
  const Model m = learners::grow_tree(train, p);
  const auto r = report_for(m, test, "cart-1");
  const auto pred = predict_all(m, test);
  EXPECT_EQ(r.confusion, confusion(test.labels(), pred));
  EXPECT_EQ(r.macro_f1, macro_f1(r.confusion));
  for (auto c : kAllClasses) EXPECT_TRUE(std::isfinite(r.auc[index_of(c)]));
  EXPECT_EQ(r.importance.top(1), std::vector<std::string>{"WVAL"});
}

TEST(Report, JsonRoundTrip) {
  const auto train = panel_dataset(7, 200), test = panel_dataset(8, 80);
  const Model m = learners::grow_tree(train, {});
  const auto r = report_for(m, test, "x");
  const auto back = report_from_json(json::parse(to_json(r).dump()));
  EXPECT_EQ(back.confusion, r.confusion);
  EXPECT_EQ(back.auc, r.auc);
  EXPECT_EQ(back.macro_f1, r.macro_f1);
  EXPECT_EQ(back.importance.entries, r.importance.entries);
}

TEST(Report, AbsentClassGivesNullAuc) {
  const auto train = panel_dataset(9, 200);
  auto test = Dataset(FeatureSchema::standard());
  for (std::size_t i = 0; i < 10; ++i) test.add_row(train.row(i), i % 2 ? RiskClass::LowRisk : RiskClass::Alert);
  const auto r = report_for(learners::grow_tree(train, {}), test, "x");
  EXPECT_TRUE(std::isnan(r.auc[index_of(RiskClass::Epidemic)]));
  EXPECT_TRUE(to_json(r).dump().find("null") != std::string::npos);
}

TEST(Comparison, TableAndMismatch) {
  const auto train = panel_dataset(10, 300), test = panel_dataset(11, 120);
  const Model cart = learners::grow_tree(train, {});
  ForestParams fp;
  fp.n_trees = 20;
  const Model forest = learners::fit_forest(train, fp);
  auto a = report_for(cart, test, "a"), b = report_for(forest, test, "b");
  const auto c = compare_models({a, b});
  EXPECT_EQ(c.models, (std::vector<std::string>{"CART", "Random Forest"}));
  EXPECT_EQ(c.rows.size(), 6u);
  EXPECT_EQ(c.row("Accuracy").values[0], a.accuracy);
  EXPECT_EQ(c.row("Top 4 variables").text[0].substr(0, 4), "WVAL");
  const auto text = render_text(c);
  EXPECT_NE(text.find("AUC (Epidemic)"), std::string::npos);
  EXPECT_NE(text.find('*'), std::string::npos);
  b.test_set_id = "other";
  EXPECT_EQ(kind_thrown([&] { compare_models({a, b}); }), ErrorKind::TestSetMismatch);
  EXPECT_EQ(kind_thrown([&] { compare_models({a}); }), ErrorKind::InvalidArgument);
}

TEST(Comparison, TiesHaveNoWinner) {
  const auto train = panel_dataset(12, 200), test = panel_dataset(13, 60);
  const Model cart = learners::grow_tree(train, {});
  const auto a = report_for(cart, test, "a");
  const auto c = compare_models({a, a});
  EXPECT_TRUE(c.row("Accuracy").tied);
  EXPECT_FALSE(c.row("Accuracy").winner);
}

// --- artifacts --------------------------------------------------------------

namespace {

std::vector<Model> sample_models() {
  const auto train = panel_dataset(20, 250);
  TreeParams tp;
  tp.complexity_parameter = 0.005;
  ForestParams fp;
  fp.n_trees = 15;
  fp.seed = 3;
  BoostingParams bp;
  bp.n_stages = 15;
  bp.max_depth = 2;
  return {learners::grow_tree(train, tp), learners::fit_forest(train, fp), learners::fit_boosting(train, bp)};
}

artifact::TrainingMetadata metadata() {
  artifact::TrainingMetadata md;
  md.panel_snapshot_id = "abc";
  md.split_seed = 17;
  md.best_params = {{"k", 1}};
  md.excluded_states = {"CO"};
  return md;
}

}  // namespace

TEST(Artifact, RoundTripPreservesPredictions) {
  fixture::TempDir dir("artifact");
  Rng rng(21);
  for (const auto& m : sample_models()) {
    const auto path = dir / (std::string(learners::to_string(learners::kind_of(m))) + ".json");
    const auto id = artifact::save_artifact(m, metadata(), path);
    const auto a = artifact::load_artifact(path);
    EXPECT_EQ(a.id, id);
    EXPECT_EQ(a.kind(), learners::kind_of(m));
    EXPECT_EQ(a.metadata.excluded_states, std::vector<std::string>{"CO"});
    std::vector<double> x(kNumFeatures);
    for (int i = 0; i < 300; ++i) {
      for (auto& v : x) v = rng.unit() * 12.0;
      const auto p = learners::predict_proba(m, x), q = learners::predict_proba(a.model, x);
      for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(p[k], q[k], 1e-12);
    }
  }
}

TEST(Artifact, IdIgnoresMetadataButChecksumDoesNot) {
  const auto m = sample_models().front();
  auto md = metadata();
  const auto a = artifact::to_json(m, md);
  md.split_seed = 18;
  const auto b = artifact::to_json(m, md);
  EXPECT_EQ(a["artifact_id"], b["artifact_id"]);
  EXPECT_NE(a["checksum"], b["checksum"]);
}

TEST(Artifact, RejectsTamperingAndVersions) {
  const auto m = sample_models()[1];
  const auto doc = artifact::to_json(m, metadata());

  auto tampered = doc;
  tampered["model"]["trees"][0][0][1] = 123.0;
  EXPECT_EQ(kind_thrown([&] { artifact::parse_artifact(tampered.dump()); }), ErrorKind::CorruptArtifact);

  auto version = doc;
  version["format_version"] = 2;
  EXPECT_EQ(kind_thrown([&] { artifact::parse_artifact(version.dump()); }), ErrorKind::UnsupportedVersion);

  const auto text = doc.dump();
  EXPECT_EQ(kind_thrown([&] { artifact::parse_artifact(text.substr(0, text.size() / 2)); }), ErrorKind::CorruptArtifact);
  EXPECT_EQ(kind_thrown([] { artifact::parse_artifact("[1,2]"); }), ErrorKind::CorruptArtifact);
  EXPECT_EQ(kind_thrown([] { artifact::load_artifact("/nonexistent/model.json"); }), ErrorKind::IoFailure);
}

TEST(Artifact, RejectsStructurallyBrokenTreesEvenWithValidChecksum) {
  const auto m = sample_models()[0];
  auto doc = artifact::to_json(m, metadata());
  // Point the root's left child at itself, then re-seal both hashes.
  doc["model"]["nodes"][0][2] = 0;
  doc["artifact_id"] = artifact::detail::content_id(doc);
  doc["checksum"] = artifact::detail::checksum_of(doc);
  EXPECT_EQ(kind_thrown([&] { artifact::parse_artifact(doc.dump()); }), ErrorKind::CorruptArtifact);
}

TEST(Artifact, CarriesEvaluation) {
  const auto m = sample_models()[0];
  auto md = metadata();
  md.evaluation = evaluate(m, panel_dataset(30, 60), "id", "ts");
  const auto a = artifact::parse_artifact(artifact::serialize(m, md));
  ASSERT_TRUE(a.metadata.evaluation);
  EXPECT_EQ(a.metadata.evaluation->confusion, md.evaluation->confusion);
}

// --- config -----------------------------------------------------------------

TEST(Config, DefaultsAndOverrides) {
  const auto c = config::parse_config(json::parse(R"({"seed": 7, "cv": {"folds": 5},
      "grids": {"forest": {"mtry": [2], "n_trees": [10]}}, "out": "res"})"),
                                      "/base");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.cv_folds, 5u);
  EXPECT_EQ(c.forest_grid().size(), 1u);
  EXPECT_EQ(c.cart_grid().size(), 4u);
  EXPECT_EQ(c.boosting_grid().size(), 8u);
  EXPECT_EQ(c.out, std::filesystem::path("/base/res"));
  EXPECT_EQ(c.seeds().split, derive_seed(7, "split"));
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_EQ(kind_thrown([] { config::parse_config(json::parse(R"({"sed": 1})")); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_thrown([] { config::parse_config(json::parse(R"({"seed": "x"})")); }), ErrorKind::ConfigError);
  auto c = config::parse_config(json::parse(R"({"split": {"fraction": 1.5}})"));
  EXPECT_EQ(kind_thrown([&] { c.validate(); }), ErrorKind::ConfigError);
  auto d = config::parse_config(json::parse(R"({"exclude_states": ["TX"]})"));
  EXPECT_EQ(kind_thrown([&] { d.validate(); }), ErrorKind::UnknownState);
}

TEST(Config, JsonRoundTrip) {
  config::RunConfig c;
  c.seed = 11;
  c.exclude_states = {"CO", "NM"};
  const auto back = config::parse_config(config::to_json(c));
  EXPECT_EQ(config::to_json(back), config::to_json(c));
}
