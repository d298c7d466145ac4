#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsv/analysis.hpp"
#include "rsv/artifact.hpp"
#include "rsv/config.hpp"
#include "rsv/evaluation.hpp"
#include "rsv/hash.hpp"
#include "rsv/ingest.hpp"
#include "rsv/learners/model.hpp"
#include "rsv/panel.hpp"
#include "rsv/service.hpp"

namespace rsv::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;
using config::RunConfig;
using learners::ModelKind;

inline constexpr std::array<ModelKind, 3> kModelKinds{ModelKind::Cart, ModelKind::Forest, ModelKind::Boosting};

/// Output locations under the run directory.
struct Layout {
  fs::path root;

  fs::path ingest_dir() const { return root / "ingest"; }
  fs::path normalized(ingest::SourceKind k) const { return ingest_dir() / (std::string(to_string(k)) + ".csv"); }
  fs::path rejects() const { return ingest_dir() / "rejects.csv"; }
  fs::path panel_dir() const { return root / "panel"; }
  fs::path panel() const { return panel_dir() / "panel.csv"; }
  fs::path completeness() const { return panel_dir() / "completeness.csv"; }
  fs::path train() const { return panel_dir() / "train.csv"; }
  fs::path test() const { return panel_dir() / "test.csv"; }
  fs::path split_manifest() const { return panel_dir() / "split_manifest.json"; }
  fs::path summary() const { return panel_dir() / "summary.csv"; }
  fs::path explore_dir() const { return root / "explore"; }
  fs::path models_dir() const { return root / "models"; }
  fs::path model(ModelKind k) const { return models_dir() / (std::string(learners::to_string(k)) + ".json"); }
  fs::path cv_table(ModelKind k) const { return models_dir() / ("cv_" + std::string(learners::to_string(k)) + ".csv"); }
  fs::path eval_dir() const { return root / "eval"; }
  fs::path report(ModelKind k) const {
    return eval_dir() / (std::string(learners::to_string(k)) + "_report.json");
  }
  fs::path roc(ModelKind k, RiskClass c) const {
    return eval_dir() / ("roc_" + std::string(learners::to_string(k)) + "_" + std::string(to_string(c)) + ".csv");
  }
  fs::path comparison_json() const { return eval_dir() / "comparison.json"; }
  fs::path comparison_text() const { return eval_dir() / "comparison.txt"; }
  fs::path prediction() const { return root / "predict" / "prediction.json"; }
  fs::path report_text() const { return root / "report" / "report.txt"; }
  fs::path manifest(std::string_view stage) const { return root / "manifests" / (std::string(stage) + ".json"); }
};

struct StageResult {
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  json summary = json::object();
  /// Text for stdout, if the stage has any.
  std::string console;
};

namespace detail {

template <typename Writer>
void write_text(const fs::path& path, Writer&& w) {
  std::ostringstream s;
  w(s);
  write_file(path, s.str());
}

inline std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoFailure, "cannot open " + path.string() + " (has the previous stage run?)");
  return in;
}

inline std::vector<panel::WeeklyPanelRow> load_panel(const fs::path& path) {
  auto in = open_input(path);
  return panel::read_panel(in, path.filename().string());
}

inline json load_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::IoFailure, path.string() + " is not valid JSON: " + e.what());
  }
}

inline std::string relative_to(const fs::path& p, const fs::path& root) {
  std::error_code ec;
  auto r = fs::relative(p, root, ec);
  return (ec || r.empty()) ? p.generic_string() : r.generic_string();
}

inline json hashes(const std::vector<fs::path>& files, const fs::path& root) {
  auto out = json::array();
  for (const auto& f : files) out.push_back({{"path", relative_to(f, root)}, {"sha256", sha256_file(f)}});
  return out;
}

}  // namespace detail

/// Manifest: effective config, seeds, input and output content hashes.
inline fs::path write_manifest(const RunConfig& cfg, std::string_view stage, const StageResult& r) {
  const Layout L{cfg.out};
  const auto s = cfg.seeds();
  json m{{"stage", stage},
         {"config", config::to_json(cfg)},
         {"seeds", {{"root", s.root}, {"split", s.split}, {"cv", s.cv}, {"forest", s.forest}, {"boosting", s.boosting}}},
         {"inputs", detail::hashes(r.inputs, cfg.out)},
         {"outputs", detail::hashes(r.outputs, cfg.out)},
         {"summary", r.summary}};
  const auto path = L.manifest(stage);
  write_file(path, m.dump(2) + "\n");
  return path;
}

// ---------------------------------------------------------------------------
// ingest

inline StageResult run_ingest(const RunConfig& cfg) {
  const Layout L{cfg.out};
  const auto roster = cfg.full_roster();
  StageResult r;
  std::vector<ingest::Reject> rejects;
  auto parse_one = [&](ingest::SourceKind kind, const fs::path& src, auto&& parse, auto&& write) {
    if (src.empty()) fail(ErrorKind::ConfigError, "sources." + std::string(to_string(kind)) + " is not set");
    auto in = detail::open_input(src);
    auto result = parse(in, roster, src.filename().string());
    ingest::check_reject_ceiling(result, cfg.reject_ceiling, src.filename().string());
    const auto out = L.normalized(kind);
    detail::write_text(out, [&](std::ostream& o) { write(o, result.records); });
    rejects.insert(rejects.end(), result.rejects.begin(), result.rejects.end());
    r.inputs.push_back(src);
    r.outputs.push_back(out);
    r.summary[std::string(to_string(kind))] = {
        {"rows", result.rows}, {"accepted", result.records.size()}, {"rejected", result.rejects.size()}};
  };
  parse_one(ingest::SourceKind::RsvNet, cfg.sources.rsvnet,
            [](auto& in, auto& ro, auto s) { return ingest::parse_rsvnet(in, ro, s); },
            [](auto& o, auto& rows) { ingest::write_rsvnet(o, rows); });
  parse_one(ingest::SourceKind::Nwss, cfg.sources.nwss,
            [](auto& in, auto& ro, auto s) { return ingest::parse_nwss(in, ro, s); },
            [](auto& o, auto& rows) { ingest::write_nwss(o, rows); });
  parse_one(ingest::SourceKind::Meteo, cfg.sources.meteo,
            [](auto& in, auto& ro, auto s) { return ingest::parse_meteo(in, ro, s); },
            [](auto& o, auto& rows) { ingest::write_meteo(o, rows); });
  parse_one(ingest::SourceKind::AirQuality, cfg.sources.airquality,
            [](auto& in, auto& ro, auto s) { return ingest::parse_airquality(in, ro, s); },
            [](auto& o, auto& rows) { ingest::write_airquality(o, rows); });
  detail::write_text(L.rejects(), [&](std::ostream& o) { ingest::write_rejects(o, rejects); });
  r.outputs.push_back(L.rejects());
  return r;
}

// ---------------------------------------------------------------------------
// build-panel

namespace detail {

template <typename Parse>
auto reparse(const Layout& L, ingest::SourceKind kind, const Roster& roster, Parse&& parse) {
  auto in = open_input(L.normalized(kind));
  auto result = parse(in, roster, L.normalized(kind).filename().string());
  if (!result.rejects.empty())
    fail(ErrorKind::MalformedRow, L.normalized(kind).string() + " line " + std::to_string(result.rejects.front().line) +
                                      ": " + result.rejects.front().reason);
  return result.records;
}

inline json class_counts_json(const std::vector<panel::WeeklyPanelRow>& rows) {
  json j;
  std::array<std::size_t, kNumClasses> c{};
  for (const auto& r : rows) ++c[index_of(r.label)];
  for (auto k : kAllClasses) j[std::string(to_string(k))] = c[index_of(k)];
  return j;
}

}  // namespace detail

inline StageResult run_build_panel(const RunConfig& cfg) {
  const Layout L{cfg.out};
  const auto roster = cfg.full_roster();
  const auto excluded = cfg.excluded();
  StageResult r;
  const auto rates = detail::reparse(L, ingest::SourceKind::RsvNet, roster,
                                     [](auto& in, auto& ro, auto s) { return ingest::parse_rsvnet(in, ro, s); });
  const auto ww = detail::reparse(L, ingest::SourceKind::Nwss, roster,
                                  [](auto& in, auto& ro, auto s) { return ingest::parse_nwss(in, ro, s); });
  const auto met = detail::reparse(L, ingest::SourceKind::Meteo, roster,
                                   [](auto& in, auto& ro, auto s) { return ingest::parse_meteo(in, ro, s); });
  const auto air = detail::reparse(L, ingest::SourceKind::AirQuality, roster,
                                   [](auto& in, auto& ro, auto s) { return ingest::parse_airquality(in, ro, s); });
  for (auto k : {ingest::SourceKind::RsvNet, ingest::SourceKind::Nwss, ingest::SourceKind::Meteo,
                 ingest::SourceKind::AirQuality})
    r.inputs.push_back(L.normalized(k));

  auto built = panel::build_panel(rates, ww, ingest::meteo_weekly(met, cfg.min_days),
                                  ingest::airquality_weekly(air, cfg.min_days), roster, cfg.rate_filter);
  auto rows = excluded.empty() ? built.rows : panel::exclude_states(built.rows, excluded);
  const auto split = panel::stratified_split(rows, cfg.train_fraction, cfg.seeds().split);

  detail::write_text(L.panel(), [&](std::ostream& o) { panel::write_panel(o, rows); });
  detail::write_text(L.completeness(), [&](std::ostream& o) { panel::write_completeness(o, built.completeness); });
  detail::write_text(L.train(), [&](std::ostream& o) { panel::write_panel(o, split.train); });
  detail::write_text(L.test(), [&](std::ostream& o) { panel::write_panel(o, split.test); });
  detail::write_text(L.summary(), [&](std::ostream& o) {
    panel::write_summary(o, panel::summarize_panel(split.train), panel::summarize_panel(split.test));
  });
  std::vector<std::string> excluded_codes;
  for (const auto& s : excluded) excluded_codes.push_back(s.str());
  const json sm{{"seed", split.seed},
                {"train_fraction", split.train_fraction},
                {"panel_rows", rows.size()},
                {"train_rows", split.train.size()},
                {"test_rows", split.test.size()},
                {"train_classes", detail::class_counts_json(split.train)},
                {"test_classes", detail::class_counts_json(split.test)},
                {"excluded_states", excluded_codes},
                {"panel_sha256", sha256_file(L.panel())}};
  write_file(L.split_manifest(), sm.dump(2) + "\n");
  r.outputs = {L.panel(), L.completeness(), L.train(), L.test(), L.summary(), L.split_manifest()};
  r.summary = sm;
  r.summary["incomplete_state_weeks"] = built.completeness.size();
  return r;
}

// ---------------------------------------------------------------------------
// explore

inline StageResult run_explore(const RunConfig& cfg) {
  const Layout L{cfg.out};
  StageResult r;
  const auto rows = detail::load_panel(L.panel());
  auto rates_in = detail::open_input(L.normalized(ingest::SourceKind::RsvNet));
  const auto rates = ingest::parse_rsvnet(rates_in, cfg.full_roster()).records;
  r.inputs = {L.panel(), L.normalized(ingest::SourceKind::RsvNet)};

  const auto table = analysis::panel_table(rows);
  std::vector<std::string> numeric;
  for (const auto& n : table.names)
    if (n != kFeatureNames[index_of(Feature::RsvSeason)]) numeric.push_back(n);
  const auto corr = analysis::correlation_matrix(table, numeric);
  const auto corr_path = L.explore_dir() / "correlation.csv";
  detail::write_text(corr_path, [&](std::ostream& o) { analysis::write_correlation(o, corr); });

  json selection{{"threshold", cfg.prune_threshold}, {"keep_rules", cfg.keep_rules}};
  try {
    const auto cand = analysis::correlation_matrix(table, analysis::candidate_predictors());
    const auto kept = analysis::collinearity_prune(cand, cfg.prune_threshold, cfg.keep_rules);
    std::vector<std::string> modeled;
    for (const auto& n : FeatureSchema::standard().names)
      if (n != kFeatureNames[index_of(Feature::RsvSeason)]) modeled.push_back(n);
    std::sort(modeled.begin(), modeled.end());
    selection["selected"] = kept;
    selection["matches_model_schema"] = kept == modeled;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::UnresolvedGroup) throw;
    selection["selected"] = nullptr;
    selection["error"] = {{"kind", to_string(e.kind())}, {"message", e.what()}};
  }
  const auto sel_path = L.explore_dir() / "selected_predictors.json";
  write_file(sel_path, selection.dump(2) + "\n");

  std::vector<analysis::DistributionSummary> dists;
  for (std::size_t i = 0; i < table.names.size(); ++i)
    dists.push_back(analysis::distribution_summary(table.names[i], table.columns[i], cfg.histogram_bins));
  const auto dist_path = L.explore_dir() / "distributions.csv";
  detail::write_text(dist_path, [&](std::ostream& o) { analysis::write_distributions(o, dists); });

  r.outputs = {corr_path, sel_path, dist_path};
  analysis::TrendStrata strata;
  strata.state_age_group = cfg.rate_filter.age_group;
  for (auto g : {analysis::TrendGroup::Sex, analysis::TrendGroup::Age, analysis::TrendGroup::Race,
                 analysis::TrendGroup::State}) {
    const auto path = L.explore_dir() / ("trend_" + std::string(analysis::to_string(g)) + ".csv");
    const auto series = analysis::time_trend_extract(rates, g, strata);
    detail::write_text(path, [&](std::ostream& o) { analysis::write_trends(o, series); });
    r.outputs.push_back(path);
  }
  if (auto v = corr.at("Rate", "WVAL")) r.summary["corr_rate_wval"] = *v;
  if (auto v = corr.at("Rate", "T2M")) r.summary["corr_rate_t2m"] = *v;
  r.summary["selection"] = selection;
  return r;
}

// ---------------------------------------------------------------------------
// train

inline learners::Dataset load_dataset(const fs::path& path) {
  return learners::Dataset::from_panel(detail::load_panel(path));
}

inline StageResult run_train(const RunConfig& cfg) {
  const Layout L{cfg.out};
  StageResult r;
  const auto train = load_dataset(L.train());
  const auto sm = detail::load_json(L.split_manifest());
  r.inputs = {L.train(), L.split_manifest()};
  const auto seeds = cfg.seeds();
  for (auto kind : kModelKinds) {
    const auto cv = evaluation::cross_validate(cfg.grid(kind), train, cfg.cv_folds, seeds.cv);
    artifact::TrainingMetadata md;
    md.panel_snapshot_id = sm.at("panel_sha256").get<std::string>();
    md.split_seed = sm.at("seed").get<std::uint64_t>();
    md.train_fraction = sm.at("train_fraction").get<double>();
    md.best_params = evaluation::params_to_json(cv.best_params);
    md.excluded_states = sm.at("excluded_states").get<std::vector<std::string>>();
    md.extra = {{"cv_folds", cfg.cv_folds},
                {"cv_seed", seeds.cv},
                {"cv_best_index", cv.best_index},
                {"cv_best_mean_accuracy", cv.table[cv.best_index].mean_accuracy},
                {"grid_size", cv.table.size()},
                {"train_rows", train.size()}};
    const auto id = artifact::save_artifact(cv.model, md, L.model(kind));
    detail::write_text(L.cv_table(kind), [&](std::ostream& o) { evaluation::write_cv_table(o, cv.table); });
    r.outputs.push_back(L.model(kind));
    r.outputs.push_back(L.cv_table(kind));
    r.summary[std::string(learners::to_string(kind))] = {{"artifact_id", id},
                                                        {"best_params", md.best_params},
                                                        {"cv_mean_accuracy", cv.table[cv.best_index].mean_accuracy}};
  }
  return r;
}

// ---------------------------------------------------------------------------
// evaluate

inline evaluation::Comparison comparison_with_notes(const std::vector<evaluation::EvaluationReport>& reports,
                                                     const std::vector<std::string>& excluded) {
  auto c = evaluation::compare_models(reports);
  if (!excluded.empty()) {
    std::string list;
    for (const auto& s : excluded) list += (list.empty() ? "" : ", ") + s;
    c.notes.push_back("panel excludes states: " + list);
  }
  return c;
}

inline StageResult run_evaluate(const RunConfig& cfg) {
  const Layout L{cfg.out};
  StageResult r;
  const auto test = load_dataset(L.test());
  const auto test_id = sha256_file(L.test());
  r.inputs = {L.test()};
  std::vector<evaluation::EvaluationReport> reports;
  std::vector<std::string> excluded;
  for (auto kind : kModelKinds) {
    r.inputs.push_back(L.model(kind));
    auto art = artifact::load_artifact(L.model(kind));
    if (art.kind() != kind) fail(ErrorKind::CorruptArtifact, L.model(kind).string() + " holds a different model kind");
    auto rep = evaluation::evaluate(art.model, test, art.id, test_id);
    write_file(L.report(kind), evaluation::to_json(rep).dump(2) + "\n");
    r.outputs.push_back(L.report(kind));
    for (auto c : kAllClasses) {
      const auto& curve = rep.roc[index_of(c)];
      if (curve.points.empty()) continue;
      detail::write_text(L.roc(kind, c), [&](std::ostream& o) { evaluation::write_roc(o, curve); });
      r.outputs.push_back(L.roc(kind, c));
    }
    excluded = art.metadata.excluded_states;
    art.metadata.evaluation = rep;
    artifact::save_artifact(art.model, art.metadata, L.model(kind));
    r.outputs.push_back(L.model(kind));
    reports.push_back(std::move(rep));
  }
  const auto cmp = comparison_with_notes(reports, excluded);
  write_file(L.comparison_json(), evaluation::to_json(cmp).dump(2) + "\n");
  write_file(L.comparison_text(), evaluation::render_text(cmp));
  r.outputs.push_back(L.comparison_json());
  r.outputs.push_back(L.comparison_text());
  r.summary = evaluation::to_json(cmp);
  r.console = evaluation::render_text(cmp);
  return r;
}

// ---------------------------------------------------------------------------
// predict

inline StageResult run_predict(const RunConfig& cfg, const fs::path& input, std::optional<ModelKind> kind = {}) {
  const Layout L{cfg.out};
  StageResult r;
  const auto model_path = L.model(kind.value_or(cfg.service.model));
  r.inputs = {input, model_path};
  service::ServiceContext ctx;
  ctx.artifact = artifact::load_artifact(model_path);
  ctx.roster = cfg.full_roster();
  const service::Handlers h(std::move(ctx));
  const auto resp = h.predict(read_file(input));
  if (resp.status != 200) {
    std::string fields;
    for (const auto& f : resp.body.at("fields")) fields += (fields.empty() ? "" : ", ") + f.get<std::string>();
    fail(ErrorKind::SchemaMismatch, "feature file rejected (" + fields + "): missing " + resp.body["missing"].dump() +
                                        ", unknown " + resp.body["unknown"].dump() + ", invalid " +
                                        resp.body["invalid"].dump());
  }
  write_file(L.prediction(), resp.body.dump(2) + "\n");
  r.outputs = {L.prediction()};
  r.summary = resp.body;
  r.console = resp.body.dump(2) + "\n";
  return r;
}

// ---------------------------------------------------------------------------
// report

inline StageResult run_report(const RunConfig& cfg) {
  const Layout L{cfg.out};
  StageResult r;
  std::vector<evaluation::EvaluationReport> reports;
  for (auto kind : kModelKinds) {
    reports.push_back(evaluation::report_from_json(detail::load_json(L.report(kind))));
    r.inputs.push_back(L.report(kind));
  }
  const auto sm = detail::load_json(L.split_manifest());
  r.inputs.push_back(L.split_manifest());
  const auto excluded = sm.at("excluded_states").get<std::vector<std::string>>();
  const auto cmp = comparison_with_notes(reports, excluded);
  std::ostringstream text;
  text << "Model performance comparison\n";
  text << "panel: " << sm.at("panel_sha256").get<std::string>() << " (" << sm.at("panel_rows") << " rows, split seed "
       << sm.at("seed") << ", " << sm.at("train_rows") << " train / " << sm.at("test_rows") << " test)\n\n";
  text << evaluation::render_text(cmp);
  write_file(L.report_text(), text.str());
  r.outputs = {L.report_text()};
  r.summary = evaluation::to_json(cmp);
  r.console = text.str();
  return r;
}

// ---------------------------------------------------------------------------
// serve

inline service::ServiceContext service_context(const RunConfig& cfg, std::optional<ModelKind> kind = {}) {
  const Layout L{cfg.out};
  service::ServiceContext ctx;
  ctx.artifact = artifact::load_artifact(L.model(kind.value_or(cfg.service.model)));
  ctx.history = detail::load_panel(L.panel());
  ctx.roster = cfg.full_roster();
  ctx.cors_origin = cfg.service.cors_origin;
  return ctx;
}

}  // namespace rsv::pipeline
