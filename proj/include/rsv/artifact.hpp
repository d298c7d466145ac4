#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsv/error.hpp"
#include "rsv/evaluation.hpp"
#include "rsv/features.hpp"
#include "rsv/hash.hpp"
#include "rsv/learners/model.hpp"

namespace rsv::artifact {

using nlohmann::json;
using learners::Model;
using learners::ModelKind;

inline constexpr int kFormatVersion = 1;

struct TrainingMetadata {
  std::string panel_snapshot_id;
  std::uint64_t split_seed = 0;
  double train_fraction = 0.8;
  json best_params = json::object();
  std::vector<std::string> excluded_states;
  /// Free-form extras (cv table summary, run seeds).
  json extra = json::object();
  std::optional<evaluation::EvaluationReport> evaluation;
};

struct ModelArtifact {
  int format_version = kFormatVersion;
  Model model;
  TrainingMetadata metadata;
  /// SHA-256 of the canonical model_kind + schema + model payload.
  std::string id;

  ModelKind kind() const { return learners::kind_of(model); }
  const FeatureSchema& schema() const { return learners::schema_of(model); }
};

// ---------------------------------------------------------------------------
// Encoding

namespace detail {

inline const std::vector<std::string> kTreeNodeFields{"feature", "threshold", "left", "right",
                                                      "n_low", "n_alert", "n_epidemic", "impurity_decrease"};
inline const std::vector<std::string> kRegressionNodeFields{"feature", "threshold", "left", "right", "value",
                                                            "impurity_decrease"};

inline json schema_json(const FeatureSchema& s) {
  return {{"names", s.names}, {"units", s.units}, {"categorical", s.categorical}};
}

inline json tree_nodes(const learners::DecisionTree& t) {
  auto out = json::array();
  for (const auto& n : t.nodes)
    out.push_back({n.feature, n.threshold, n.left, n.right, n.counts[0], n.counts[1], n.counts[2], n.impurity_decrease});
  return out;
}

inline json regression_nodes(const learners::RegressionTree& t) {
  auto out = json::array();
  for (const auto& n : t.nodes) out.push_back({n.feature, n.threshold, n.left, n.right, n.value, n.impurity_decrease});
  return out;
}

inline json tree_params_json(const learners::TreeParams& p) {
  return evaluation::params_to_json(evaluation::LearnerParams{p});
}

inline json model_json(const Model& m) {
  return std::visit(
      [](const auto& x) -> json {
        using M = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<M, learners::DecisionTree>) {
          return {{"params", tree_params_json(x.params)}, {"node_fields", kTreeNodeFields}, {"nodes", tree_nodes(x)}};
        } else if constexpr (std::is_same_v<M, learners::Forest>) {
          auto trees = json::array();
          for (const auto& t : x.trees) trees.push_back(tree_nodes(t));
          return {{"params", evaluation::params_to_json(x.params)},
                  {"tree_params", tree_params_json(x.trees.empty() ? learners::TreeParams{} : x.trees.front().params)},
                  {"oob_error", x.oob_error ? json(*x.oob_error) : json()},
                  {"node_fields", kTreeNodeFields},
                  {"trees", trees}};
        } else {
          auto stages = json::array();
          for (const auto& st : x.stages) {
            auto per_class = json::array();
            for (const auto& t : st) per_class.push_back(regression_nodes(t));
            stages.push_back(per_class);
          }
          return {{"params", evaluation::params_to_json(x.params)},
                  {"initial_scores", x.initial_scores},
                  {"train_loss", x.train_loss},
                  {"node_fields", kRegressionNodeFields},
                  {"stages", stages}};
        }
      },
      m);
}

inline json metadata_json(const TrainingMetadata& md) {
  json j{{"panel_snapshot_id", md.panel_snapshot_id},
         {"split_seed", md.split_seed},
         {"train_fraction", md.train_fraction},
         {"best_params", md.best_params},
         {"excluded_states", md.excluded_states},
         {"extra", md.extra}};
  j["evaluation"] = md.evaluation ? evaluation::to_json(*md.evaluation) : json();
  return j;
}

inline std::string content_id(const json& doc) {
  const json core{{"model_kind", doc.at("model_kind")}, {"schema", doc.at("schema")}, {"model", doc.at("model")}};
  return sha256_hex(core.dump());
}

inline std::string checksum_of(json doc) {
  doc.erase("checksum");
  return sha256_hex(doc.dump());
}

}  // namespace detail

/// The full self-describing document, checksum included.
inline json to_json(const Model& model, const TrainingMetadata& metadata) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["model_kind"] = learners::to_string(learners::kind_of(model));
  doc["schema"] = detail::schema_json(learners::schema_of(model));
  doc["model"] = detail::model_json(model);
  doc["training_metadata"] = detail::metadata_json(metadata);
  doc["artifact_id"] = detail::content_id(doc);
  doc["checksum"] = detail::checksum_of(doc);
  return doc;
}

inline std::string serialize(const Model& model, const TrainingMetadata& metadata) {
  return to_json(model, metadata).dump() + "\n";
}

/// Writes the artifact and returns its id (the content hash of the model).
inline std::string save_artifact(const Model& model, const TrainingMetadata& metadata,
                                 const std::filesystem::path& path) {
  const auto doc = to_json(model, metadata);
  write_file(path, doc.dump() + "\n");
  return doc.at("artifact_id").get<std::string>();
}

// ---------------------------------------------------------------------------
// Decoding

namespace detail {

[[noreturn]] inline void corrupt(const std::string& why) { fail(ErrorKind::CorruptArtifact, why); }

inline FeatureSchema parse_schema(const json& j) {
  FeatureSchema s;
  s.names = j.at("names").get<std::vector<std::string>>();
  s.units = j.at("units").get<std::vector<std::string>>();
  s.categorical = j.at("categorical").get<std::vector<bool>>();
  return s;
}

/// Children always sit after their parent, which rules out cycles.
inline void check_links(std::size_t i, std::int64_t feature, std::uint64_t left, std::uint64_t right, std::size_t n,
                        std::size_t p) {
  if (feature < 0) {
    if (feature != -1 || left != 0 || right != 0) corrupt("malformed leaf at node " + std::to_string(i));
    return;
  }
  if (static_cast<std::size_t>(feature) >= p) corrupt("feature index out of range at node " + std::to_string(i));
  if (left <= i || right <= i || left >= n || right >= n)
    corrupt("child index out of range at node " + std::to_string(i));
}

inline learners::DecisionTree parse_tree(const json& nodes, const FeatureSchema& schema,
                                         const learners::TreeParams& params) {
  learners::DecisionTree t;
  t.schema = schema;
  t.params = params;
  if (!nodes.is_array() || nodes.empty()) corrupt("tree has no nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& r = nodes[i];
    if (!r.is_array() || r.size() != kTreeNodeFields.size()) corrupt("tree node " + std::to_string(i) + " is malformed");
    learners::TreeNode n;
    const auto feature = r[0].get<std::int64_t>();
    const auto left = r[2].get<std::uint64_t>(), right = r[3].get<std::uint64_t>();
    check_links(i, feature, left, right, nodes.size(), schema.size());
    n.feature = static_cast<std::int32_t>(feature);
    n.threshold = r[1].get<double>();
    n.left = static_cast<std::uint32_t>(left);
    n.right = static_cast<std::uint32_t>(right);
    for (std::size_t k = 0; k < kNumClasses; ++k) n.counts[k] = r[4 + k].get<std::size_t>();
    if (n.n() == 0) corrupt("tree node " + std::to_string(i) + " has no training samples");
    n.probs = learners::detail::probs_of(n.counts);
    n.impurity_decrease = r[7].get<double>();
    t.nodes.push_back(n);
  }
  return t;
}

inline learners::RegressionTree parse_regression(const json& nodes, std::size_t p) {
  learners::RegressionTree t;
  if (!nodes.is_array() || nodes.empty()) corrupt("regression tree has no nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& r = nodes[i];
    if (!r.is_array() || r.size() != kRegressionNodeFields.size())
      corrupt("regression node " + std::to_string(i) + " is malformed");
    learners::RegressionNode n;
    const auto feature = r[0].get<std::int64_t>();
    const auto left = r[2].get<std::uint64_t>(), right = r[3].get<std::uint64_t>();
    check_links(i, feature, left, right, nodes.size(), p);
    n.feature = static_cast<std::int32_t>(feature);
    n.threshold = r[1].get<double>();
    n.left = static_cast<std::uint32_t>(left);
    n.right = static_cast<std::uint32_t>(right);
    n.value = r[4].get<double>();
    n.impurity_decrease = r[5].get<double>();
    t.nodes.push_back(n);
  }
  return t;
}

inline Model parse_model(ModelKind kind, const json& j, const FeatureSchema& schema) {
  const auto params = evaluation::params_from_json(kind, j.at("params"));
  switch (kind) {
    case ModelKind::Cart: return parse_tree(j.at("nodes"), schema, std::get<learners::TreeParams>(params));
    case ModelKind::Forest: {
      learners::Forest f;
      f.schema = schema;
      f.params = std::get<learners::ForestParams>(params);
      const auto tp = std::get<learners::TreeParams>(evaluation::params_from_json(ModelKind::Cart, j.at("tree_params")));
      for (const auto& t : j.at("trees")) f.trees.push_back(parse_tree(t, schema, tp));
      if (f.trees.empty()) corrupt("forest has no trees");
      if (!j.at("oob_error").is_null()) f.oob_error = j.at("oob_error").get<double>();
      return f;
    }
    case ModelKind::Boosting: {
      learners::BoostedEnsemble b;
      b.schema = schema;
      b.params = std::get<learners::BoostingParams>(params);
      b.initial_scores = j.at("initial_scores").get<std::array<double, kNumClasses>>();
      b.train_loss = j.at("train_loss").get<std::vector<double>>();
      for (const auto& st : j.at("stages")) {
        if (!st.is_array() || st.size() != kNumClasses) corrupt("boosting stage must hold one tree per class");
        std::array<learners::RegressionTree, kNumClasses> stage;
        for (std::size_t k = 0; k < kNumClasses; ++k) stage[k] = parse_regression(st[k], schema.size());
        b.stages.push_back(std::move(stage));
      }
      return b;
    }
  }
  corrupt("unknown model kind");
}

inline TrainingMetadata parse_metadata(const json& j) {
  TrainingMetadata md;
  md.panel_snapshot_id = j.at("panel_snapshot_id").get<std::string>();
  md.split_seed = j.at("split_seed").get<std::uint64_t>();
  md.train_fraction = j.at("train_fraction").get<double>();
  md.best_params = j.at("best_params");
  md.excluded_states = j.at("excluded_states").get<std::vector<std::string>>();
  md.extra = j.at("extra");
  if (!j.at("evaluation").is_null()) md.evaluation = evaluation::report_from_json(j.at("evaluation"));
  return md;
}

}  // namespace detail

/// Checks, in order: well-formed JSON, format version, schema length,
/// checksum, then the model structure itself.
inline ModelArtifact parse_artifact(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    detail::corrupt(std::string("artifact is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) detail::corrupt("artifact is not a JSON object");
  try {
    const auto version = doc.at("format_version").get<int>();
    if (version != kFormatVersion)
      fail(ErrorKind::UnsupportedVersion, "artifact format_version " + std::to_string(version) + " is not supported (expected " +
                                              std::to_string(kFormatVersion) + ")");
    const auto schema = detail::parse_schema(doc.at("schema"));
    schema.validate();
    if (!doc.contains("checksum") || doc.at("checksum") != detail::checksum_of(doc))
      detail::corrupt("artifact checksum does not match its content");
    const auto kind = learners::parse_model_kind(doc.at("model_kind").get<std::string>());
    if (!kind) detail::corrupt("unknown model_kind");
    ModelArtifact a;
    a.format_version = kFormatVersion;
    a.model = detail::parse_model(*kind, doc.at("model"), schema);
    a.metadata = detail::parse_metadata(doc.at("training_metadata"));
    a.id = doc.at("artifact_id").get<std::string>();
    if (a.id != detail::content_id(doc)) detail::corrupt("artifact id does not match the model content");
    return a;
  } catch (const json::exception& e) {
    detail::corrupt(std::string("artifact structure is invalid: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidArgument) detail::corrupt(e.what());
    throw;
  }
}

inline ModelArtifact load_artifact(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::IoFailure, "artifact " + path.string() + " does not exist");
  return parse_artifact(read_file(path));
}

}  // namespace rsv::artifact
