#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rsv/error.hpp"
#include "rsv/learners/boosting.hpp"
#include "rsv/learners/forest.hpp"
#include "rsv/learners/tree.hpp"

namespace rsv::learners {

enum class ModelKind { Cart, Forest, Boosting };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Cart: return "cart";
    case ModelKind::Forest: return "forest";
    case ModelKind::Boosting: return "boosting";
  }
  return "?";
}

inline std::string_view display_name(ModelKind k) {
  switch (k) {
    case ModelKind::Cart: return "CART";
    case ModelKind::Forest: return "Random Forest";
    case ModelKind::Boosting: return "Boosting";
  }
  return "?";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
  for (auto k : {ModelKind::Cart, ModelKind::Forest, ModelKind::Boosting})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

using Model = std::variant<DecisionTree, Forest, BoostedEnsemble>;

inline ModelKind kind_of(const Model& m) { return static_cast<ModelKind>(m.index()); }

inline const FeatureSchema& schema_of(const Model& m) {
  return std::visit([](const auto& x) -> const FeatureSchema& { return x.schema; }, m);
}

inline void check_input(const FeatureSchema& schema, std::span<const double> x) {
  if (x.size() != schema.size())
    fail(ErrorKind::SchemaMismatch,
         "expected " + std::to_string(schema.size()) + " features, got " + std::to_string(x.size()));
  for (std::size_t f = 0; f < x.size(); ++f)
    if (!std::isfinite(x[f])) fail(ErrorKind::NonFiniteFeature, "feature " + schema.names[f] + " is not finite");
}

template <typename M>
ClassProbs predict_proba(const M& model, std::span<const double> x) {
  check_input(model.schema, x);
  return model.predict_proba(x);
}

inline ClassProbs predict_proba(const Model& model, std::span<const double> x) {
  return std::visit([&](const auto& m) { return predict_proba(m, x); }, model);
}

/// Most probable class; exact ties resolve toward the more severe class.
template <typename M>
RiskClass predict_class(const M& model, std::span<const double> x) {
  return argmax_severe(predict_proba(model, x));
}

/// Features sorted by normalized total impurity decrease (descending, ties
/// by schema order). All zeros when the model never splits.
struct ImportanceRanking {
  std::vector<std::pair<std::string, double>> entries;

  double of(std::string_view name) const {
    for (const auto& [n, v] : entries)
      if (n == name) return v;
    return 0.0;
  }

  std::vector<std::string> top(std::size_t k) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < std::min(k, entries.size()); ++i) out.push_back(entries[i].first);
    return out;
  }
};

namespace detail {

inline void add_tree_importance(const DecisionTree& t, std::vector<double>& acc) {
  for (const auto& n : t.nodes)
    if (!n.is_leaf()) acc[static_cast<std::size_t>(n.feature)] += n.impurity_decrease;
}

inline void add_tree_importance(const RegressionTree& t, std::vector<double>& acc) {
  for (const auto& n : t.nodes)
    if (!n.is_leaf()) acc[static_cast<std::size_t>(n.feature)] += n.impurity_decrease;
}

inline ImportanceRanking rank(const FeatureSchema& schema, std::vector<double> raw) {
  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  std::vector<std::size_t> idx(raw.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (total > 0.0)
    for (auto& v : raw) v /= total;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return raw[a] > raw[b]; });
  ImportanceRanking out;
  for (auto i : idx) out.entries.emplace_back(schema.names[i], raw[i]);
  return out;
}

}  // namespace detail

inline ImportanceRanking variable_importance(const DecisionTree& tree) {
  std::vector<double> raw(tree.n_features(), 0.0);
  detail::add_tree_importance(tree, raw);
  return detail::rank(tree.schema, std::move(raw));
}

inline ImportanceRanking variable_importance(const Forest& forest) {
  std::vector<double> raw(forest.n_features(), 0.0);
  for (const auto& t : forest.trees) detail::add_tree_importance(t, raw);
  return detail::rank(forest.schema, std::move(raw));
}

inline ImportanceRanking variable_importance(const BoostedEnsemble& model) {
  std::vector<double> raw(model.n_features(), 0.0);
  for (const auto& stage : model.stages)
    for (const auto& t : stage) detail::add_tree_importance(t, raw);
  return detail::rank(model.schema, std::move(raw));
}

inline ImportanceRanking variable_importance(const Model& model) {
  return std::visit([](const auto& m) { return variable_importance(m); }, model);
}

}  // namespace rsv::learners
