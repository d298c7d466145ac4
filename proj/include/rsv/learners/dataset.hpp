#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rsv/error.hpp"
#include "rsv/features.hpp"
#include "rsv/panel.hpp"
#include "rsv/risk.hpp"

namespace rsv::learners {

/// Column-major feature matrix with one RiskClass label per row.
class Dataset {
 public:
  explicit Dataset(FeatureSchema schema) : schema_(std::move(schema)), columns_(schema_.size()) {}

  /// Schema with generic names f0..f{p-1}, for ad-hoc data.
  static Dataset with_features(std::size_t p) {
    FeatureSchema s;
    for (std::size_t i = 0; i < p; ++i) {
      s.names.push_back("f" + std::to_string(i));
      s.units.emplace_back();
      s.categorical.push_back(false);
    }
    return Dataset(std::move(s));
  }

  static Dataset from_panel(const std::vector<panel::WeeklyPanelRow>& rows) {
    Dataset d(FeatureSchema::standard());
    for (const auto& r : rows) d.add_row(r.features, r.label);
    return d;
  }

  void add_row(std::span<const double> x, RiskClass y) {
    if (x.size() != columns_.size())
      fail(ErrorKind::SchemaMismatch, "row has " + std::to_string(x.size()) + " features, expected " +
                                          std::to_string(columns_.size()));
    for (std::size_t f = 0; f < x.size(); ++f) {
      if (!std::isfinite(x[f])) fail(ErrorKind::NonFiniteFeature, "feature " + schema_.names[f] + " is not finite");
      columns_[f].push_back(x[f]);
    }
    labels_.push_back(y);
  }

  std::size_t size() const { return labels_.size(); }
  std::size_t n_features() const { return columns_.size(); }
  const FeatureSchema& schema() const { return schema_; }
  double value(std::size_t row, std::size_t feature) const { return columns_[feature][row]; }
  std::span<const double> column(std::size_t feature) const { return columns_[feature]; }
  RiskClass label(std::size_t row) const { return labels_[row]; }
  std::span<const RiskClass> labels() const { return labels_; }

  std::vector<double> row(std::size_t i) const {
    std::vector<double> x(columns_.size());
    for (std::size_t f = 0; f < x.size(); ++f) x[f] = columns_[f][i];
    return x;
  }

  ClassCounts class_counts() const {
    ClassCounts c{};
    for (auto y : labels_) ++c[index_of(y)];
    return c;
  }

  Dataset subset(std::span<const std::size_t> rows) const {
    Dataset d(schema_);
    for (auto& c : d.columns_) c.reserve(rows.size());
    for (auto r : rows) {
      for (std::size_t f = 0; f < columns_.size(); ++f) d.columns_[f].push_back(columns_[f][r]);
      d.labels_.push_back(labels_[r]);
    }
    return d;
  }

 private:
  FeatureSchema schema_;
  std::vector<std::vector<double>> columns_;
  std::vector<RiskClass> labels_;
};

/// Gini impurity 1 - sum(p_k^2).
inline double gini(const ClassCounts& counts) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) fail(ErrorKind::EmptyNode, "gini of an empty node");
  double sum_sq = 0.0;
  for (auto c : counts) sum_sq += static_cast<double>(c) * static_cast<double>(c);
  const double t = static_cast<double>(total);
  return 1.0 - sum_sq / (t * t);
}

}  // namespace rsv::learners
