#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rsv/learners/dataset.hpp"
#include "rsv/learners/tree.hpp"
#include "rsv/random.hpp"

namespace rsv::learners {

struct ForestParams {
  std::size_t n_trees = 500;
  std::size_t mtry = 3;  // floor(sqrt(15))
  bool bootstrap = true;
  std::uint64_t seed = 0;
  std::size_t max_depth = 0;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;

  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

struct Forest {
  FeatureSchema schema;
  ForestParams params;
  std::vector<DecisionTree> trees;
  std::optional<double> oob_error;

  std::size_t n_features() const { return schema.size(); }

  /// Unweighted mean of the tree probabilities. Each class's terms are summed
  /// in sorted order so the result does not depend on tree order.
  ClassProbs predict_proba(std::span<const double> x) const {
    std::array<std::vector<double>, kNumClasses> terms;
    for (auto& t : terms) t.reserve(trees.size());
    for (const auto& tree : trees) {
      const auto& p = tree.predict_proba(x);
      for (std::size_t k = 0; k < kNumClasses; ++k) terms[k].push_back(p[k]);
    }
    ClassProbs out{};
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      std::sort(terms[k].begin(), terms[k].end());
      double s = 0.0;
      for (double v : terms[k]) s += v;
      out[k] = s / static_cast<double>(trees.size());
    }
    return out;
  }
};

/// Random forest: each tree on its own seeded bootstrap resample with
/// per-node mtry feature sampling, grown without pruning.
inline Forest fit_forest(const Dataset& data, const ForestParams& params) {
  if (params.n_trees == 0) fail(ErrorKind::InvalidArgument, "forest needs at least one tree");
  if (params.mtry == 0 || params.mtry > data.n_features())
    fail(ErrorKind::InvalidArgument, "mtry must lie in 1.." + std::to_string(data.n_features()));
  if (data.size() == 0) fail(ErrorKind::EmptyInput, "cannot fit a forest on no rows");
  const std::size_t n = data.size();
  Forest forest;
  forest.schema = data.schema();
  forest.params = params;
  forest.trees.reserve(params.n_trees);

  TreeParams tp;
  tp.max_depth = params.max_depth;
  tp.min_samples_split = params.min_samples_split;
  tp.min_samples_leaf = params.min_samples_leaf;

  std::vector<ClassProbs> oob_sum(params.bootstrap ? n : 0, ClassProbs{});
  std::vector<std::uint32_t> oob_votes(params.bootstrap ? n : 0, 0);
  std::vector<std::uint8_t> in_bag(n);

  for (std::size_t t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(params.seed, t));
    std::vector<std::uint32_t> rows;
    if (params.bootstrap) {
      rows.resize(n);
      std::fill(in_bag.begin(), in_bag.end(), 0);
      for (auto& r : rows) {
        r = static_cast<std::uint32_t>(rng.below(n));
        in_bag[r] = 1;
      }
    } else {
      rows = detail::all_rows(n);
    }
    forest.trees.push_back(detail::grow(data, std::move(rows), tp, {params.mtry, &rng}));
    if (params.bootstrap) {
      const auto& tree = forest.trees.back();
      std::vector<double> x(data.n_features());
      for (std::size_t i = 0; i < n; ++i) {
        if (in_bag[i]) continue;
        for (std::size_t f = 0; f < x.size(); ++f) x[f] = data.value(i, f);
        const auto& p = tree.predict_proba(x);
        for (std::size_t k = 0; k < kNumClasses; ++k) oob_sum[i][k] += p[k];
        ++oob_votes[i];
      }
    }
  }

  if (params.bootstrap) {
    std::size_t scored = 0, wrong = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (oob_votes[i] == 0) continue;
      ++scored;
      if (argmax_severe(oob_sum[i]) != data.label(i)) ++wrong;
    }
    if (scored > 0) forest.oob_error = static_cast<double>(wrong) / static_cast<double>(scored);
  }
  return forest;
}

}  // namespace rsv::learners
