#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "rsv/learners/dataset.hpp"
#include "rsv/learners/presort.hpp"
#include "rsv/learners/split.hpp"
#include "rsv/random.hpp"

namespace rsv::learners {

struct RegressionNode {
  std::int32_t feature = -1;  // -1: leaf
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  double value = 0.0;
  /// Reduction in the sum of squared residuals achieved by this split.
  double impurity_decrease = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<RegressionNode> nodes;

  template <typename ValueOf>
  double predict_with(ValueOf&& value_of) const {
    std::uint32_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = value_of(static_cast<std::size_t>(n.feature)) < n.threshold ? n.left : n.right;
    }
    return nodes[i].value;
  }

  double predict(std::span<const double> x) const {
    return predict_with([&](std::size_t f) { return x[f]; });
  }
};

struct BoostingParams {
  std::size_t n_stages = 200;
  double learning_rate = 0.1;
  std::size_t max_depth = 3;
  std::size_t min_samples_leaf = 1;
  /// Fraction of rows drawn (without replacement) for each stage's trees.
  double subsample = 1.0;
  std::uint64_t seed = 0;

  friend bool operator==(const BoostingParams&, const BoostingParams&) = default;
};

/// Multinomial gradient boosting. Class scores are
/// initial_scores + learning_rate * sum over stages of the per-class tree
/// outputs; probabilities are their softmax.
struct BoostedEnsemble {
  FeatureSchema schema;
  BoostingParams params;
  std::array<double, kNumClasses> initial_scores{};
  std::vector<std::array<RegressionTree, kNumClasses>> stages;
  /// Mean training log-loss before the first stage and after each stage.
  std::vector<double> train_loss;

  std::size_t n_features() const { return schema.size(); }

  std::array<double, kNumClasses> scores(std::span<const double> x) const {
    std::array<double, kNumClasses> acc{};
    for (const auto& stage : stages)
      for (std::size_t k = 0; k < kNumClasses; ++k) acc[k] += stage[k].predict(x);
    auto s = initial_scores;
    for (std::size_t k = 0; k < kNumClasses; ++k) s[k] += params.learning_rate * acc[k];
    return s;
  }

  ClassProbs predict_proba(std::span<const double> x) const;
};

inline ClassProbs softmax(const std::array<double, kNumClasses>& s) {
  const double m = *std::max_element(s.begin(), s.end());
  ClassProbs p{};
  double z = 0.0;
  for (std::size_t k = 0; k < kNumClasses; ++k) z += (p[k] = std::exp(s[k] - m));
  for (auto& v : p) v /= z;
  return p;
}

inline ClassProbs BoostedEnsemble::predict_proba(std::span<const double> x) const { return softmax(scores(x)); }

namespace detail {

inline constexpr double kMinLogPrior = -700.0;

/// Least-squares regression tree on `targets` (indexed by dataset row).
/// Leaf values come from `leaf_value(slots)`.
template <typename LeafValue>
RegressionTree grow_regression(const Dataset& data, std::vector<std::uint32_t> rows, std::span<const double> targets,
                               std::size_t max_depth, std::size_t min_samples_leaf, LeafValue&& leaf_value) {
  Presort ps(data, std::move(rows));
  const std::size_t p = data.n_features();
  const std::size_t leaf = std::max<std::size_t>(1, min_samples_leaf);
  RegressionTree tree;
  tree.nodes.emplace_back();
  struct Work {
    std::uint32_t node;
    std::size_t begin, end, depth;
  };
  std::vector<Work> stack{{0, 0, ps.size(), 0}};
  std::vector<std::uint32_t> member_rows;
  while (!stack.empty()) {
    const Work w = stack.back();
    stack.pop_back();
    const std::size_t n = w.end - w.begin;
    double total = 0.0, sum_sq = 0.0;
    member_rows.clear();
    for (auto s : ps.members(w.begin, w.end)) {
      const double y = targets[ps.row(s)];
      total += y;
      sum_sq += y * y;
      member_rows.push_back(ps.row(s));
    }
    tree.nodes[w.node].value = leaf_value(std::span<const std::uint32_t>(member_rows));
    if (n < 2 * leaf || (max_depth > 0 && w.depth >= max_depth)) continue;

    const double parent = total * total / static_cast<double>(n);
    const double min_gain = 1e-12 * std::max(sum_sq, 1e-300);
    double best_score = -std::numeric_limits<double>::infinity();
    std::size_t best_f = 0;
    double best_thr = 0.0;
    for (std::size_t f = 0; f < p; ++f) {
      const auto order = ps.sorted(f, w.begin, w.end);
      double left = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left += targets[ps.row(order[i])];
        const std::size_t nl = i + 1, nr = n - nl;
        const double lo = ps.value(f, order[i]), hi = ps.value(f, order[i + 1]);
        if (!(lo < hi) || nl < leaf || nr < leaf) continue;
        const double right = total - left;
        const double score = left * left / static_cast<double>(nl) + right * right / static_cast<double>(nr);
        if (score > best_score) {
          best_score = score;
          best_f = f;
          best_thr = split_midpoint(lo, hi);
        }
      }
    }
    if (!(best_score - parent > min_gain)) continue;

    const auto mid = ps.partition(w.begin, w.end, best_f, best_thr);
    const auto left_idx = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& node = tree.nodes[w.node];
    node.feature = static_cast<std::int32_t>(best_f);
    node.threshold = best_thr;
    node.left = left_idx;
    node.right = left_idx + 1;
    node.impurity_decrease = best_score - parent;
    stack.push_back({left_idx + 1, mid, w.end, w.depth + 1});
    stack.push_back({left_idx, w.begin, mid, w.depth + 1});
  }
  return tree;
}

inline double mean_log_loss(const std::vector<std::array<double, kNumClasses>>& scores, std::span<const RiskClass> y) {
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    const double m = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double v : s) z += std::exp(v - m);
    total += -(s[index_of(y[i])] - m - std::log(z));
  }
  return total / static_cast<double>(scores.size());
}

}  // namespace detail

/// Fits the ensemble. Each stage fits one regression tree per class to the
/// residuals (one-hot minus softmax) with Newton leaf values
/// (K-1)/K * sum(r) / sum(|r|(1-|r|)). If the shrunken stage would raise the
/// training log-loss, its leaf values are halved until it does not (or zeroed),
/// so the training loss never increases from one stage to the next.
inline BoostedEnsemble fit_boosting(const Dataset& data, const BoostingParams& params) {
  if (!(params.learning_rate >= 0.0 && params.learning_rate <= 1.0))
    fail(ErrorKind::InvalidArgument, "learning rate must lie in [0, 1]");
  if (!(params.subsample > 0.0 && params.subsample <= 1.0))
    fail(ErrorKind::InvalidArgument, "subsample must lie in (0, 1]");
  const std::size_t n = data.size();
  if (n == 0) fail(ErrorKind::EmptyInput, "cannot fit boosting on no rows");
  constexpr double K = static_cast<double>(kNumClasses);

  BoostedEnsemble model;
  model.schema = data.schema();
  model.params = params;
  const auto counts = data.class_counts();
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const double prior = static_cast<double>(counts[k]) / static_cast<double>(n);
    model.initial_scores[k] = prior > 0.0 ? std::max(std::log(prior), detail::kMinLogPrior) : detail::kMinLogPrior;
  }

  // acc[i] is the running sum of stage outputs, accumulated in the same order
  // as BoostedEnsemble::scores.
  std::vector<std::array<double, kNumClasses>> acc(n, std::array<double, kNumClasses>{});
  std::vector<std::array<double, kNumClasses>> F(n, model.initial_scores);
  const auto labels = data.labels();
  double loss = detail::mean_log_loss(F, labels);
  model.train_loss.push_back(loss);

  std::vector<double> residual(n), abs_term(n);
  std::vector<std::array<double, kNumClasses>> step(n), trial(n);
  auto scores_with = [&](double multiplier) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < kNumClasses; ++k)
        trial[i][k] = model.initial_scores[k] + params.learning_rate * (acc[i][k] + step[i][k] * multiplier);
  };

  for (std::size_t m = 0; m < params.n_stages; ++m) {
    std::vector<std::uint32_t> rows = detail::all_rows(n);
    if (params.subsample < 1.0) {
      Rng rng(derive_seed(params.seed, m));
      rng.shuffle(std::span<std::uint32_t>(rows));
      const auto keep =
          std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(params.subsample * static_cast<double>(n))));
      rows.resize(keep);
      std::sort(rows.begin(), rows.end());
    }
    std::vector<ClassProbs> prob(n);
    for (std::size_t i = 0; i < n; ++i) prob[i] = softmax(F[i]);

    std::array<RegressionTree, kNumClasses> stage;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        residual[i] = (index_of(labels[i]) == k ? 1.0 : 0.0) - prob[i][k];
        const double a = std::abs(residual[i]);
        abs_term[i] = a * (1.0 - a);
      }
      stage[k] = detail::grow_regression(data, rows, residual, params.max_depth, params.min_samples_leaf,
                                         [&](std::span<const std::uint32_t> members) {
                                           double num = 0.0, den = 0.0;
                                           for (auto r : members) {
                                             num += residual[r];
                                             den += abs_term[r];
                                           }
                                           if (den < 1e-150) return 0.0;
                                           return (K - 1.0) / K * num / den;
                                         });
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < kNumClasses; ++k)
        step[i][k] = stage[k].predict_with([&data, i](std::size_t f) { return data.value(i, f); });

    double multiplier = 1.0;
    double new_loss = loss;
    bool accepted = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      scores_with(multiplier);
      new_loss = detail::mean_log_loss(trial, labels);
      if (new_loss <= loss) {
        accepted = true;
        break;
      }
      multiplier *= 0.5;
    }
    if (!accepted) {
      multiplier = 0.0;
      scores_with(0.0);
      new_loss = detail::mean_log_loss(trial, labels);
    }
    if (multiplier != 1.0)
      for (auto& tree : stage)
        for (auto& node : tree.nodes) node.value *= multiplier;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < kNumClasses; ++k) acc[i][k] += step[i][k] * multiplier;
    F = trial;
    loss = new_loss;
    model.train_loss.push_back(loss);
    model.stages.push_back(std::move(stage));
  }
  return model;
}

}  // namespace rsv::learners
