#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "rsv/error.hpp"
#include "rsv/learners/dataset.hpp"
#include "rsv/learners/presort.hpp"
#include "rsv/learners/split.hpp"
#include "rsv/random.hpp"

namespace rsv::learners {

struct TreeParams {
  std::size_t max_depth = 0;  // 0: unlimited
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  double complexity_parameter = 0.0;

  friend bool operator==(const TreeParams&, const TreeParams&) = default;
};

/// Internal nodes route x[feature] < threshold to `left`. Every node keeps its
/// training class counts.
struct TreeNode {
  std::int32_t feature = -1;  // -1: leaf
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  ClassCounts counts{};
  ClassProbs probs{};
  /// n*gini(node) - nl*gini(left) - nr*gini(right); zero at leaves.
  double impurity_decrease = 0.0;

  bool is_leaf() const { return feature < 0; }
  std::size_t n() const { return counts[0] + counts[1] + counts[2]; }
};

struct DecisionTree {
  FeatureSchema schema;
  TreeParams params;
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::size_t n_features() const { return schema.size(); }

  const TreeNode& leaf_for(std::span<const double> x) const {
    std::uint32_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return nodes[i];
  }

  ClassProbs predict_proba(std::span<const double> x) const { return leaf_for(x).probs; }

  std::size_t n_leaves() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.is_leaf(); }));
  }

  std::size_t depth() const {
    std::size_t best = 0;
    std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [i, d] = stack.back();
      stack.pop_back();
      best = std::max(best, d);
      if (!nodes[i].is_leaf()) {
        stack.emplace_back(nodes[i].left, d + 1);
        stack.emplace_back(nodes[i].right, d + 1);
      }
    }
    return best;
  }

  /// Features that appear in at least one split.
  std::vector<std::size_t> split_features() const {
    std::vector<std::size_t> out;
    for (const auto& n : nodes)
      if (!n.is_leaf()) out.push_back(static_cast<std::size_t>(n.feature));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

namespace detail {

inline ClassProbs probs_of(const ClassCounts& c) {
  const double t = static_cast<double>(c[0] + c[1] + c[2]);
  return {static_cast<double>(c[0]) / t, static_cast<double>(c[1]) / t, static_cast<double>(c[2]) / t};
}

/// Per-node candidate features. With mtry == 0 or mtry >= p every feature is
/// scanned; otherwise features are visited in random order until mtry of
/// them are non-constant in the node.
struct FeatureSampler {
  std::size_t mtry = 0;
  Rng* rng = nullptr;
};

/// Grows an unpruned Gini tree on the given slot->row sample.
inline DecisionTree grow(const Dataset& data, std::vector<std::uint32_t> rows, const TreeParams& params,
                         FeatureSampler sampler = {}) {
  if (rows.empty()) fail(ErrorKind::EmptyInput, "cannot grow a tree on an empty sample");
  Presort ps(data, std::move(rows));
  const std::size_t p = data.n_features();
  const bool sampled = sampler.mtry > 0 && sampler.mtry < p;
  if (sampled && sampler.rng == nullptr) fail(ErrorKind::InvalidArgument, "feature sampling needs a generator");
  const std::size_t leaf = std::max<std::size_t>(1, params.min_samples_leaf);

  DecisionTree tree;
  tree.schema = data.schema();
  tree.params = params;
  tree.nodes.emplace_back();

  struct Work {
    std::uint32_t node;
    std::size_t begin, end, depth;
  };
  std::vector<Work> stack{{0, 0, ps.size(), 0}};
  std::vector<std::size_t> features(p);
  while (!stack.empty()) {
    const Work w = stack.back();
    stack.pop_back();
    auto& node = tree.nodes[w.node];
    ClassCounts counts{};
    for (auto s : ps.members(w.begin, w.end)) ++counts[index_of(data.label(ps.row(s)))];
    node.counts = counts;
    node.probs = probs_of(counts);

    const std::size_t n = w.end - w.begin;
    const bool pure = static_cast<std::size_t>(std::count(counts.begin(), counts.end(), std::size_t{0})) >= kNumClasses - 1;
    if (pure || n < params.min_samples_split || n < 2 * leaf || (params.max_depth > 0 && w.depth >= params.max_depth))
      continue;

    const auto parent = PurityScore::of(counts, n);
    std::optional<Candidate> best;
    auto consider = [&](std::size_t f) {
      const auto order = ps.sorted(f, w.begin, w.end);
      auto c = scan_feature(
          f, n, [&](std::size_t i) { return ps.value(f, order[i]); },
          [&](std::size_t i) { return data.label(ps.row(order[i])); }, counts, parent, leaf);
      if (c && (!best || better(*c, *best))) best = c;
    };
    if (!sampled) {
      for (std::size_t f = 0; f < p; ++f) consider(f);
    } else {
      for (std::size_t f = 0; f < p; ++f) features[f] = f;
      std::size_t visited = 0;
      for (std::size_t i = 0; i < p && visited < sampler.mtry; ++i) {
        const auto j = i + static_cast<std::size_t>(sampler.rng->below(p - i));
        std::swap(features[i], features[j]);
        const auto f = features[i];
        if (ps.constant_in(f, w.begin, w.end)) continue;
        ++visited;
        consider(f);
      }
    }
    if (!best) continue;

    const auto mid = ps.partition(w.begin, w.end, best->split.feature, best->split.threshold);
    const auto left = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& parent_node = tree.nodes[w.node];
    parent_node.feature = static_cast<std::int32_t>(best->split.feature);
    parent_node.threshold = best->split.threshold;
    parent_node.left = left;
    parent_node.right = left + 1;
    parent_node.impurity_decrease = best->split.impurity_decrease * static_cast<double>(n);
    stack.push_back({left + 1, mid, w.end, w.depth + 1});
    stack.push_back({left, w.begin, mid, w.depth + 1});
  }
  return tree;
}

/// Rebuilds the node array keeping only nodes reachable through non-collapsed
/// splits, in the same allocation order grow() uses.
inline DecisionTree compact(const DecisionTree& src, const std::vector<bool>& collapsed) {
  DecisionTree out;
  out.schema = src.schema;
  out.params = src.params;
  out.nodes.push_back(src.nodes[0]);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [old_i, new_i] = stack.back();
    stack.pop_back();
    const auto& o = src.nodes[old_i];
    if (o.is_leaf() || collapsed[old_i]) {
      auto& n = out.nodes[new_i];
      n.feature = -1;
      n.threshold = 0.0;
      n.left = n.right = 0;
      n.impurity_decrease = 0.0;
      continue;
    }
    const auto left = static_cast<std::uint32_t>(out.nodes.size());
    out.nodes.push_back(src.nodes[o.left]);
    out.nodes.push_back(src.nodes[o.right]);
    out.nodes[new_i].left = left;
    out.nodes[new_i].right = left + 1;
    stack.emplace_back(o.right, left + 1);
    stack.emplace_back(o.left, left);
  }
  return out;
}

}  // namespace detail

/// Weakest-link cost-complexity pruning. Node risk is R(t) = n_t * gini_t / N.
/// While the smallest link strength g(t) = (R(t) - R(T_t)) / (|leaves(T_t)| - 1)
/// is at most cp * R(root), every node attaining it is collapsed. The result
/// is the smallest subtree minimizing R(T) + cp * R(root) * |leaves(T)|.
inline DecisionTree prune_tree(const DecisionTree& tree, double complexity_parameter) {
  if (tree.nodes.empty()) return tree;
  if (complexity_parameter < 0.0) fail(ErrorKind::InvalidArgument, "complexity parameter must be non-negative");
  const auto& nodes = tree.nodes;
  const double total = static_cast<double>(nodes[0].n());
  auto risk = [&](const TreeNode& n) {
    return static_cast<double>(n.n()) * gini(n.counts) / total;
  };
  const double alpha = complexity_parameter * risk(nodes[0]);
  std::vector<bool> collapsed(nodes.size(), false);

  std::vector<double> subtree_risk(nodes.size());
  std::vector<std::size_t> subtree_leaves(nodes.size());
  for (;;) {
    // Post-order accumulation over the current (partially collapsed) tree.
    std::vector<std::uint32_t> order;
    std::vector<std::uint32_t> stack{0};
    while (!stack.empty()) {
      auto i = stack.back();
      stack.pop_back();
      order.push_back(i);
      if (!nodes[i].is_leaf() && !collapsed[i]) {
        stack.push_back(nodes[i].left);
        stack.push_back(nodes[i].right);
      }
    }
    double weakest = std::numeric_limits<double>::infinity();
    std::vector<double> link(nodes.size(), std::numeric_limits<double>::infinity());
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const auto i = *it;
      if (nodes[i].is_leaf() || collapsed[i]) {
        subtree_risk[i] = risk(nodes[i]);
        subtree_leaves[i] = 1;
        continue;
      }
      const auto l = nodes[i].left, r = nodes[i].right;
      subtree_risk[i] = subtree_risk[l] + subtree_risk[r];
      subtree_leaves[i] = subtree_leaves[l] + subtree_leaves[r];
      link[i] = (risk(nodes[i]) - subtree_risk[i]) / static_cast<double>(subtree_leaves[i] - 1);
      weakest = std::min(weakest, link[i]);
    }
    if (!(weakest <= alpha)) break;
    const double tol = 1e-12 * std::max(1.0, std::abs(weakest));
    for (auto i : order)
      if (link[i] <= weakest + tol) collapsed[i] = true;
  }
  return detail::compact(tree, collapsed);
}

/// CART: every feature considered at every node, then pruned at the
/// configured complexity parameter.
inline DecisionTree grow_tree(const Dataset& data, const TreeParams& params) {
  auto tree = detail::grow(data, detail::all_rows(data.size()), params);
  if (params.complexity_parameter > 0.0) tree = prune_tree(tree, params.complexity_parameter);
  return tree;
}

}  // namespace rsv::learners
