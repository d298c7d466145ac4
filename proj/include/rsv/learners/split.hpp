#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "rsv/learners/dataset.hpp"
#include "rsv/risk.hpp"

namespace rsv::learners {

/// A node partition: rows with x[feature] < threshold go left.
struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  /// Parent Gini minus the size-weighted child Gini.
  double impurity_decrease = 0.0;
  std::size_t n_left = 0;
  std::size_t n_right = 0;
};

/// Midpoint of two consecutive distinct values, nudged to `hi` when rounding
/// would collapse it onto `lo`.
inline double split_midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return (mid > lo && mid <= hi) ? mid : hi;
}

namespace detail {

using Wide = __int128;

/// sum(c^2)/n kept as an exact fraction. For a partition this is
/// A/nl + B/nr = (A*nr + B*nl)/(nl*nr); larger means purer children.
struct PurityScore {
  Wide num = 0;
  Wide den = 1;

  static PurityScore of(const ClassCounts& c, std::size_t n) {
    Wide s = 0;
    for (auto v : c) s += static_cast<Wide>(v) * static_cast<Wide>(v);
    return {s, static_cast<Wide>(n)};
  }

  static PurityScore of_split(const ClassCounts& left, std::size_t nl, const ClassCounts& right, std::size_t nr) {
    Wide a = 0, b = 0;
    for (auto v : left) a += static_cast<Wide>(v) * static_cast<Wide>(v);
    for (auto v : right) b += static_cast<Wide>(v) * static_cast<Wide>(v);
    return {a * static_cast<Wide>(nr) + b * static_cast<Wide>(nl), static_cast<Wide>(nl) * static_cast<Wide>(nr)};
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend int compare(const PurityScore& x, const PurityScore& y) {
    const Wide l = x.num * y.den, r = y.num * x.den;
    return l < r ? -1 : (l > r ? 1 : 0);
  }
};

struct Candidate {
  Split split;
  PurityScore score;
};

/// Higher score wins; ties go to the lower feature index, then lower threshold.
inline bool better(const Candidate& a, const Candidate& b) {
  const int c = compare(a.score, b.score);
  if (c != 0) return c > 0;
  if (a.split.feature != b.split.feature) return a.split.feature < b.split.feature;
  return a.split.threshold < b.split.threshold;
}

/// Sweeps one feature whose node members are given in ascending value order.
/// `value(i)` and `label(i)` read the i-th member of `sorted`.
template <typename ValueAt, typename LabelAt>
std::optional<Candidate> scan_feature(std::size_t feature, std::size_t n, ValueAt&& value, LabelAt&& label,
                                      const ClassCounts& total, const PurityScore& parent,
                                      std::size_t min_samples_leaf) {
  std::optional<Candidate> best;
  ClassCounts left{};
  const std::size_t leaf = std::max<std::size_t>(1, min_samples_leaf);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    ++left[index_of(label(i))];
    const std::size_t nl = i + 1, nr = n - nl;
    const double lo = value(i), hi = value(i + 1);
    if (!(lo < hi)) continue;
    if (nl < leaf || nr < leaf) continue;
    ClassCounts right{};
    for (std::size_t k = 0; k < kNumClasses; ++k) right[k] = total[k] - left[k];
    Candidate c{{feature, split_midpoint(lo, hi), 0.0, nl, nr}, PurityScore::of_split(left, nl, right, nr)};
    if (compare(c.score, parent) <= 0) continue;
    if (!best || compare(c.score, best->score) > 0) best = c;
  }
  if (best) {
    const auto& s = best->score;
    const Wide gain_num = s.num * parent.den - parent.num * s.den;
    best->split.impurity_decrease =
        static_cast<double>(gain_num) / static_cast<double>(s.den * parent.den) / static_cast<double>(n);
  }
  return best;
}

}  // namespace detail

/// Exhaustive best Gini split of `samples` (row indices, repeats allowed)
/// over `candidate_features`. Thresholds are midpoints of consecutive
/// distinct values. nullopt when no split has positive impurity decrease or
/// the leaf-size constraint cannot be met.
inline std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> samples,
                                       std::span<const std::size_t> candidate_features,
                                       std::size_t min_samples_leaf = 1) {
  const std::size_t n = samples.size();
  if (n < 2 * std::max<std::size_t>(1, min_samples_leaf) || candidate_features.empty()) return std::nullopt;
  ClassCounts total{};
  for (auto r : samples) ++total[index_of(data.label(r))];
  const auto parent = detail::PurityScore::of(total, n);
  std::optional<detail::Candidate> best;
  std::vector<std::size_t> order(n);
  for (auto f : candidate_features) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto col = data.column(f);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return col[samples[a]] < col[samples[b]]; });
    auto c = detail::scan_feature(
        f, n, [&](std::size_t i) { return col[samples[order[i]]]; },
        [&](std::size_t i) { return data.label(samples[order[i]]); }, total, parent, min_samples_leaf);
    if (c && (!best || detail::better(*c, *best))) best = c;
  }
  if (!best) return std::nullopt;
  return best->split;
}

}  // namespace rsv::learners
