#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "rsv/learners/dataset.hpp"

namespace rsv::learners::detail {

/// Per-feature sample orderings for one tree. A "slot" is one entry of the
/// (possibly resampled) training sample; every node owns the same index
/// range [begin, end) in each feature's ordering, kept sorted by value.
class Presort {
 public:
  Presort(const Dataset& data, std::vector<std::uint32_t> rows)
      : rows_(std::move(rows)), values_(data.n_features()), order_(data.n_features()), flag_(rows_.size()),
        scratch_(rows_.size()) {
    const std::size_t m = rows_.size();
    for (std::size_t f = 0; f < values_.size(); ++f) {
      const auto col = data.column(f);
      auto& v = values_[f];
      v.resize(m);
      for (std::size_t s = 0; s < m; ++s) v[s] = col[rows_[s]];
      auto& o = order_[f];
      o.resize(m);
      std::iota(o.begin(), o.end(), std::uint32_t{0});
      std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) { return v[a] < v[b]; });
    }
  }

  std::size_t size() const { return rows_.size(); }
  std::size_t n_features() const { return values_.size(); }
  std::uint32_t row(std::uint32_t slot) const { return rows_[slot]; }
  double value(std::size_t f, std::uint32_t slot) const { return values_[f][slot]; }
  std::span<const std::uint32_t> sorted(std::size_t f, std::size_t begin, std::size_t end) const {
    return std::span<const std::uint32_t>(order_[f]).subspan(begin, end - begin);
  }
  /// Any feature's ordering lists the node's slots.
  std::span<const std::uint32_t> members(std::size_t begin, std::size_t end) const { return sorted(0, begin, end); }

  bool constant_in(std::size_t f, std::size_t begin, std::size_t end) const {
    return !(values_[f][order_[f][begin]] < values_[f][order_[f][end - 1]]);
  }

  /// Stable-partitions every ordering of [begin, end) by x[feature] < threshold
  /// and returns the boundary.
  std::size_t partition(std::size_t begin, std::size_t end, std::size_t feature, double threshold) {
    const auto& fv = values_[feature];
    std::size_t n_left = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto s = order_[0][i];
      flag_[s] = fv[s] < threshold ? 1 : 0;
      n_left += flag_[s];
    }
    for (auto& o : order_) {
      std::size_t l = begin, r = 0;
      for (std::size_t i = begin; i < end; ++i) {
        const auto s = o[i];
        if (flag_[s])
          o[l++] = s;
        else
          scratch_[r++] = s;
      }
      std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r),
                o.begin() + static_cast<std::ptrdiff_t>(l));
    }
    return begin + n_left;
  }

 private:
  std::vector<std::uint32_t> rows_;
  std::vector<std::vector<double>> values_;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<std::uint8_t> flag_;
  std::vector<std::uint32_t> scratch_;
};

inline std::vector<std::uint32_t> all_rows(std::size_t n) {
  std::vector<std::uint32_t> r(n);
  std::iota(r.begin(), r.end(), std::uint32_t{0});
  return r;
}

}  // namespace rsv::learners::detail
