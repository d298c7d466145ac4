#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "rsv/learners/dataset.hpp"
#include "rsv/panel.hpp"
#include "rsv/random.hpp"

namespace fixture {

namespace fs = std::filesystem;

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    rsv::Rng rng(rsv::derive_seed(static_cast<std::uint64_t>(::getpid()), tag));
    path_ = fs::temp_directory_path() / ("rsv-" + tag + "-" + std::to_string(rng.next() % 1000000007ULL));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

struct RawData {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
};

/// n rows of p features drawn from a coarse grid (multiples of 1/4 in
/// [0, levels/4)) so ties and repeated values are common.
inline RawData random_raw(rsv::Rng& rng, std::size_t n, std::size_t p, std::uint64_t levels = 8) {
  RawData d;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(p);
    for (auto& v : row) v = static_cast<double>(rng.below(levels)) / 4.0;
    d.x.push_back(row);
    d.y.push_back(static_cast<int>(rng.below(3)));
  }
  return d;
}

/// Labels depend on the first feature plus noise.
inline RawData structured_raw(rsv::Rng& rng, std::size_t n, std::size_t p) {
  RawData d;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(p);
    for (auto& v : row) v = rng.unit() * 10.0;
    int y = row[0] < 4.0 ? 0 : (row[0] < 7.0 ? 1 : 2);
    if (rng.unit() < 0.15) y = static_cast<int>(rng.below(3));
    d.x.push_back(row);
    d.y.push_back(y);
  }
  return d;
}

inline rsv::learners::Dataset to_dataset(const RawData& raw) {
  auto d = rsv::learners::Dataset::with_features(raw.x.empty() ? 0 : raw.x.front().size());
  for (std::size_t i = 0; i < raw.y.size(); ++i) d.add_row(raw.x[i], rsv::class_at(static_cast<std::size_t>(raw.y[i])));
  return d;
}

/// Random panel rows over the standard schema. Class shares roughly 60/20/20.
inline std::vector<rsv::panel::WeeklyPanelRow> random_panel(rsv::Rng& rng, std::size_t n) {
  static const std::vector<std::string> kStates = rsv::default_roster_codes();
  std::vector<rsv::panel::WeeklyPanelRow> rows;
  const auto first = rsv::EpiWeek::ending(rsv::Date{2022, 4, 2});
  for (std::size_t i = 0; i < n; ++i) {
    rsv::panel::WeeklyPanelRow r{*rsv::StateCode::parse(kStates[i % kStates.size()]),
                                 rsv::EpiWeek::ending(first.end_date().plus_days(7 * static_cast<int>(i / kStates.size())))};
    const double u = rng.unit();
    r.rate = u < 0.6 ? rng.unit() * 5.0 : (u < 0.8 ? 5.5 + rng.unit() * 14.0 : 20.0 + rng.unit() * 30.0);
    r.label = rsv::classify_rate(r.rate);
    for (std::size_t f = 0; f < rsv::kNumFeatures; ++f) r.features[f] = rng.unit() * 10.0;
    r.features[rsv::index_of(rsv::Feature::WVAL)] = r.rate / 5.0 + rng.unit();
    r.features[rsv::index_of(rsv::Feature::RsvSeason)] = rsv::panel::derive_rsv_season(r.week) ? 1.0 : 0.0;
    for (auto& a : r.aux) a = rng.unit();
    rows.push_back(r);
  }
  return rows;
}

}  // namespace fixture
