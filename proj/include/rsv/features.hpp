#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rsv/error.hpp"

namespace rsv {

/// The fifteen modeled predictors, in persisted order.
enum class Feature : std::size_t {
  WVAL,
  PRECTOTCORR,
  PS,
  QV2M,
  RH2M,
  T2M,
  WD10M,
  WS10M,
  CO,
  NO2,
  Ozone,
  PM10,
  PM25,
  SO2,
  RsvSeason,
};

inline constexpr std::size_t kNumFeatures = 15;

inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames{
    "WVAL", "PRECTOTCORR", "PS", "QV2M", "RH2M", "T2M", "WD10M", "WS10M",
    "CO",   "NO2",         "Ozone", "PM10", "PM2.5", "SO2", "RSV_Season"};

inline constexpr std::array<std::string_view, kNumFeatures> kFeatureUnits{
    "", "mm/day", "kPa", "g/kg", "%", "C", "degrees", "m/s", "ppm", "ppm", "ppm", "ug/m3", "ug/m3", "ppb", "0/1"};

constexpr std::size_t index_of(Feature f) { return static_cast<std::size_t>(f); }

inline std::optional<std::size_t> feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kNumFeatures; ++i)
    if (kFeatureNames[i] == name) return i;
  return std::nullopt;
}

using FeatureVector = std::array<double, kNumFeatures>;

/// Ordered predictor names persisted with every model.
struct FeatureSchema {
  std::vector<std::string> names;
  std::vector<std::string> units;
  std::vector<bool> categorical;

  static FeatureSchema standard() {
    FeatureSchema s;
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      s.names.emplace_back(kFeatureNames[i]);
      s.units.emplace_back(kFeatureUnits[i]);
      s.categorical.push_back(static_cast<Feature>(i) == Feature::RsvSeason);
    }
    return s;
  }

  std::size_t size() const { return names.size(); }

  /// Throws SchemaMismatch unless this is the standard 15-feature layout.
  void validate() const {
    if (names.size() != kNumFeatures || units.size() != kNumFeatures || categorical.size() != kNumFeatures)
      fail(ErrorKind::SchemaMismatch, "feature schema has " + std::to_string(names.size()) + " features, expected " +
                                          std::to_string(kNumFeatures));
    for (std::size_t i = 0; i < kNumFeatures; ++i)
      if (names[i] != kFeatureNames[i])
        fail(ErrorKind::SchemaMismatch, "feature " + std::to_string(i) + " is '" + names[i] + "', expected '" +
                                            std::string(kFeatureNames[i]) + "'");
  }

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

/// Ingested meteorology excluded from modeling for collinearity, kept for exploration.
enum class AuxVariable : std::size_t { T2MDEW, T2MWET, TS, WS2M };
inline constexpr std::size_t kNumAux = 4;
inline constexpr std::array<std::string_view, kNumAux> kAuxNames{"T2MDEW", "T2MWET", "TS", "WS2M"};

}  // namespace rsv
