#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rsv/calendar.hpp"
#include "rsv/csv.hpp"
#include "rsv/error.hpp"
#include "rsv/features.hpp"
#include "rsv/ingest.hpp"
#include "rsv/random.hpp"
#include "rsv/risk.hpp"
#include "rsv/states.hpp"

namespace rsv::panel {

/// One state-week observation of the modeling panel.
struct WeeklyPanelRow {
  StateCode state;
  EpiWeek week;
  double rate = 0.0;
  RiskClass label = RiskClass::LowRisk;
  FeatureVector features{};
  /// T2MDEW, T2MWET, TS, WS2M; NaN when the week lacked coverage.
  std::array<double, kNumAux> aux{};

  double operator[](Feature f) const { return features[index_of(f)]; }
  double& operator[](Feature f) { return features[index_of(f)]; }
};

/// True iff the week-ending date falls in November through April.
inline bool derive_rsv_season(const EpiWeek& week) {
  const unsigned m = week.end_date().month();
  return m >= 11 || m <= 4;
}

/// Response stratum kept in the panel.
struct RateFilter {
  std::string age_group = "0-4";
  std::string sex = "Overall";
  std::string race = "Overall";

  bool matches(const ingest::RawRateRecord& r) const {
    return r.age_group == age_group && r.sex == sex && r.race == race;
  }
};

struct MissingCells {
  StateCode state;
  EpiWeek week;
  std::vector<std::string> fields;
};

struct PanelBuild {
  std::vector<WeeklyPanelRow> rows;
  std::vector<MissingCells> completeness;
};

/// Inner join of the four sources on (state, week). Rows lacking any modeled
/// predictor are dropped and listed in the completeness report.
inline PanelBuild build_panel(const std::vector<ingest::RawRateRecord>& rates,
                              const std::vector<ingest::RawWastewaterRecord>& wastewater,
                              const ingest::WeeklyTable<ingest::kMeteoFields>& meteo_weekly,
                              const ingest::WeeklyTable<ingest::kAirFields>& air_weekly, const Roster& roster,
                              const RateFilter& filter = {}) {
  using ingest::Air;
  using ingest::Meteo;
  std::map<ingest::StateWeek, double> response;
  for (const auto& r : rates) {
    if (!filter.matches(r) || !roster.contains(r.state)) continue;
    auto [it, inserted] = response.emplace(ingest::StateWeek{r.state, r.week}, r.rate);
    if (!inserted)
      fail(ErrorKind::DuplicateKey,
           "two response rows for " + r.state.str() + " week ending " + r.week.end_date().iso());
  }
  const auto wval = ingest::wastewater_weekly(wastewater);

  constexpr std::array<std::pair<Feature, Meteo>, 7> meteo_map{{{Feature::PRECTOTCORR, Meteo::PRECTOTCORR},
                                                                {Feature::PS, Meteo::PS},
                                                                {Feature::QV2M, Meteo::QV2M},
                                                                {Feature::RH2M, Meteo::RH2M},
                                                                {Feature::T2M, Meteo::T2M},
                                                                {Feature::WD10M, Meteo::WD10M},
                                                                {Feature::WS10M, Meteo::WS10M}}};
  constexpr std::array<std::pair<Feature, Air>, 6> air_map{{{Feature::CO, Air::CO},
                                                            {Feature::NO2, Air::NO2},
                                                            {Feature::Ozone, Air::Ozone},
                                                            {Feature::PM10, Air::PM10},
                                                            {Feature::PM25, Air::PM25},
                                                            {Feature::SO2, Air::SO2}}};
  constexpr std::array<Meteo, kNumAux> aux_map{Meteo::T2MDEW, Meteo::T2MWET, Meteo::TS, Meteo::WS2M};

  PanelBuild out;
  for (const auto& [key, rate] : response) {
    WeeklyPanelRow row;
    row.state = key.first;
    row.week = key.second;
    row.rate = rate;
    row.label = classify_rate(rate);
    std::vector<std::string> missing;

    if (auto it = wval.find(key); it != wval.end())
      row[Feature::WVAL] = it->second;
    else
      missing.emplace_back(kFeatureNames[index_of(Feature::WVAL)]);

    const auto met = meteo_weekly.find(key);
    for (auto [feat, src] : meteo_map) {
      const auto v = met != meteo_weekly.end() ? met->second[static_cast<std::size_t>(src)] : std::nullopt;
      if (v)
        row[feat] = *v;
      else
        missing.emplace_back(kFeatureNames[index_of(feat)]);
    }
    for (std::size_t a = 0; a < kNumAux; ++a) {
      const auto v = met != meteo_weekly.end() ? met->second[static_cast<std::size_t>(aux_map[a])] : std::nullopt;
      row.aux[a] = v.value_or(std::numeric_limits<double>::quiet_NaN());
    }

    const auto air = air_weekly.find(key);
    for (auto [feat, src] : air_map) {
      const auto v = air != air_weekly.end() ? air->second[static_cast<std::size_t>(src)] : std::nullopt;
      if (v)
        row[feat] = ingest::impute_nonnegative(*v);
      else
        missing.emplace_back(kFeatureNames[index_of(feat)]);
    }

    row[Feature::RsvSeason] = derive_rsv_season(row.week) ? 1.0 : 0.0;

    if (missing.empty())
      out.rows.push_back(row);
    else
      out.completeness.push_back({key.first, key.second, std::move(missing)});
  }
  if (out.rows.empty()) fail(ErrorKind::EmptyPanel, "join of the four sources produced no complete rows");
  return out;
}

/// Keeps rows whose state is not listed.
inline std::vector<WeeklyPanelRow> exclude_states(const std::vector<WeeklyPanelRow>& rows,
                                                  const std::vector<StateCode>& excluded) {
  std::vector<WeeklyPanelRow> out;
  for (const auto& r : rows)
    if (std::find(excluded.begin(), excluded.end(), r.state) == excluded.end()) out.push_back(r);
  if (out.empty()) fail(ErrorKind::EmptyPanel, "no rows left after excluding states");
  return out;
}

// ---------------------------------------------------------------------------
// Stratified split

struct IndexSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per class, round(fraction * n_class) members (clamped so both sides get at
/// least one when the class has two or more) go to train, drawn without
/// replacement by a seeded shuffle. Both index lists come back ascending.
inline IndexSplit stratified_split_indices(std::span<const RiskClass> labels, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    fail(ErrorKind::InvalidArgument, "train fraction must lie in (0, 1)");
  std::array<std::vector<std::size_t>, kNumClasses> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[index_of(labels[i])].push_back(i);
  IndexSplit out;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    auto& m = members[k];
    if (m.empty()) continue;
    if (m.size() < 2)
      fail(ErrorKind::ClassTooSmall, std::string(to_string(class_at(k))) + " has a single row; cannot stratify");
    Rng rng(derive_seed(seed, k));
    rng.shuffle(std::span<std::size_t>(m));
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(m.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, m.size() - 1);
    out.train.insert(out.train.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.insert(out.test.end(), m.begin() + static_cast<std::ptrdiff_t>(n_train), m.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

struct SplitPair {
  std::vector<WeeklyPanelRow> train;
  std::vector<WeeklyPanelRow> test;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
};

inline std::vector<RiskClass> labels_of(const std::vector<WeeklyPanelRow>& rows) {
  std::vector<RiskClass> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.label);
  return out;
}

inline SplitPair stratified_split(const std::vector<WeeklyPanelRow>& panel, double train_fraction, std::uint64_t seed) {
  const auto labels = labels_of(panel);
  const auto idx = stratified_split_indices(labels, train_fraction, seed);
  SplitPair out;
  out.seed = seed;
  out.train_fraction = train_fraction;
  for (auto i : idx.train) out.train.push_back(panel[i]);
  for (auto i : idx.test) out.test.push_back(panel[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Summary statistics

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample SD (n - 1); 0 for a single value
};

inline MeanSd mean_sd(std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::EmptyInput, "mean of an empty column");
  double sum = 0.0;
  for (double v : values) sum += v;
  MeanSd out;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

struct PanelSummary {
  std::size_t n = 0;
  std::array<double, kNumClasses> class_percent{};
  double season_yes_percent = 0.0;
  /// Every non-categorical feature, in schema order.
  std::vector<std::pair<std::string, MeanSd>> numeric;
};

inline PanelSummary summarize_panel(const std::vector<WeeklyPanelRow>& rows) {
  if (rows.empty()) fail(ErrorKind::EmptyInput, "cannot summarize an empty panel");
  PanelSummary s;
  s.n = rows.size();
  const double n = static_cast<double>(rows.size());
  std::size_t season = 0;
  for (const auto& r : rows) {
    s.class_percent[index_of(r.label)] += 1.0;
    if (r[Feature::RsvSeason] > 0.5) ++season;
  }
  for (auto& p : s.class_percent) p = 100.0 * p / n;
  s.season_yes_percent = 100.0 * static_cast<double>(season) / n;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    if (static_cast<Feature>(f) == Feature::RsvSeason) continue;
    std::vector<double> col;
    col.reserve(rows.size());
    for (const auto& r : rows) col.push_back(r.features[f]);
    s.numeric.emplace_back(std::string(kFeatureNames[f]), mean_sd(col));
  }
  return s;
}

inline void write_summary(std::ostream& out, const PanelSummary& train, const PanelSummary& test) {
  csv::write_row(out, {"variable", "statistic", "train", "test"});
  for (auto c : kAllClasses)
    csv::write_row(out, {"Rate", std::string(to_string(c)) + "_percent",
                         csv::format_double(train.class_percent[index_of(c)]),
                         csv::format_double(test.class_percent[index_of(c)])});
  csv::write_row(out, {"RSV_Season", "Yes_percent", csv::format_double(train.season_yes_percent),
                       csv::format_double(test.season_yes_percent)});
  csv::write_row(out, {"RSV_Season", "No_percent", csv::format_double(100.0 - train.season_yes_percent),
                       csv::format_double(100.0 - test.season_yes_percent)});
  for (std::size_t i = 0; i < train.numeric.size(); ++i) {
    const auto& [name, a] = train.numeric[i];
    const auto& b = test.numeric[i].second;
    csv::write_row(out, {name, "mean", csv::format_double(a.mean), csv::format_double(b.mean)});
    csv::write_row(out, {name, "sd", csv::format_double(a.sd), csv::format_double(b.sd)});
  }
}

// ---------------------------------------------------------------------------
// Panel CSV

inline std::vector<std::string> panel_header() {
  std::vector<std::string> h{"state", "week_ending_date", "mmwr_year", "mmwr_week", "rate", "label"};
  for (auto n : kFeatureNames) h.emplace_back(n);
  for (auto n : kAuxNames) h.emplace_back(n);
  return h;
}

inline void write_panel(std::ostream& out, const std::vector<WeeklyPanelRow>& rows) {
  csv::write_row(out, panel_header());
  for (const auto& r : rows) {
    std::vector<std::string> f{r.state.str(), r.week.end_date().iso(), std::to_string(r.week.year()),
                               std::to_string(r.week.week()), csv::format_double(r.rate),
                               std::string(to_string(r.label))};
    for (double v : r.features) f.push_back(csv::format_double(v));
    for (double v : r.aux) f.push_back(csv::format_double(v));
    csv::write_row(out, f);
  }
}

/// Reads a panel written by write_panel. Any invalid row is a MalformedRow error.
inline std::vector<WeeklyPanelRow> read_panel(std::istream& in, std::string_view source = "panel") {
  csv::Reader reader(in);
  csv::Record rec;
  if (!reader.next(rec)) fail(ErrorKind::MissingColumn, std::string(source) + ": empty panel file");
  const csv::Header header(rec);
  const auto names = panel_header();
  std::vector<std::string_view> views(names.begin(), names.end());
  const auto cols = header.require(views, source);
  std::vector<WeeklyPanelRow> rows;
  auto bad = [&](const std::string& why) {
    fail(ErrorKind::MalformedRow, std::string(source) + " line " + std::to_string(rec.line) + ": " + why);
  };
  while (reader.next(rec)) {
    if (csv::blank(rec)) continue;
    auto cell = [&](std::size_t c) -> const std::string& { return ingest::detail::cell(rec, cols[c]); };
    WeeklyPanelRow r;
    auto st = StateCode::parse(cell(0));
    if (!st) bad("unknown state");
    r.state = *st;
    auto d = Date::parse(cell(1));
    if (!d || d->weekday() != 6) bad("bad week_ending_date");
    r.week = EpiWeek::ending(*d);
    auto rate = csv::parse_double(cell(4));
    if (!rate || *rate < 0) bad("bad rate");
    r.rate = *rate;
    auto label = parse_risk_class(csv::trim(cell(5)));
    if (!label || *label != classify_rate(r.rate)) bad("label does not match rate");
    r.label = *label;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      auto v = csv::parse_double(cell(6 + f));
      if (!v || !std::isfinite(*v)) bad(std::string("bad ") + std::string(kFeatureNames[f]));
      r.features[f] = *v;
    }
    for (std::size_t a = 0; a < kNumAux; ++a) {
      const auto& text = cell(6 + kNumFeatures + a);
      auto v = csv::parse_double(text);
      r.aux[a] = v ? *v : std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(r);
  }
  return rows;
}

inline void write_completeness(std::ostream& out, const std::vector<MissingCells>& report) {
  csv::write_row(out, {"state", "week_ending_date", "missing_fields"});
  for (const auto& m : report) {
    std::string joined;
    for (const auto& f : m.fields) joined += (joined.empty() ? "" : ";") + f;
    csv::write_row(out, {m.state.str(), m.week.end_date().iso(), joined});
  }
}

}  // namespace rsv::panel
