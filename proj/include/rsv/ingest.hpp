#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <tuple>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rsv/calendar.hpp"
#include "rsv/csv.hpp"
#include "rsv/error.hpp"
#include "rsv/states.hpp"

namespace rsv::ingest {

enum class SourceKind { RsvNet, Nwss, Meteo, AirQuality };

inline std::string_view to_string(SourceKind k) {
  switch (k) {
    case SourceKind::RsvNet: return "rsvnet";
    case SourceKind::Nwss: return "nwss";
    case SourceKind::Meteo: return "meteo";
    case SourceKind::AirQuality: return "airquality";
  }
  return "?";
}

inline std::optional<SourceKind> parse_source_kind(std::string_view s) {
  for (auto k : {SourceKind::RsvNet, SourceKind::Nwss, SourceKind::Meteo, SourceKind::AirQuality})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Raw record types

struct RawRateRecord {
  StateCode state;
  EpiWeek week;
  std::string age_group;
  std::string sex;
  std::string race;
  double rate = 0.0;  // hospitalizations per 100,000 persons in the age group
};

struct RawWastewaterRecord {
  StateCode state;
  EpiWeek week;
  double wval = 0.0;
  std::optional<long long> coverage_population;
};

enum class Meteo : std::size_t { PRECTOTCORR, PS, QV2M, RH2M, T2M, T2MDEW, T2MWET, TS, WD10M, WS10M, WS2M };
inline constexpr std::size_t kMeteoFields = 11;
inline constexpr std::array<std::string_view, kMeteoFields> kMeteoNames{
    "PRECTOTCORR", "PS", "QV2M", "RH2M", "T2M", "T2MDEW", "T2MWET", "TS", "WD10M", "WS10M", "WS2M"};

enum class Air : std::size_t { CO, NO2, Ozone, PM10, PM25, SO2 };
inline constexpr std::size_t kAirFields = 6;
inline constexpr std::array<std::string_view, kAirFields> kAirNames{"CO", "NO2", "Ozone", "PM10", "PM25", "SO2"};

/// Daily meteorology for one monitoring point. A missing value (blank cell or
/// the -999 fill value) is held as nullopt.
struct RawMeteoDaily {
  StateCode state;
  Date date;
  std::array<std::optional<double>, kMeteoFields> values{};

  std::optional<double> operator[](Meteo f) const { return values[static_cast<std::size_t>(f)]; }
};

/// Daily air quality. Units: CO, NO2, Ozone in ppm; PM10, PM2.5 in ug/m3; SO2 in ppb.
struct RawAirQualityDaily {
  StateCode state;
  Date date;
  std::array<std::optional<double>, kAirFields> values{};

  std::optional<double> operator[](Air f) const { return values[static_cast<std::size_t>(f)]; }
};

struct Reject {
  std::string file;
  std::size_t line = 0;
  std::string reason;
};

template <typename Record>
struct ParseResult {
  std::vector<Record> records;
  std::vector<Reject> rejects;
  std::size_t rows = 0;  // non-blank data rows seen

  double reject_rate() const { return rows == 0 ? 0.0 : static_cast<double>(rejects.size()) / static_cast<double>(rows); }
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline constexpr double kNasaFill = -999.0;

struct RowError {
  std::string reason;
};

inline const std::string& cell(const csv::Record& r, std::size_t idx) {
  static const std::string empty;
  return idx < r.fields.size() ? r.fields[idx] : empty;
}

inline double require_number(const csv::Record& r, std::size_t idx, std::string_view name) {
  auto v = csv::parse_double(cell(r, idx));
  if (!v || !std::isfinite(*v)) throw RowError{"unparseable " + std::string(name) + " '" + cell(r, idx) + "'"};
  return *v;
}

inline std::optional<double> optional_number(const csv::Record& r, std::size_t idx, std::string_view name) {
  const auto& text = cell(r, idx);
  if (csv::trim(text).empty()) return std::nullopt;
  auto v = csv::parse_double(text);
  if (!v || !std::isfinite(*v)) throw RowError{"unparseable " + std::string(name) + " '" + text + "'"};
  return v;
}

inline StateCode require_state(const csv::Record& r, std::size_t idx, const Roster& roster) {
  auto s = roster.resolve(cell(r, idx));
  if (!s) throw RowError{"UnknownState '" + cell(r, idx) + "'"};
  return *s;
}

inline EpiWeek require_week(const csv::Record& r, std::size_t idx) {
  auto d = Date::parse(cell(r, idx));
  if (!d) throw RowError{"unparseable week_ending_date '" + cell(r, idx) + "'"};
  if (d->weekday() != 6) throw RowError{"week_ending_date " + d->iso() + " is not a Saturday"};
  return EpiWeek::ending(*d);
}

inline Date require_date(const csv::Record& r, std::size_t idx) {
  auto d = Date::parse(cell(r, idx));
  if (!d) throw RowError{"unparseable date '" + cell(r, idx) + "'"};
  return *d;
}

template <typename Record, typename RowFn>
ParseResult<Record> parse_rows(std::istream& in, std::string_view source, const std::vector<std::string_view>& required,
                               RowFn&& row_fn) {
  csv::Reader reader(in);
  csv::Record rec;
  if (!reader.next(rec)) fail(ErrorKind::MissingColumn, std::string(source) + ": empty stream, no header row");
  const csv::Header header(rec);
  const auto cols = header.require(required, source);
  ParseResult<Record> result;
  while (reader.next(rec)) {
    if (csv::blank(rec)) continue;
    ++result.rows;
    try {
      result.records.push_back(row_fn(rec, cols, header));
    } catch (const RowError& e) {
      result.rejects.push_back({std::string(source), rec.line, e.reason});
    }
  }
  return result;
}

}  // namespace detail

inline ParseResult<RawRateRecord> parse_rsvnet(std::istream& in, const Roster& roster, std::string_view source = "rsvnet") {
  return detail::parse_rows<RawRateRecord>(
      in, source, {"state", "week_ending_date", "age_category", "sex", "race", "rate"},
      [&](const csv::Record& r, const std::vector<std::size_t>& c, const csv::Header&) {
        RawRateRecord out;
        out.state = detail::require_state(r, c[0], roster);
        out.week = detail::require_week(r, c[1]);
        out.age_group = std::string(csv::trim(detail::cell(r, c[2])));
        out.sex = std::string(csv::trim(detail::cell(r, c[3])));
        out.race = std::string(csv::trim(detail::cell(r, c[4])));
        out.rate = detail::require_number(r, c[5], "rate");
        if (out.rate < 0) throw detail::RowError{"negative rate"};
        return out;
      });
}

inline ParseResult<RawWastewaterRecord> parse_nwss(std::istream& in, const Roster& roster, std::string_view source = "nwss") {
  return detail::parse_rows<RawWastewaterRecord>(
      in, source, {"state", "week_ending_date", "wval"},
      [&](const csv::Record& r, const std::vector<std::size_t>& c, const csv::Header& h) {
        RawWastewaterRecord out;
        out.state = detail::require_state(r, c[0], roster);
        out.week = detail::require_week(r, c[1]);
        out.wval = detail::require_number(r, c[2], "wval");
        if (out.wval < 0) throw detail::RowError{"negative wval"};
        if (auto pc = h.find("population_served")) {
          const auto& text = detail::cell(r, *pc);
          if (!csv::trim(text).empty()) {
            auto p = csv::parse_int(text);
            if (!p || *p <= 0) throw detail::RowError{"invalid population_served '" + text + "'"};
            out.coverage_population = *p;
          }
        }
        return out;
      });
}

inline ParseResult<RawMeteoDaily> parse_meteo(std::istream& in, const Roster& roster, std::string_view source = "meteo") {
  std::vector<std::string_view> required{"state", "date"};
  required.insert(required.end(), kMeteoNames.begin(), kMeteoNames.end());
  return detail::parse_rows<RawMeteoDaily>(
      in, source, required, [&](const csv::Record& r, const std::vector<std::size_t>& c, const csv::Header&) {
        RawMeteoDaily out;
        out.state = detail::require_state(r, c[0], roster);
        out.date = detail::require_date(r, c[1]);
        for (std::size_t f = 0; f < kMeteoFields; ++f) {
          auto v = detail::optional_number(r, c[2 + f], kMeteoNames[f]);
          if (v && *v == detail::kNasaFill) v.reset();
          out.values[f] = v;
        }
        auto out_of = [&](Meteo f, double lo, double hi) {
          auto v = out[f];
          if (v && (*v < lo || *v > hi))
            throw detail::RowError{std::string(kMeteoNames[static_cast<std::size_t>(f)]) + " out of range"};
        };
        constexpr double inf = std::numeric_limits<double>::infinity();
        out_of(Meteo::RH2M, 0.0, 100.0);
        out_of(Meteo::PRECTOTCORR, 0.0, inf);
        out_of(Meteo::WS10M, 0.0, inf);
        out_of(Meteo::WS2M, 0.0, inf);
        out_of(Meteo::WD10M, 0.0, 360.0);
        return out;
      });
}

inline ParseResult<RawAirQualityDaily> parse_airquality(std::istream& in, const Roster& roster,
                                                       std::string_view source = "airquality") {
  std::vector<std::string_view> required{"state", "date"};
  required.insert(required.end(), kAirNames.begin(), kAirNames.end());
  return detail::parse_rows<RawAirQualityDaily>(
      in, source, required, [&](const csv::Record& r, const std::vector<std::size_t>& c, const csv::Header&) {
        RawAirQualityDaily out;
        out.state = detail::require_state(r, c[0], roster);
        out.date = detail::require_date(r, c[1]);
        for (std::size_t f = 0; f < kAirFields; ++f) out.values[f] = detail::optional_number(r, c[2 + f], kAirNames[f]);
        return out;
      });
}

/// Throws RejectCeiling when more than `ceiling` of the rows were rejected.
template <typename Record>
void check_reject_ceiling(const ParseResult<Record>& result, double ceiling, std::string_view source) {
  if (result.reject_rate() > ceiling)
    fail(ErrorKind::RejectCeiling, std::string(source) + ": " + std::to_string(result.rejects.size()) + " of " +
                                       std::to_string(result.rows) + " rows rejected, above ceiling " +
                                       std::to_string(ceiling));
}

// ---------------------------------------------------------------------------
// Normalized output

inline void write_rsvnet(std::ostream& out, const std::vector<RawRateRecord>& rows) {
  csv::write_row(out, {"state", "week_ending_date", "age_category", "sex", "race", "rate"});
  for (const auto& r : rows)
    csv::write_row(out, {r.state.str(), r.week.end_date().iso(), r.age_group, r.sex, r.race, csv::format_double(r.rate)});
}

inline void write_nwss(std::ostream& out, const std::vector<RawWastewaterRecord>& rows) {
  csv::write_row(out, {"state", "week_ending_date", "wval", "population_served"});
  for (const auto& r : rows)
    csv::write_row(out, {r.state.str(), r.week.end_date().iso(), csv::format_double(r.wval),
                         r.coverage_population ? std::to_string(*r.coverage_population) : std::string()});
}

template <typename Record, std::size_t N>
void write_daily(std::ostream& out, const std::vector<Record>& rows, const std::array<std::string_view, N>& names) {
  std::vector<std::string> header{"state", "date"};
  header.insert(header.end(), names.begin(), names.end());
  csv::write_row(out, header);
  for (const auto& r : rows) {
    std::vector<std::string> f{r.state.str(), r.date.iso()};
    for (const auto& v : r.values) f.push_back(v ? csv::format_double(*v) : std::string());
    csv::write_row(out, f);
  }
}

inline void write_meteo(std::ostream& out, const std::vector<RawMeteoDaily>& rows) { write_daily(out, rows, kMeteoNames); }
inline void write_airquality(std::ostream& out, const std::vector<RawAirQualityDaily>& rows) {
  write_daily(out, rows, kAirNames);
}

inline void write_rejects(std::ostream& out, const std::vector<Reject>& rejects) {
  csv::write_row(out, {"file", "line", "reason"});
  for (const auto& r : rejects) csv::write_row(out, {r.file, std::to_string(r.line), r.reason});
}

// ---------------------------------------------------------------------------
// Cleaning and weekly aggregation

/// Negative concentrations are instrument error; they become zero.
inline double impute_nonnegative(double x) {
  if (!std::isfinite(x)) fail(ErrorKind::NonFinite, "cannot impute a non-finite concentration");
  return x <= 0.0 ? 0.0 : x;
}

inline RawAirQualityDaily impute_airquality(RawAirQualityDaily r) {
  for (auto& v : r.values)
    if (v) v = impute_nonnegative(*v);
  return r;
}

inline constexpr std::size_t kDefaultMinDays = 4;

namespace detail {
// Sorting before summing makes the mean independent of input order.
inline double order_free_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}
}  // namespace detail

/// Mean of the non-missing values dated inside `week`, or nullopt when fewer
/// than `min_days` are present.
inline std::optional<double> try_weekly_mean(const std::vector<std::pair<Date, std::optional<double>>>& daily,
                                             const EpiWeek& week, std::size_t min_days = kDefaultMinDays) {
  std::vector<double> in_week;
  for (const auto& [date, value] : daily)
    if (value && week.contains(date)) in_week.push_back(*value);
  if (in_week.empty() || in_week.size() < min_days) return std::nullopt;
  return detail::order_free_mean(std::move(in_week));
}

inline double weekly_mean(const std::vector<std::pair<Date, std::optional<double>>>& daily, const EpiWeek& week,
                          std::size_t min_days = kDefaultMinDays) {
  auto m = try_weekly_mean(daily, week, min_days);
  if (!m)
    fail(ErrorKind::InsufficientCoverage, "fewer than " + std::to_string(min_days) + " days in week ending " +
                                              week.end_date().iso());
  return *m;
}

/// State-level WVAL for one week: population-weighted when every record
/// carries a served population, unweighted otherwise.
inline double aggregate_wastewater(const std::vector<RawWastewaterRecord>& records, const StateCode& state,
                                   const EpiWeek& week) {
  std::vector<const RawWastewaterRecord*> hits;
  for (const auto& r : records)
    if (r.state == state && r.week == week) hits.push_back(&r);
  if (hits.empty()) fail(ErrorKind::NoData, "no wastewater data for " + state.str() + " " + week.end_date().iso());
  std::sort(hits.begin(), hits.end(), [](auto* a, auto* b) {
    return std::pair(a->wval, a->coverage_population.value_or(0)) < std::pair(b->wval, b->coverage_population.value_or(0));
  });
  const bool weighted = std::all_of(hits.begin(), hits.end(), [](auto* r) { return r->coverage_population.has_value(); });
  double num = 0.0, den = 0.0;
  for (auto* r : hits) {
    const double w = weighted ? static_cast<double>(*r->coverage_population) : 1.0;
    num += w * r->wval;
    den += w;
  }
  return std::max(0.0, num / den);
}

using StateWeek = std::pair<StateCode, EpiWeek>;

template <std::size_t N>
using WeeklyTable = std::map<StateWeek, std::array<std::optional<double>, N>>;

/// Wastewater per (state, week).
inline std::map<StateWeek, double> wastewater_weekly(const std::vector<RawWastewaterRecord>& records) {
  std::map<StateWeek, std::vector<RawWastewaterRecord>> groups;
  for (const auto& r : records) groups[{r.state, r.week}].push_back(r);
  std::map<StateWeek, double> out;
  for (const auto& [key, recs] : groups) out[key] = aggregate_wastewater(recs, key.first, key.second);
  return out;
}

/// Daily records, possibly from several monitoring points per state, to
/// weekly means: points are first averaged per (state, day), then days are
/// binned into MMWR weeks.
template <typename Record>
auto aggregate_daily(const std::vector<Record>& records, std::size_t min_days = kDefaultMinDays) {
  constexpr std::size_t N = std::tuple_size_v<decltype(Record::values)>;
  std::map<std::pair<StateCode, Date>, std::array<std::vector<double>, N>> per_day;
  for (const auto& r : records) {
    auto& slot = per_day[{r.state, r.date}];
    for (std::size_t f = 0; f < N; ++f)
      if (r.values[f]) slot[f].push_back(*r.values[f]);
  }
  std::map<StateWeek, std::array<std::vector<double>, N>> per_week;
  for (auto& [key, fields] : per_day) {
    auto& slot = per_week[{key.first, EpiWeek::containing(key.second)}];
    for (std::size_t f = 0; f < N; ++f)
      if (!fields[f].empty()) slot[f].push_back(detail::order_free_mean(std::move(fields[f])));
  }
  WeeklyTable<N> out;
  for (auto& [key, fields] : per_week) {
    auto& row = out[key];
    for (std::size_t f = 0; f < N; ++f)
      if (!fields[f].empty() && fields[f].size() >= min_days) row[f] = detail::order_free_mean(std::move(fields[f]));
  }
  return out;
}

inline WeeklyTable<kMeteoFields> meteo_weekly(const std::vector<RawMeteoDaily>& records,
                                              std::size_t min_days = kDefaultMinDays) {
  return aggregate_daily(records, min_days);
}

/// Imputes negative concentrations before averaging.
inline WeeklyTable<kAirFields> airquality_weekly(const std::vector<RawAirQualityDaily>& records,
                                                 std::size_t min_days = kDefaultMinDays) {
  std::vector<RawAirQualityDaily> clean;
  clean.reserve(records.size());
  for (const auto& r : records) clean.push_back(impute_airquality(r));
  return aggregate_daily(clean, min_days);
}

}  // namespace rsv::ingest
