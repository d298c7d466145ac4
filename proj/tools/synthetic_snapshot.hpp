#pragma once

// Synthetic source snapshots in the four documented CSV layouts. They stand in
// for the CDC/NASA/EPA downloads in tests, demos and timing runs; the values
// are generated, not observed.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "rsv/calendar.hpp"
#include "rsv/csv.hpp"
#include "rsv/hash.hpp"
#include "rsv/random.hpp"
#include "rsv/states.hpp"

namespace rsv::synth {

namespace fs = std::filesystem;

struct SnapshotOptions {
  std::uint64_t seed = 7;
  Date first_week_end{2022, 4, 2};
  int weeks = 115;
  std::vector<std::string> roster = default_roster_codes();
  /// States reported by two monitoring points in the daily sources.
  std::vector<std::string> two_point_states{"CA", "NY", "CO"};
  /// Probability that a daily record is absent.
  double missing_day = 0.04;
  /// Rows with bad values appended to each source, to exercise the rejects report.
  int malformed_rows = 3;
  /// Rates in high-altitude states are scaled by this factor.
  double altitude_rate_factor = 1.5;
};

struct SnapshotPaths {
  fs::path rsvnet, nwss, meteo, airquality;
};

namespace detail {

class Noise {
 public:
  explicit Noise(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.unit(); }

  double normal(double mean = 0.0, double sd = 1.0) {
    double u1 = rng_.unit();
    while (u1 <= 0.0) u1 = rng_.unit();
    const double u2 = rng_.unit();
    return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double lognormal(double sd) { return std::exp(normal(0.0, sd)); }
  bool chance(double p) { return rng_.unit() < p; }
  std::uint64_t below(std::uint64_t n) { return rng_.below(n); }

 private:
  Rng rng_;
};

inline std::string num(double v, int decimals = 3) {
  const double scale = std::pow(10.0, decimals);
  double r = std::round(v * scale) / scale;
  if (r == 0.0) r = 0.0;
  return csv::format_double(r);
}

inline bool high_altitude(const std::string& s) { return s == "CO" || s == "NM" || s == "UT"; }

/// Seasonal epidemic intensity for a week ending on `d`.
inline double intensity(Date d) {
  struct Peak {
    Date at;
    double height;
  };
  static const Peak peaks[] = {{Date{2022, 11, 19}, 52.0}, {Date{2023, 12, 9}, 40.0}, {Date{2022, 1, 8}, 22.0},
                               {Date{2024, 12, 7}, 40.0}};
  double v = 0.0;
  for (const auto& p : peaks) {
    const double weeks = static_cast<double>(d.serial() - p.at.serial()) / 7.0;
    v += p.height * std::exp(-0.5 * (weeks / 5.0) * (weeks / 5.0));
  }
  return v;
}

struct StateClimate {
  double temp_mean, temp_amp, pressure, scale;
};

inline StateClimate climate(const std::string& s, Noise& n) {
  double lat_cool = 0.0;
  if (s == "MN" || s == "MI" || s == "NY" || s == "CT") lat_cool = 6.0;
  if (s == "CO" || s == "UT") lat_cool = 4.0;
  if (s == "GA" || s == "TN" || s == "NC") lat_cool = -4.0;
  if (s == "CA" || s == "NM") lat_cool = -2.0;
  const double pressure = high_altitude(s) ? n.uniform(79.0, 84.0) : n.uniform(97.5, 101.0);
  return {13.0 - lat_cool, 11.0 + 0.4 * lat_cool, pressure, n.uniform(0.75, 1.25)};
}

inline double seasonal_temp(const StateClimate& c, Date d) {
  const double doy = static_cast<double>(d.serial() - Date{d.year(), 1, 1}.serial());
  return c.temp_mean - c.temp_amp * std::cos(2.0 * std::numbers::pi * (doy - 15.0) / 365.25);
}

}  // namespace detail

/// Writes rsvnet.csv, nwss.csv, meteo.csv and airquality.csv into `dir`.
inline SnapshotPaths write_snapshot(const fs::path& dir, const SnapshotOptions& opt = {}) {
  fs::create_directories(dir);
  SnapshotPaths paths{dir / "rsvnet.csv", dir / "nwss.csv", dir / "meteo.csv", dir / "airquality.csv"};
  detail::Noise n(opt.seed);

  std::vector<detail::StateClimate> climates;
  for (const auto& s : opt.roster) climates.push_back(detail::climate(s, n));

  std::ofstream rates(paths.rsvnet), ww(paths.nwss), met(paths.meteo), air(paths.airquality);
  csv::write_row(rates, {"state", "week_ending_date", "age_category", "sex", "race", "rate"});
  csv::write_row(ww, {"state", "week_ending_date", "sewershed_id", "wval", "population_served"});
  csv::write_row(met, {"state", "date", "PRECTOTCORR", "PS", "QV2M", "RH2M", "T2M", "T2MDEW", "T2MWET", "TS", "WD10M",
                       "WS10M", "WS2M"});
  csv::write_row(air, {"state", "date", "CO", "NO2", "Ozone", "PM10", "PM25", "SO2"});

  static const std::vector<std::pair<std::string, double>> kAges{
      {"0-4", 1.0}, {"5-17", 0.07}, {"18-49", 0.04}, {"50-64", 0.12}, {"65+", 0.45}, {"Overall", 0.18}};
  static const std::vector<std::pair<std::string, double>> kSexes{{"Male", 1.06}, {"Female", 0.94}};
  static const std::vector<std::pair<std::string, double>> kRaces{{"White", 0.85},
                                                                  {"Black", 1.25},
                                                                  {"Hispanic", 1.1},
                                                                  {"American Indian/Alaska Native", 1.6},
                                                                  {"Asian/Pacific Islander", 0.7}};

  for (std::size_t si = 0; si < opt.roster.size(); ++si) {
    const auto& state = opt.roster[si];
    const auto& cl = climates[si];
    const bool weighted = state != "OR";
    const int sewersheds = 1 + static_cast<int>(n.below(3));
    const double alt = detail::high_altitude(state) ? opt.altitude_rate_factor : 1.0;

    for (int w = 0; w < opt.weeks; ++w) {
      const Date end = opt.first_week_end.plus_days(7 * w);
      const double temp_week = detail::seasonal_temp(cl, end.plus_days(-3));
      const double cold = std::max(0.0, 12.0 - temp_week) / 12.0;
      const double level = (0.6 + detail::intensity(end) * cl.scale * alt * (0.7 + 0.6 * cold)) * n.lognormal(0.35);

      for (const auto& [age, mult] : kAges) {
        const double r = age == "0-4" ? level : level * mult * n.lognormal(0.1);
        csv::write_row(rates, {state, end.iso(), age, "Overall", "Overall", detail::num(r, 1)});
      }
      const double overall = level * 0.18;
      for (const auto& [sex, mult] : kSexes)
        csv::write_row(rates, {state, end.iso(), "Overall", sex, "Overall", detail::num(overall * mult, 1)});
      for (const auto& [race, mult] : kRaces)
        csv::write_row(rates, {state, end.iso(), "Overall", "Overall", race, detail::num(overall * mult, 1)});

      const double wval = std::max(0.0, 0.32 * level * n.lognormal(0.45) + std::abs(n.normal(0.0, 0.4)) - 0.2);
      for (int k = 0; k < sewersheds; ++k) {
        const double site = wval * n.lognormal(0.12);
        const std::string pop = weighted ? std::to_string(50000 + 25000 * static_cast<int>(n.below(20))) : "";
        csv::write_row(ww, {state, end.iso(), state + "-" + std::to_string(k + 1), detail::num(site, 2), pop});
      }

      const double humid_week = n.normal(0.0, 1.6);
      const int points = std::find(opt.two_point_states.begin(), opt.two_point_states.end(), state) !=
                                 opt.two_point_states.end()
                             ? 2
                             : 1;
      for (int d = 0; d < 7; ++d) {
        const Date day = end.plus_days(d - 6);
        const double t_day = detail::seasonal_temp(cl, day) + n.normal(0.0, 2.5);
        for (int p = 0; p < points; ++p) {
          if (n.chance(opt.missing_day)) continue;
          const double t = t_day + (p == 0 ? 0.0 : n.normal(-0.5, 0.8));
          const double ws10 = 2.5 + 1.4 * std::abs(n.normal());
          const double ws2 = std::max(0.0, 0.72 * ws10 + n.normal(0.0, 0.12));
          const double qv = std::max(0.4, 7.0 + 0.1 * t + humid_week + n.normal(0.0, 1.5));
          const std::string ps = n.chance(0.01) ? "-999" : detail::num(cl.pressure + n.normal(0.0, 0.35), 2);
          csv::write_row(met, {state, day.iso(), detail::num(std::max(0.0, n.normal(1.5, 2.5)), 2), ps,
                               detail::num(qv, 2), detail::num(std::clamp(68.0 + n.normal(0.0, 12.0), 5.0, 100.0), 1),
                               detail::num(t, 2), detail::num(t - 6.5 + n.normal(0.0, 1.2), 2),
                               detail::num(t - 3.2 + n.normal(0.0, 0.6), 2), detail::num(t + n.normal(0.3, 0.9), 2),
                               detail::num(n.uniform(0.0, 360.0), 1), detail::num(ws10, 2), detail::num(ws2, 2)});
        }
        if (n.chance(opt.missing_day)) continue;
        csv::write_row(air, {state, day.iso(), detail::num(0.22 + n.normal(0.0, 0.09), 3),
                             detail::num(0.011 + n.normal(0.0, 0.006), 4), detail::num(0.031 + n.normal(0.0, 0.008), 4),
                             detail::num(17.0 + n.normal(0.0, 6.0), 1), detail::num(7.5 + n.normal(0.0, 2.8), 1),
                             detail::num(0.7 + n.normal(0.0, 0.55), 2)});
      }
    }
  }

  const Date last = opt.first_week_end.plus_days(7 * (opt.weeks - 1));
  for (int k = 0; k < opt.malformed_rows; ++k) {
    csv::write_row(rates, {"ZZ", last.iso(), "0-4", "Overall", "Overall", "3.0"});
    csv::write_row(ww, {opt.roster.front(), last.iso(), "bad", "n/a", ""});
    csv::write_row(met, {opt.roster.front(), "2023-02-30", "1", "100", "5", "50", "1", "0", "0", "1", "10", "2", "1"});
    csv::write_row(air, {opt.roster.front(), last.iso(), "x", "0.01", "0.03", "10", "5", "1"});
  }
  return paths;
}

}  // namespace rsv::synth
