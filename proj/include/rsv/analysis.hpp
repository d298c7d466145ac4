#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rsv/csv.hpp"
#include "rsv/error.hpp"
#include "rsv/features.hpp"
#include "rsv/ingest.hpp"
#include "rsv/panel.hpp"

namespace rsv::analysis {

/// Pearson product-moment correlation. Requires at least three pairs and
/// non-zero variance on both sides.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorKind::LengthMismatch, "pearson: vectors differ in length");
  if (x.size() < 3) fail(ErrorKind::InvalidArgument, "pearson: need at least 3 observations");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) fail(ErrorKind::ZeroVariance, "pearson: a vector is constant");
  return std::clamp(sxy / (std::sqrt(sxx) * std::sqrt(syy)), -1.0, 1.0);
}

/// Symmetric matrix of coefficients. A cell is nullopt when the pair had
/// zero variance or fewer than three complete rows.
struct CorrelationMatrix {
  std::vector<std::string> variables;
  std::vector<std::vector<std::optional<double>>> values;

  std::optional<double> at(std::string_view a, std::string_view b) const {
    auto ia = index(a), ib = index(b);
    if (!ia || !ib) return std::nullopt;
    return values[*ia][*ib];
  }

  std::optional<std::size_t> index(std::string_view name) const {
    for (std::size_t i = 0; i < variables.size(); ++i)
      if (variables[i] == name) return i;
    return std::nullopt;
  }
};

/// Named numeric columns; NaN marks a missing cell.
struct NumericTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  const std::vector<double>& column(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return columns[i];
    fail(ErrorKind::InvalidArgument, "no column named '" + std::string(name) + "'");
  }
};

/// Rate, the fifteen predictors, and the four collinear meteorology columns.
inline NumericTable panel_table(const std::vector<panel::WeeklyPanelRow>& rows) {
  NumericTable t;
  t.names.emplace_back("Rate");
  for (auto n : kFeatureNames) t.names.emplace_back(n);
  for (auto n : kAuxNames) t.names.emplace_back(n);
  t.columns.assign(t.names.size(), {});
  for (const auto& r : rows) {
    t.columns[0].push_back(r.rate);
    for (std::size_t f = 0; f < kNumFeatures; ++f) t.columns[1 + f].push_back(r.features[f]);
    for (std::size_t a = 0; a < kNumAux; ++a) t.columns[1 + kNumFeatures + a].push_back(r.aux[a]);
  }
  return t;
}

inline CorrelationMatrix correlation_matrix(const NumericTable& table, const std::vector<std::string>& variables) {
  CorrelationMatrix m;
  m.variables = variables;
  const std::size_t p = variables.size();
  m.values.assign(p, std::vector<std::optional<double>>(p));
  std::vector<const std::vector<double>*> cols;
  for (const auto& v : variables) cols.push_back(&table.column(v));
  for (std::size_t i = 0; i < p; ++i) {
    m.values[i][i] = 1.0;
    for (std::size_t j = i + 1; j < p; ++j) {
      std::vector<double> x, y;
      for (std::size_t r = 0; r < cols[i]->size(); ++r) {
        const double a = (*cols[i])[r], b = (*cols[j])[r];
        if (std::isnan(a) || std::isnan(b)) continue;
        x.push_back(a);
        y.push_back(b);
      }
      std::optional<double> r;
      if (x.size() >= 3) {
        try {
          r = pearson(x, y);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::ZeroVariance) throw;
        }
      }
      m.values[i][j] = r;
      m.values[j][i] = r;
    }
  }
  return m;
}

inline void write_correlation(std::ostream& out, const CorrelationMatrix& m) {
  std::vector<std::string> header{"variable"};
  header.insert(header.end(), m.variables.begin(), m.variables.end());
  csv::write_row(out, header);
  for (std::size_t i = 0; i < m.variables.size(); ++i) {
    std::vector<std::string> row{m.variables[i]};
    for (const auto& v : m.values[i]) row.push_back(v ? csv::format_double(*v) : std::string("NA"));
    csv::write_row(out, row);
  }
}

/// Within every group of variables linked by |r| >= threshold, keeps only
/// the first member named in `preferences`. Ungrouped variables are kept.
/// The result is sorted by name.
inline std::vector<std::string> collinearity_prune(const CorrelationMatrix& m, double threshold,
                                                   const std::vector<std::string>& preferences) {
  if (!(threshold > 0.0 && threshold < 1.0)) fail(ErrorKind::InvalidArgument, "threshold must lie in (0, 1)");
  const std::size_t p = m.variables.size();
  std::vector<std::size_t> parent(p);
  for (std::size_t i = 0; i < p; ++i) parent[i] = i;
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j)
      if (m.values[i][j] && std::abs(*m.values[i][j]) >= threshold) parent[find(i)] = find(j);

  std::map<std::size_t, std::vector<std::string>> groups;
  for (std::size_t i = 0; i < p; ++i) groups[find(i)].push_back(m.variables[i]);

  std::vector<std::string> keep;
  for (auto& [root, members] : groups) {
    if (members.size() == 1) {
      keep.push_back(members.front());
      continue;
    }
    auto pref = std::find_if(preferences.begin(), preferences.end(), [&](const std::string& name) {
      return std::find(members.begin(), members.end(), name) != members.end();
    });
    if (pref == preferences.end()) {
      std::sort(members.begin(), members.end());
      std::string list;
      for (const auto& n : members) list += (list.empty() ? "" : ", ") + n;
      fail(ErrorKind::UnresolvedGroup, "no preference rule covers correlated group {" + list + "}");
    }
    keep.push_back(*pref);
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

inline constexpr double kDefaultPruneThreshold = 0.85;

/// Keep rules that reproduce the modeled predictor set.
inline std::vector<std::string> default_keep_rules() { return {"T2M", "WS10M"}; }

/// Candidate predictors screened for collinearity (everything numeric except the response and season flag).
inline std::vector<std::string> candidate_predictors() {
  std::vector<std::string> out;
  for (std::size_t f = 0; f < kNumFeatures; ++f)
    if (static_cast<Feature>(f) != Feature::RsvSeason) out.emplace_back(kFeatureNames[f]);
  for (auto n : kAuxNames) out.emplace_back(n);
  return out;
}

// ---------------------------------------------------------------------------

struct DistributionSummary {
  std::string variable;
  std::size_t n = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  double mean = 0, sd = 0, skewness = 0;
  std::vector<std::size_t> histogram;
  double bin_width = 0;
};

namespace detail {
// Linear interpolation between order statistics (the common "type 7" rule).
inline double quantile_sorted(const std::vector<double>& s, double q) {
  const double h = (static_cast<double>(s.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}
}  // namespace detail

/// NaN entries are ignored. Skewness is the adjusted Fisher-Pearson
/// coefficient, reported as 0 when undefined (n < 3 or constant data).
inline DistributionSummary distribution_summary(std::string variable, std::span<const double> data,
                                                std::size_t bins = 40) {
  std::vector<double> v;
  for (double x : data)
    if (!std::isnan(x)) v.push_back(x);
  if (v.empty()) fail(ErrorKind::EmptyInput, "no values for " + variable);
  if (bins == 0) fail(ErrorKind::InvalidArgument, "histogram needs at least one bin");
  std::sort(v.begin(), v.end());
  DistributionSummary s;
  s.variable = std::move(variable);
  s.n = v.size();
  s.min = v.front();
  s.max = v.back();
  s.q1 = detail::quantile_sorted(v, 0.25);
  s.median = detail::quantile_sorted(v, 0.5);
  s.q3 = detail::quantile_sorted(v, 0.75);
  const double n = static_cast<double>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / n;
  double m2 = 0.0, m3 = 0.0;
  for (double x : v) {
    const double d = x - s.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  s.sd = v.size() > 1 ? std::sqrt(m2 / (n - 1.0)) : 0.0;
  m2 /= n;
  m3 /= n;
  if (v.size() >= 3 && m2 > 0.0) {
    const double g1 = m3 / std::pow(m2, 1.5);
    s.skewness = g1 * std::sqrt(n * (n - 1.0)) / (n - 2.0);
  }
  s.histogram.assign(bins, 0);
  s.bin_width = (s.max - s.min) / static_cast<double>(bins);
  for (double x : v) {
    std::size_t b = 0;
    if (s.bin_width > 0.0) {
      b = static_cast<std::size_t>((x - s.min) / s.bin_width);
      b = std::min(b, bins - 1);
    }
    ++s.histogram[b];
  }
  return s;
}

inline void write_distributions(std::ostream& out, const std::vector<DistributionSummary>& rows) {
  csv::write_row(out, {"variable", "n", "min", "q1", "median", "q3", "max", "mean", "sd", "skewness", "bin_width",
                       "histogram"});
  for (const auto& s : rows) {
    std::string hist;
    for (auto c : s.histogram) hist += (hist.empty() ? "" : ";") + std::to_string(c);
    csv::write_row(out, {s.variable, std::to_string(s.n), csv::format_double(s.min), csv::format_double(s.q1),
                         csv::format_double(s.median), csv::format_double(s.q3), csv::format_double(s.max),
                         csv::format_double(s.mean), csv::format_double(s.sd), csv::format_double(s.skewness),
                         csv::format_double(s.bin_width), hist});
  }
}

// ---------------------------------------------------------------------------
// Weekly trend extracts

enum class TrendGroup { Sex, Age, Race, State };

inline std::optional<TrendGroup> parse_trend_group(std::string_view s) {
  if (s == "sex") return TrendGroup::Sex;
  if (s == "age") return TrendGroup::Age;
  if (s == "race") return TrendGroup::Race;
  if (s == "state") return TrendGroup::State;
  return std::nullopt;
}

inline std::string_view to_string(TrendGroup g) {
  switch (g) {
    case TrendGroup::Sex: return "sex";
    case TrendGroup::Age: return "age";
    case TrendGroup::Race: return "race";
    case TrendGroup::State: return "state";
  }
  return "?";
}

/// Which rows stand for "all levels" of the demographic columns.
struct TrendStrata {
  std::string overall = "Overall";
  std::string state_age_group = "0-4";
};

struct TrendSeries {
  std::string group;
  std::vector<std::pair<EpiWeek, double>> points;
};

/// One weekly series per level of `group_by`. When grouping by a demographic
/// column the other two must be at their overall level and states are
/// averaged per week; grouping by state uses the configured age group.
inline std::vector<TrendSeries> time_trend_extract(const std::vector<ingest::RawRateRecord>& records,
                                                   TrendGroup group_by, const TrendStrata& strata = {}) {
  std::map<std::string, std::map<EpiWeek, std::vector<double>>> acc;
  const auto& o = strata.overall;
  for (const auto& r : records) {
    switch (group_by) {
      case TrendGroup::Sex:
        if (r.age_group == o && r.race == o && r.sex != o) acc[r.sex][r.week].push_back(r.rate);
        break;
      case TrendGroup::Age:
        if (r.sex == o && r.race == o && r.age_group != o) acc[r.age_group][r.week].push_back(r.rate);
        break;
      case TrendGroup::Race:
        if (r.age_group == o && r.sex == o && r.race != o) acc[r.race][r.week].push_back(r.rate);
        break;
      case TrendGroup::State:
        if (r.age_group == strata.state_age_group && r.sex == o && r.race == o)
          acc[r.state.str()][r.week].push_back(r.rate);
        break;
    }
  }
  std::vector<TrendSeries> out;
  for (auto& [group, weeks] : acc) {
    TrendSeries s{group, {}};
    for (auto& [week, vals] : weeks) s.points.emplace_back(week, ingest::detail::order_free_mean(vals));
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<TrendSeries> time_trend_extract(const std::vector<ingest::RawRateRecord>& records,
                                                   std::string_view group_by, const TrendStrata& strata = {}) {
  auto g = parse_trend_group(group_by);
  if (!g) fail(ErrorKind::UnknownGroup, "unknown grouping '" + std::string(group_by) + "'");
  return time_trend_extract(records, *g, strata);
}

inline void write_trends(std::ostream& out, const std::vector<TrendSeries>& series) {
  csv::write_row(out, {"group", "week_ending", "rate"});
  for (const auto& s : series)
    for (const auto& [week, rate] : s.points) csv::write_row(out, {s.group, week.end_date().iso(), csv::format_double(rate)});
}

}  // namespace rsv::analysis
