#pragma once

#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "rsv/csv.hpp"
#include "rsv/error.hpp"

namespace rsv {

/// Calendar day. Thin wrapper over std::chrono::sys_days.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
  constexpr Date(int y, unsigned m, unsigned d)
      : days_(std::chrono::sys_days{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}}) {}

  constexpr std::chrono::sys_days days() const { return days_; }
  constexpr std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{days_}; }
  constexpr int year() const { return static_cast<int>(ymd().year()); }
  constexpr unsigned month() const { return static_cast<unsigned>(ymd().month()); }
  constexpr unsigned day() const { return static_cast<unsigned>(ymd().day()); }
  /// 0 = Sunday ... 6 = Saturday.
  constexpr unsigned weekday() const { return std::chrono::weekday{days_}.c_encoding(); }
  constexpr Date plus_days(int n) const { return Date{days_ + std::chrono::days{n}}; }
  constexpr long serial() const { return days_.time_since_epoch().count(); }

  /// Accepts YYYY-MM-DD (optionally followed by a time part) and M/D/YYYY.
  static std::optional<Date> parse(std::string_view s) {
    s = csv::trim(s);
    if (auto t = s.find_first_of("T "); t != std::string_view::npos) s = s.substr(0, t);
    int y = 0;
    unsigned m = 0, d = 0;
    std::string buf(s);
    char tail = 0;
    if (std::sscanf(buf.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) == 3 ||
        std::sscanf(buf.c_str(), "%2u/%2u/%4d%c", &m, &d, &y, &tail) == 3) {
      std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
      if (!ymd.ok() || y < 1900) return std::nullopt;
      return Date{std::chrono::sys_days{ymd}};
    }
    return std::nullopt;
  }

  std::string iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year(), month(), day());
    return buf;
  }

  friend constexpr auto operator<=>(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

/// MMWR epidemiological week: Sunday through Saturday, identified by the
/// Saturday it ends on. Week 1 is the first week with at least four days in
/// the calendar year. The MMWR year is the year of the week's Wednesday.
class EpiWeek {
 public:
  EpiWeek() = default;

  /// The week containing `day`.
  static EpiWeek containing(Date day) { return EpiWeek(day.plus_days(6 - static_cast<int>(day.weekday()))); }

  /// Throws InvalidArgument unless `saturday` is a Saturday.
  static EpiWeek ending(Date saturday) {
    if (saturday.weekday() != 6) fail(ErrorKind::InvalidArgument, saturday.iso() + " is not a Saturday");
    return EpiWeek(saturday);
  }

  int year() const { return year_; }
  int week() const { return week_; }
  Date end_date() const { return end_; }
  Date start_date() const { return end_.plus_days(-6); }
  bool contains(Date d) const { return start_date() <= d && d <= end_; }

  friend bool operator==(const EpiWeek& a, const EpiWeek& b) { return a.end_ == b.end_; }
  friend auto operator<=>(const EpiWeek& a, const EpiWeek& b) { return a.end_ <=> b.end_; }

 private:
  explicit EpiWeek(Date saturday) : end_(saturday) {
    const Date wednesday = saturday.plus_days(-3);
    year_ = wednesday.year();
    const Date jan1{year_, 1, 1};
    const long doy = wednesday.serial() - jan1.serial();
    week_ = static_cast<int>(doy / 7) + 1;
  }

  Date end_{};
  int year_ = 0;
  int week_ = 0;
};

}  // namespace rsv
