#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rsv/csv.hpp"
#include "rsv/error.hpp"

namespace rsv {

/// Two-letter USPS abbreviation, always upper case.
class StateCode {
 public:
  StateCode() = default;

  /// Accepts a USPS code in any case or a full state name.
  static std::optional<StateCode> parse(std::string_view text) {
    text = csv::trim(text);
    if (text.size() == 2) {
      std::string up{static_cast<char>(std::toupper(static_cast<unsigned char>(text[0]))),
                     static_cast<char>(std::toupper(static_cast<unsigned char>(text[1])))};
      for (const auto& [code, name] : kStates)
        if (code == up) return StateCode(up);
      return std::nullopt;
    }
    for (const auto& [code, name] : kStates) {
      if (name.size() != text.size()) continue;
      bool same = std::equal(name.begin(), name.end(), text.begin(), [](char a, char b) {
        return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
      });
      if (same) return StateCode(std::string(code));
    }
    return std::nullopt;
  }

  const std::string& str() const { return code_; }

  friend auto operator<=>(const StateCode&, const StateCode&) = default;

 private:
  explicit StateCode(std::string code) : code_(std::move(code)) {}
  std::string code_;

  static constexpr std::array<std::pair<std::string_view, std::string_view>, 51> kStates{{
      {"AL", "Alabama"}, {"AK", "Alaska"}, {"AZ", "Arizona"}, {"AR", "Arkansas"},
      {"CA", "California"}, {"CO", "Colorado"}, {"CT", "Connecticut"}, {"DE", "Delaware"},
      {"DC", "District of Columbia"}, {"FL", "Florida"}, {"GA", "Georgia"}, {"HI", "Hawaii"},
      {"ID", "Idaho"}, {"IL", "Illinois"}, {"IN", "Indiana"}, {"IA", "Iowa"},
      {"KS", "Kansas"}, {"KY", "Kentucky"}, {"LA", "Louisiana"}, {"ME", "Maine"},
      {"MD", "Maryland"}, {"MA", "Massachusetts"}, {"MI", "Michigan"}, {"MN", "Minnesota"},
      {"MS", "Mississippi"}, {"MO", "Missouri"}, {"MT", "Montana"}, {"NE", "Nebraska"},
      {"NV", "Nevada"}, {"NH", "New Hampshire"}, {"NJ", "New Jersey"}, {"NM", "New Mexico"},
      {"NY", "New York"}, {"NC", "North Carolina"}, {"ND", "North Dakota"}, {"OH", "Ohio"},
      {"OK", "Oklahoma"}, {"OR", "Oregon"}, {"PA", "Pennsylvania"}, {"RI", "Rhode Island"},
      {"SC", "South Carolina"}, {"SD", "South Dakota"}, {"TN", "Tennessee"}, {"TX", "Texas"},
      {"UT", "Utah"}, {"VT", "Vermont"}, {"VA", "Virginia"}, {"WA", "Washington"},
      {"WV", "West Virginia"}, {"WI", "Wisconsin"}, {"WY", "Wyoming"},
  }};
};

/// The configured set of surveillance states.
class Roster {
 public:
  Roster() = default;
  explicit Roster(const std::vector<std::string>& codes) {
    for (const auto& c : codes) {
      auto s = StateCode::parse(c);
      if (!s) fail(ErrorKind::UnknownState, "not a US state: '" + c + "'");
      states_.insert(*s);
    }
  }

  bool contains(const StateCode& s) const { return states_.contains(s); }
  std::size_t size() const { return states_.size(); }
  bool empty() const { return states_.empty(); }
  std::vector<StateCode> list() const { return {states_.begin(), states_.end()}; }

  /// Parses `text` and checks membership.
  std::optional<StateCode> resolve(std::string_view text) const {
    auto s = StateCode::parse(text);
    if (!s || !contains(*s)) return std::nullopt;
    return s;
  }

  Roster without(const std::vector<StateCode>& excluded) const {
    Roster r = *this;
    for (const auto& s : excluded) {
      if (!contains(s)) fail(ErrorKind::UnknownState, s.str() + " is not in the roster");
      r.states_.erase(s);
    }
    return r;
  }

 private:
  std::set<StateCode> states_;
};

/// RSV-NET surveillance states.
inline std::vector<std::string> default_roster_codes() {
  return {"CA", "CO", "CT", "GA", "MD", "MI", "MN", "NM", "NY", "NC", "OR", "TN", "UT"};
}

}  // namespace rsv
