#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "rsv/error.hpp"

namespace rsv {

/// Ordered three-level risk label: LowRisk < Alert < Epidemic.
enum class RiskClass : std::uint8_t { LowRisk = 0, Alert = 1, Epidemic = 2 };

inline constexpr std::size_t kNumClasses = 3;
inline constexpr std::array<RiskClass, kNumClasses> kAllClasses{RiskClass::LowRisk, RiskClass::Alert,
                                                                RiskClass::Epidemic};

constexpr std::size_t index_of(RiskClass c) { return static_cast<std::size_t>(c); }
constexpr RiskClass class_at(std::size_t i) { return static_cast<RiskClass>(i); }

inline std::string_view to_string(RiskClass c) {
  switch (c) {
    case RiskClass::LowRisk: return "LowRisk";
    case RiskClass::Alert: return "Alert";
    case RiskClass::Epidemic: return "Epidemic";
  }
  return "?";
}

inline std::optional<RiskClass> parse_risk_class(std::string_view s) {
  for (auto c : kAllClasses)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

/// Rate thresholds per 100,000: [0, 5] LowRisk, (5, 20) Alert, [20, inf) Epidemic.
inline constexpr double kAlertAbove = 5.0;
inline constexpr double kEpidemicFrom = 20.0;

inline RiskClass classify_rate(double rate) {
  if (std::isnan(rate)) fail(ErrorKind::NonFinite, "rate is NaN");
  if (rate < 0.0) fail(ErrorKind::NegativeRate, "rate " + std::to_string(rate) + " is negative");
  if (rate <= kAlertAbove) return RiskClass::LowRisk;
  if (rate < kEpidemicFrom) return RiskClass::Alert;
  return RiskClass::Epidemic;
}

using ClassProbs = std::array<double, kNumClasses>;
using ClassCounts = std::array<std::size_t, kNumClasses>;

/// Argmax; exact ties go to the more severe class.
inline RiskClass argmax_severe(const ClassProbs& p) {
  std::size_t best = kNumClasses - 1;
  for (std::size_t k = kNumClasses - 1; k-- > 0;)
    if (p[k] > p[best]) best = k;
  return class_at(best);
}

}  // namespace rsv
