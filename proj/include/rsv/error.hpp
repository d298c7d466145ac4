#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rsv {

/// Failure categories surfaced by the library. The names mirror the error
/// conditions callers are expected to branch on.
enum class ErrorKind {
  MissingColumn,
  MalformedRow,
  UnknownState,
  NonFinite,
  InsufficientCoverage,
  NoData,
  NegativeRate,
  DuplicateKey,
  RejectCeiling,
  EmptyPanel,
  ClassTooSmall,
  EmptyInput,
  ZeroVariance,
  LengthMismatch,
  UnresolvedGroup,
  UnknownGroup,
  EmptyNode,
  SchemaMismatch,
  NonFiniteFeature,
  SingleClassLabels,
  TestSetMismatch,
  IoFailure,
  CorruptArtifact,
  UnsupportedVersion,
  BindFailure,
  InvalidArgument,
  ConfigError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::UnknownState: return "UnknownState";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::InsufficientCoverage: return "InsufficientCoverage";
    case ErrorKind::NoData: return "NoData";
    case ErrorKind::NegativeRate: return "NegativeRate";
    case ErrorKind::DuplicateKey: return "DuplicateKey";
    case ErrorKind::RejectCeiling: return "RejectCeiling";
    case ErrorKind::EmptyPanel: return "EmptyPanel";
    case ErrorKind::ClassTooSmall: return "ClassTooSmall";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::UnresolvedGroup: return "UnresolvedGroup";
    case ErrorKind::UnknownGroup: return "UnknownGroup";
    case ErrorKind::EmptyNode: return "EmptyNode";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::NonFiniteFeature: return "NonFiniteFeature";
    case ErrorKind::SingleClassLabels: return "SingleClassLabels";
    case ErrorKind::TestSetMismatch: return "TestSetMismatch";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::CorruptArtifact: return "CorruptArtifact";
    case ErrorKind::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorKind::BindFailure: return "BindFailure";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace rsv
