#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace copydraw {

enum class Errc {
  MissingFile,
  SchemaViolation,
  InvariantViolation,
  IoError,
  TooFewSamples,
  TooFewPoints,
  EmptyTraining,
  SingleClass,
  DimensionMismatch,
  DegenerateVariance,
  EmptySample,
  BandOutOfRange,
  EigenFailure,
  KTooLarge,
  DegenerateTarget,
  SingularProjection,
  SegmentTooLong,
  TooFewTrials,
  KInvalid,
  SingleCondition,
  EmptyTrain,
  MissingEpochs,
  UnreachableCombination,
  InvalidSpec,
  TooLarge,
};

constexpr std::string_view to_string(Errc e) {
  switch (e) {
    case Errc::MissingFile: return "MissingFile";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::IoError: return "IoError";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::TooFewPoints: return "TooFewPoints";
    case Errc::EmptyTraining: return "EmptyTraining";
    case Errc::SingleClass: return "SingleClass";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::DegenerateVariance: return "DegenerateVariance";
    case Errc::EmptySample: return "EmptySample";
    case Errc::BandOutOfRange: return "BandOutOfRange";
    case Errc::EigenFailure: return "EigenFailure";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::DegenerateTarget: return "DegenerateTarget";
    case Errc::SingularProjection: return "SingularProjection";
    case Errc::SegmentTooLong: return "SegmentTooLong";
    case Errc::TooFewTrials: return "TooFewTrials";
    case Errc::KInvalid: return "KInvalid";
    case Errc::SingleCondition: return "SingleCondition";
    case Errc::EmptyTrain: return "EmptyTrain";
    case Errc::MissingEpochs: return "MissingEpochs";
    case Errc::UnreachableCombination: return "UnreachableCombination";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::TooLarge: return "TooLarge";
  }
  return "Unknown";
}

/// Every failure in the toolkit is reported as an Error carrying a typed code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

  /// Input validation failures (bad manifests, bad files) as opposed to
  /// numerical/runtime failures.
  bool is_validation() const noexcept {
    return code_ == Errc::MissingFile || code_ == Errc::SchemaViolation ||
           code_ == Errc::InvariantViolation || code_ == Errc::InvalidSpec;
  }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace copydraw
