#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mfn {

enum class ErrorCode {
  DisconnectedGraph,
  SelfLoop,
  NonPositiveWeight,
  UnknownAgent,
  SchemeInapplicable,
  EmptyInput,
  LengthMismatch,
  DimensionMismatch,
  InvalidParams,
  EmptyPartition,
  EmptyTrajectory,
  PredictionFailure,
  NoCandidate,
  IncomparableProposals,
  WeightsNotNormalized,
  DiscreteDomain,
  AllZeroConfidence,
  BoundsMismatch,
  ReasonerFailure,
  OutOfRangeAction,
  InvalidLevel,
  IncompleteLog,
  ParseError,
  ValidationError,
  EnvironmentError,
  WireFormat,
};

std::string_view to_string(ErrorCode code) noexcept;

// All recoverable failures in the library are reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mfn
