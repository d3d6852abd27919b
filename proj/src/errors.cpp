#include "mfn/errors.hpp"

namespace mfn {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorCode::UnknownAgent: return "UnknownAgent";
    case ErrorCode::SchemeInapplicable: return "SchemeInapplicable";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::EmptyPartition: return "EmptyPartition";
    case ErrorCode::EmptyTrajectory: return "EmptyTrajectory";
    case ErrorCode::PredictionFailure: return "PredictionFailure";
    case ErrorCode::NoCandidate: return "NoCandidate";
    case ErrorCode::IncomparableProposals: return "IncomparableProposals";
    case ErrorCode::WeightsNotNormalized: return "WeightsNotNormalized";
    case ErrorCode::DiscreteDomain: return "DiscreteDomain";
    case ErrorCode::AllZeroConfidence: return "AllZeroConfidence";
    case ErrorCode::BoundsMismatch: return "BoundsMismatch";
    case ErrorCode::ReasonerFailure: return "ReasonerFailure";
    case ErrorCode::OutOfRangeAction: return "OutOfRangeAction";
    case ErrorCode::InvalidLevel: return "InvalidLevel";
    case ErrorCode::IncompleteLog: return "IncompleteLog";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::EnvironmentError: return "EnvironmentError";
    case ErrorCode::WireFormat: return "WireFormat";
  }
  return "Unknown";
}

}  // namespace mfn
