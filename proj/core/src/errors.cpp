#include "logsplit/errors.hpp"

namespace logsplit {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IndexError: return "IndexError";
    case ErrorCode::DegenerateKnots: return "DegenerateKnots";
    case ErrorCode::OutOfSupport: return "OutOfSupport";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::InvalidSupport: return "InvalidSupport";
    case ErrorCode::NoMaximizer: return "NoMaximizer";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::FitNotConverged: return "FitNotConverged";
    case ErrorCode::SupportMismatch: return "SupportMismatch";
    case ErrorCode::DegreeTooHigh: return "DegreeTooHigh";
    case ErrorCode::DegenerateProduct: return "DegenerateProduct";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::ExperimentAborted: return "ExperimentAborted";
    case ErrorCode::EmptySubset: return "EmptySubset";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

bool is_statistical_failure(ErrorCode code) noexcept {
  return code == ErrorCode::NoMaximizer || code == ErrorCode::NonConvergence ||
         code == ErrorCode::ExperimentAborted;
}

}  // namespace logsplit
