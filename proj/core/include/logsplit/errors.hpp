#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace logsplit {

/// Failure categories raised by the library. Callers dispatch on code(),
/// the message carries the human-readable detail.
enum class ErrorCode {
  InvalidArgument,
  IndexError,
  DegenerateKnots,
  OutOfSupport,
  SingularSystem,
  InvalidSupport,
  NoMaximizer,
  NonConvergence,
  FitNotConverged,
  SupportMismatch,
  DegreeTooHigh,
  DegenerateProduct,
  GridTooCoarse,
  ExperimentAborted,
  EmptySubset,
  ParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// True for failures that reflect the sample rather than the caller:
/// a missing likelihood maximizer or an aborted experiment.
[[nodiscard]] bool is_statistical_failure(ErrorCode code) noexcept;

}  // namespace logsplit
