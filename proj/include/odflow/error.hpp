#ifndef ODFLOW_ERROR_HPP
#define ODFLOW_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace odflow {

enum class ErrorCode {
  DimensionMismatch,
  NegativeEntry,
  MarginTotalsDiffer,
  ParseError,
  DegenerateMargin,
  Overflow,
  EmptyPropensity,
  StateSpaceTooLarge,
  OutOfPolytope,
  InsufficientSamples,
  NoCrossing,
  NoPath,
  InfeasibleTarget,
  InvalidRange,
  ZeroMargin,
  InvalidArgument,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::NegativeEntry: return "NEGATIVE_ENTRY";
    case ErrorCode::MarginTotalsDiffer: return "MARGIN_TOTALS_DIFFER";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::DegenerateMargin: return "DEGENERATE_MARGIN";
    case ErrorCode::Overflow: return "OVERFLOW";
    case ErrorCode::EmptyPropensity: return "EMPTY_PROPENSITY";
    case ErrorCode::StateSpaceTooLarge: return "STATE_SPACE_TOO_LARGE";
    case ErrorCode::OutOfPolytope: return "OUT_OF_POLYTOPE";
    case ErrorCode::InsufficientSamples: return "INSUFFICIENT_SAMPLES";
    case ErrorCode::NoCrossing: return "NO_CROSSING";
    case ErrorCode::NoPath: return "NO_PATH";
    case ErrorCode::InfeasibleTarget: return "INFEASIBLE_TARGET";
    case ErrorCode::InvalidRange: return "INVALID_RANGE";
    case ErrorCode::ZeroMargin: return "ZERO_MARGIN";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::IoError: return "IO_ERROR";
  }
  return "UNKNOWN";
}

/// Exception carrying one of the library's error codes. The message is
/// prefixed with the code name so it survives being printed by a caller that
/// only sees std::exception.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace odflow

#endif  // ODFLOW_ERROR_HPP
