#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pded {

/// Every failure the library reports maps to one of these kinds.
enum class ErrorCode {
  MalformedEquation,
  CoefficientLengthMismatch,
  UnsupportedOrder,
  SingularFactor,
  EmptySplit,
  DegenerateProblem,
  ZeroVariance,
  InsufficientData,
  BankFormatError,
  DuplicateId,
  EmptyText,
  Timeout,
  HttpError,
  RateLimited,
  ReplayMiss,
  SolverDiverged,
  StepSizeUnderflow,
  IoError,
  FormatError,
  ChecksumMismatch,
  CheckpointFormatError,
  BackendMismatch,
  NoRuns,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

/// HTTP failures keep the status so callers can distinguish 4xx from 5xx.
class HttpError : public Error {
public:
  HttpError(int status, const std::string& what)
      : Error(ErrorCode::HttpError, "status " + std::to_string(status) + ": " + what),
        status_(status) {}

  int status() const noexcept { return status_; }

private:
  int status_;
};

}  // namespace pded
