#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mstp {

enum class Errc {
  InvalidArgument,
  InvalidSchema,
  InvalidState,
  NonDivisorScale,
  NonPositiveDuration,
  ParseError,
  IoError,
  BackendUnavailable,
  ProtocolError,
  InvalidAgentOutput,
  MissingRow,
  MissingGroundTruth,
  DimensionMismatch,
  ShapeMismatch,
  MissingTruth,
  NoOutputPoints,
  NoTransitions,
  LengthMismatch,
  EmptyInput,
  TooSmallForScales,
  ZeroVector,
  EmptyRanking,
  SequenceTooShort,
  DegenerateInput,
  Timeout,
  TransportError,
  InvariantViolation,
  BindError,
};

std::string_view to_string(Errc code) noexcept;

/// Exception type thrown by every mstp operation. The code is stable and
/// machine-readable; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Errors the CLI reports as validation failures (exit code 2).
bool is_validation_error(Errc code) noexcept;

}  // namespace mstp
