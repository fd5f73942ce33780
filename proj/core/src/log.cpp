#include "mstp/log.hpp"
#include "mstp/error.hpp"

#include <cstdlib>
#include <mutex>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace mstp {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidSchema: return "InvalidSchema";
    case Errc::InvalidState: return "InvalidState";
    case Errc::NonDivisorScale: return "NonDivisorScale";
    case Errc::NonPositiveDuration: return "NonPositiveDuration";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
    case Errc::BackendUnavailable: return "BackendUnavailable";
    case Errc::ProtocolError: return "ProtocolError";
    case Errc::InvalidAgentOutput: return "InvalidAgentOutput";
    case Errc::MissingRow: return "MissingRow";
    case Errc::MissingGroundTruth: return "MissingGroundTruth";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::MissingTruth: return "MissingTruth";
    case Errc::NoOutputPoints: return "NoOutputPoints";
    case Errc::NoTransitions: return "NoTransitions";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::TooSmallForScales: return "TooSmallForScales";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::EmptyRanking: return "EmptyRanking";
    case Errc::SequenceTooShort: return "SequenceTooShort";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::Timeout: return "Timeout";
    case Errc::TransportError: return "TransportError";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::BindError: return "BindError";
  }
  return "Unknown";
}

bool is_validation_error(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument:
    case Errc::InvalidSchema:
    case Errc::InvalidState:
    case Errc::NonDivisorScale:
    case Errc::NonPositiveDuration:
    case Errc::ParseError:
    case Errc::LengthMismatch:
    case Errc::EmptyInput:
    case Errc::DegenerateInput:
      return true;
    default:
      return false;
  }
}

}  // namespace mstp

namespace mstp::log {
namespace {

std::shared_ptr<spdlog::logger> logger() {
  static std::once_flag once;
  static std::shared_ptr<spdlog::logger> instance;
  std::call_once(once, [] {
    instance = spdlog::stderr_color_mt("mstp");
    instance->set_pattern("[%Y-%m-%d %H:%M:%S.%e] [%^%l%$] %v");
    instance->set_level(spdlog::level::warn);
    if (const char* env = std::getenv("MSTP_LOG")) {
      instance->set_level(spdlog::level::from_str(env));
    }
  });
  return instance;
}

}  // namespace

void init_from_env() { logger(); }

void debug(const std::string& message) { logger()->debug(message); }
void info(const std::string& message) { logger()->info(message); }
void warn(const std::string& message) { logger()->warn(message); }
void error(const std::string& message) { logger()->error(message); }

}  // namespace mstp::log
