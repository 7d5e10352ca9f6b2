#include "axtrade/error.hpp"

namespace axtrade {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::NonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::SeriesTooShort: return "SeriesTooShort";
    case ErrorKind::TooFewFeatures: return "TooFewFeatures";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::NoRecordedForward: return "NoRecordedForward";
    case ErrorKind::DivergedLoss: return "DivergedLoss";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::DegenerateData: return "DegenerateData";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::OutOfData: return "OutOfData";
    case ErrorKind::EpisodeFinished: return "EpisodeFinished";
    case ErrorKind::EmptyBuffer: return "EmptyBuffer";
    case ErrorKind::DegenerateReturns: return "DegenerateReturns";
    case ErrorKind::ZeroBaseline: return "ZeroBaseline";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::MissingCheckpoint: return "MissingCheckpoint";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::AlreadyExists: return "AlreadyExists";
  }
  return "Unknown";
}

ExitCode exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonFiniteValue:
    case ErrorKind::DivergedLoss:
      return ExitCode::Numeric;
    case ErrorKind::ConfigError:
    case ErrorKind::AlreadyExists:
      return ExitCode::Usage;
    default:
      return ExitCode::Data;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace axtrade
