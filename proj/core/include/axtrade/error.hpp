#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace axtrade {

enum class ErrorKind {
  // data ingestion / preprocessing
  MalformedRow,
  NonMonotonicTimestamp,
  EmptyInput,
  SeriesTooShort,
  TooFewFeatures,
  // numerics
  ShapeMismatch,
  NonFiniteValue,
  NoRecordedForward,
  DivergedLoss,
  // labeling
  TooFewSamples,
  TooFewPoints,
  DegenerateData,
  LabelOutOfRange,
  // environment
  OutOfData,
  EpisodeFinished,
  EmptyBuffer,
  // metrics
  DegenerateReturns,
  ZeroBaseline,
  // operator surface
  IoError,
  MissingCheckpoint,
  ConfigError,
  AlreadyExists,
};

std::string_view to_string(ErrorKind kind);

// Process exit codes used by the command line tool.
enum class ExitCode : int { Ok = 0, Usage = 1, Data = 2, Numeric = 3 };

ExitCode exit_code_for(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

  // Line number for row-level parse errors (1-based, header is line 1).
  std::optional<std::size_t> line() const noexcept { return line_; }
  Error& with_line(std::size_t line) {
    line_ = line;
    return *this;
  }

  // Seed for MissingCheckpoint.
  std::optional<std::uint64_t> seed() const noexcept { return seed_; }
  Error& with_seed(std::uint64_t seed) {
    seed_ = seed;
    return *this;
  }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> line_;
  std::optional<std::uint64_t> seed_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace axtrade
