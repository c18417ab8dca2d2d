#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gradeforge {

enum class ErrorKind {
  InvalidScore,
  InvalidConcept,
  InvalidCutoffs,
  WeightSumError,
  EmptyInput,
  InvalidPolicy,
  InvalidRecord,
  IneligibleRec,
  MultipleMissed,
  ParseError,
  MissingDifficulty,
  InsufficientBank,
  DanglingReference,
  InvalidRegistration,
  EmptyRoot,
  CommandNotFound,
  AnnotationSyntax,
  UnknownConcept,
  UnknownErrorCode,
  EmptyClass,
  SnapshotMismatch,
  StaleSnapshot,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so that callers (the CLI
// exit-code mapping, the calibration service status mapping) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised by the annotation parser; `position` is the offending character index.
class SyntaxError : public Error {
 public:
  SyntaxError(ErrorKind kind, const std::string& message, std::size_t position)
      : Error(kind, message + " at index " + std::to_string(position)), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace gradeforge
