#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fairsel {

/// Machine-readable error categories. Each maps to a stable string used in
/// the CLI's error record.
enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  EmptyInput,
  MissingColumn,
  ParseError,
  LabelRange,
  EmptyFile,
  MissingTrueLabels,
  EmptyGroup,
  DegenerateThreshold,
  UndefinedMetric,
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fairsel
