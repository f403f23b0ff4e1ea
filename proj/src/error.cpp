#include "fairsel/error.hpp"

namespace fairsel {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::DimensionMismatch: return "dimension_mismatch";
    case ErrorKind::EmptyInput: return "empty_input";
    case ErrorKind::MissingColumn: return "missing_column";
    case ErrorKind::ParseError: return "parse_error";
    case ErrorKind::LabelRange: return "label_range";
    case ErrorKind::EmptyFile: return "empty_file";
    case ErrorKind::MissingTrueLabels: return "missing_true_labels";
    case ErrorKind::EmptyGroup: return "empty_group";
    case ErrorKind::DegenerateThreshold: return "degenerate_threshold";
    case ErrorKind::UndefinedMetric: return "undefined_metric";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace fairsel
