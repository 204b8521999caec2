#include "protoid/error.hpp"

namespace protoid {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::DegenerateSignal: return "DegenerateSignal";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::InvalidLabel: return "InvalidLabel";
    case ErrorKind::TrainingDiverged: return "TrainingDiverged";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::InsufficientData: return "InsufficientData";
  }
  return "Unknown";
}

}  // namespace protoid
