#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace protoid {

enum class ErrorKind {
  InvalidInput,
  DegenerateSignal,
  InvalidSpec,
  InsufficientSamples,
  ShapeError,
  InvalidLabel,
  TrainingDiverged,
  IoError,
  FormatError,
  ConfigError,
  InsufficientData,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace protoid
