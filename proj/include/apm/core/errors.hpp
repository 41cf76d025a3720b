#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace apm {

// Base of every error raised by the library. kind() is a stable token used by
// the CLI for its machine-parseable error line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& message) : Error("dimension", message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("config", message) {}
};

class SequenceTooShortError : public Error {
 public:
  explicit SequenceTooShortError(const std::string& message)
      : Error("sequence_too_short", message) {}
};

class FormatError : public Error {
 public:
  FormatError(const std::string& message, std::size_t offset)
      : Error("format", message + " (at byte " + std::to_string(offset) + ")"),
        detail_(message),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  std::size_t offset_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message) : Error("validation", message) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& message) : Error("training", message) {}
};

class GradCheckError : public Error {
 public:
  explicit GradCheckError(const std::string& message) : Error("gradcheck", message) {}
};

}  // namespace apm
