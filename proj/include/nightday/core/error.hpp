#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nightday {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class VocabularyError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class CompatibilityError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Raised when a training step produces a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::int64_t step)
      : Error(what + " at step " + std::to_string(step)), step_(step) {}
  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

enum class CheckpointErrc {
  io,
  bad_magic,
  unsupported_version,
  truncated,
  checksum_mismatch,
  digest_mismatch,
  malformed,
};

inline const char* to_string(CheckpointErrc code) {
  switch (code) {
    case CheckpointErrc::io: return "io";
    case CheckpointErrc::bad_magic: return "bad_magic";
    case CheckpointErrc::unsupported_version: return "unsupported_version";
    case CheckpointErrc::truncated: return "truncated";
    case CheckpointErrc::checksum_mismatch: return "checksum_mismatch";
    case CheckpointErrc::digest_mismatch: return "digest_mismatch";
    case CheckpointErrc::malformed: return "malformed";
  }
  return "unknown";
}

class CheckpointError : public Error {
 public:
  CheckpointError(CheckpointErrc code, const std::string& what)
      : Error(std::string("checkpoint ") + to_string(code) + ": " + what), code_(code) {}
  CheckpointErrc code() const noexcept { return code_; }

 private:
  CheckpointErrc code_;
};

}  // namespace nightday
