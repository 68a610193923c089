#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vdegrade {

/// Root of every exception the library throws. Each subclass maps to one
/// failure category so callers (notably the CLI exit-code mapping) can branch
/// on type rather than on message text.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands whose dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A parameter outside its domain (non-positive sigma, zero target size...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent pipeline configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A required external tool is missing or failed to run.
class EnvironmentError : public Error {
 public:
  using Error::Error;
};

/// An external tool produced output that does not match its input contract.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Model derivative maps disagree with its evaluation map.
class ModelError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Failure inside one stage of a degradation plan. Carries the position of
/// the stage in application order; the message embeds the original cause.
class StageError : public Error {
 public:
  StageError(std::size_t stage_index, std::string stage_type, const std::string& cause)
      : Error("stage " + std::to_string(stage_index) + " (" + stage_type + "): " + cause),
        stage_index_(stage_index),
        stage_type_(std::move(stage_type)) {}

  std::size_t stage_index() const noexcept { return stage_index_; }
  const std::string& stage_type() const noexcept { return stage_type_; }

 private:
  std::size_t stage_index_;
  std::string stage_type_;
};

}  // namespace vdegrade
