#pragma once

#include <stdexcept>
#include <string>

namespace rlvr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A RunConfig (or sweep file) that violates its invariants. Carries the
/// offending field so the CLI can name it.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class InvalidGroup : public Error {
 public:
  using Error::Error;
};

class ContractViolation : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class TokenOutOfRange : public Error {
 public:
  using Error::Error;
};

}  // namespace rlvr

namespace rlvr {

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rlvr
