#pragma once

#include <stdexcept>
#include <string>

namespace netimplode {

// Each error kind maps to one failure class callers may want to tell apart.
// The CLI maps them onto exit codes.

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ArchitectureError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EligibilityError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SelectionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormatError : DataError {
  using DataError::DataError;
};

struct VersionError : FormatError {
  using FormatError::FormatError;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace netimplode
