#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace geflow {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
  virtual int exit_code() const { return 3; }
};

// Bad input: config files, CLI arguments, malformed dumps.
struct ConfigError : Error {
  using Error::Error;
  int exit_code() const override { return 2; }
};

struct FormatError : ConfigError {
  using ConfigError::ConfigError;
};

struct ContractViolation : Error {
  using Error::Error;
};

struct NonAdmissible : ContractViolation {
  NonAdmissible(std::size_t point, double eig)
      : ContractViolation("non-admissible field: fiber Hessian eigenvalue " + std::to_string(eig) +
                          " at point " + std::to_string(point)),
        point(point), eigenvalue(eig) {}
  std::size_t point;
  double eigenvalue;
};

struct FlowStalled : Error {
  using Error::Error;
  int exit_code() const override { return 4; }
};

}  // namespace geflow
