#pragma once

#include <stdexcept>
#include <string>

namespace qflow {

// Every failure the library reports derives from Error; kind() is the
// stable machine-readable tag used by the command-line error JSON.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

// NaN/Inf input, or a tensor outside the physical eigenvalue box where the
// operation requires one inside it.
class DomainError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

// The eigenvalue margin fell below the hard numerical floor.
class BoundaryProximityError : public Error {
public:
  BoundaryProximityError(const std::string& what, double margin)
      : Error(what), margin_(margin) {}
  const char* kind() const noexcept override { return "boundary_proximity"; }
  double margin() const noexcept { return margin_; }

private:
  double margin_;
};

class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  const char* kind() const noexcept override { return "convergence"; }
  double residual() const noexcept { return residual_; }

private:
  double residual_;
};

class ConfigError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

class IoError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

} // namespace qflow
