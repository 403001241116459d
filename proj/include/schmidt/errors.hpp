#pragma once

#include <stdexcept>
#include <string>

namespace schmidt {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidSpectrum : public Error {
 public:
  using Error::Error;
};

class InvalidGain : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Grid too coarse for one of the kernel length scales.
class ResolutionError : public Error {
 public:
  ResolutionError(std::string scale, double points_per_width, double required)
      : Error("grid under-resolves " + scale + ": " + std::to_string(points_per_width) +
              " points per 1/e width, need >= " + std::to_string(required)),
        scale_(std::move(scale)) {}

  const std::string& scale() const noexcept { return scale_; }

 private:
  std::string scale_;
};

/// Field energy reached the grid boundary or the transfer-function band limit.
class AliasingError : public Error {
 public:
  using Error::Error;
};

/// A numerical backend failed (decomposition did not converge, etc).
class ComputationError : public Error {
 public:
  using Error::Error;
};

class DegenerateBatch : public Error {
 public:
  using Error::Error;
};

/// Per-mode photon number too large for the discrete sampler.
class OverflowGuard : public Error {
 public:
  using Error::Error;
};

class CalibrationFailed : public Error {
 public:
  CalibrationFailed(const std::string& what, double residual)
      : Error(what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Invalid scenario configuration. `path` is a JSON-pointer-like location.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : Error(path.empty() ? message : path + ": " + message), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace schmidt
