#pragma once

#include <stdexcept>
#include <string>

namespace nsfar {

/// Base of every error raised by the library.  Each subclass corresponds to
/// one failure class named in the module contracts, so callers can catch
/// precisely (the CLI maps them to exit codes).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
  using Error::Error;
};

class UnsupportedOrderError : public Error {
public:
  using Error::Error;
};

/// Quadrature could not reach the requested tolerance.
class AccuracyError : public Error {
public:
  AccuracyError(const std::string& what, double achieved)
      : Error(what + " (achieved estimate " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

private:
  double achieved_;
};

class ShapeError : public Error {
public:
  using Error::Error;
};

class ParameterError : public Error {
public:
  using Error::Error;
};

/// Non-negligible mean vorticity: periodic Biot-Savart needs zero mean.
class MassError : public Error {
public:
  using Error::Error;
};

class ConstructionError : public Error {
public:
  using Error::Error;
};

class CflError : public Error {
public:
  CflError(const std::string& what, double suggested_dt)
      : Error(what), suggested_dt_(suggested_dt) {}
  double suggested_dt() const noexcept { return suggested_dt_; }

private:
  double suggested_dt_;
};

/// The solution reached the box boundary above the far-field floor.
class TruncationError : public Error {
public:
  TruncationError(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

private:
  double time_;
};

class DependencyError : public Error {
public:
  using Error::Error;
};

class IntegrationError : public Error {
public:
  using Error::Error;
};

/// A profile definition was requested with a non-integrable tail.
class DefinitionError : public Error {
public:
  using Error::Error;
};

class FitError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace nsfar
