#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ergokit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed map expression. `position` is the 1-based byte position of the
/// offending character (one past the end for truncated input).
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class UnknownIdentifier : public Error {
 public:
  UnknownIdentifier(const std::string& name, std::size_t position)
      : Error("unknown function '" + name + "' at position " + std::to_string(position)),
        name_(name),
        position_(position) {}
  const std::string& name() const noexcept { return name_; }
  std::size_t position() const noexcept { return position_; }

 private:
  std::string name_;
  std::size_t position_;
};

class UnboundParameter : public Error {
 public:
  explicit UnboundParameter(const std::string& name)
      : Error("parameter '" + name + "' is not bound"), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// Map value (or finite-difference stencil) outside [0,1] or non-finite.
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NotImplemented : public Error {
 public:
  using Error::Error;
};

/// Iterative solver hit its iteration cap. Carries the last residual (or slack).
class NotConverged : public Error {
 public:
  NotConverged(const std::string& what, double residual, std::size_t iterations)
      : Error(what), residual_(residual), iterations_(iterations) {}
  double residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

class NotMixing : public Error {
 public:
  using Error::Error;
};

class PowerTooSmall : public Error {
 public:
  using Error::Error;
};

class CertificateFailed : public Error {
 public:
  using Error::Error;
};

class ResolutionTooCoarse : public Error {
 public:
  using Error::Error;
};

class SingularIntegrand : public Error {
 public:
  using Error::Error;
};

}  // namespace ergokit
