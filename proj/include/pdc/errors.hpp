#pragma once

#include <stdexcept>
#include <string>

namespace pdc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Wavelength outside the dispersion model's validity range.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Transverse wave number exceeds the medium wave number.
class EvanescentError : public Error {
 public:
  using Error::Error;
};

// A root or intersection that does not exist in the searched range.
class NotFoundError : public Error {
 public:
  NotFoundError(const std::string& what, double nearest)
      : Error(what), nearest_(nearest) {}
  // Closest approach to the sought condition, in the units of the search.
  double nearest_approach() const { return nearest_; }

 private:
  double nearest_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string pointer, const std::string& message)
      : Error(pointer + ": " + message), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

// Numerical breakdown: instability, invalid input to a numeric routine.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A transfer matrix that violates the Bogoliubov identities.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace pdc
