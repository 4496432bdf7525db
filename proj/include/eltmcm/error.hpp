#pragma once

#include <stdexcept>
#include <string>

namespace eltmcm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument is outside its documented domain. `field()` names the argument.
class ParameterError : public Error {
 public:
  ParameterError(std::string field, const std::string& message);
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Array or stream sizes are inconsistent with each other.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Reading or writing an external file failed or the file is malformed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace eltmcm
