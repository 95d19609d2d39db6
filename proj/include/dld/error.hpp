#ifndef DLD_ERROR_HPP
#define DLD_ERROR_HPP

#include <stdexcept>
#include <string>

namespace dld {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Class index outside [0, num_classes).
class InvalidLabel : public Error {
 public:
  using Error::Error;
};

/// Malformed model input: wrong dimension, out of range, non-finite.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment, defense or attack configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A caller-side precondition does not hold (e.g. x0 already misclassified).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dld

#endif  // DLD_ERROR_HPP
