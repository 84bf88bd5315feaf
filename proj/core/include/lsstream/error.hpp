#ifndef LSSTREAM_ERROR_HPP
#define LSSTREAM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lsstream {

/// Bad parameters, inconsistent dimensions, invalid model specifications.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or unusable input data (CSV parsing, spacing, missing values,
/// streams too short for the requested lag structure).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A matrix that must be inverted turned out to be (numerically) singular.
class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lsstream

#endif  // LSSTREAM_ERROR_HPP
