#pragma once

#include <stdexcept>
#include <string>

namespace spancat {

// Malformed input or a violated data invariant.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss or gradient during training.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a computation has no defined value for the given input
// (e.g. recall over zero gold spans).
class NoDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spancat
