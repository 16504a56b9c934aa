#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semvec {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed expression text. `position` is a 0-based character offset.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// Invalid or inconsistent input data: bad dataset files, unknown variables,
// checkpoint/dataset mismatches.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, degenerate normalizations, coefficient overflow.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace semvec
