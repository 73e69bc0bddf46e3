#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fdembed {

// Base for failures caused by input data (malformed files, shape
// mismatches, numerical non-convergence). Precondition violations by the
// caller use the standard std::invalid_argument / std::out_of_range.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConvergenceError : public DataError {
 public:
  ConvergenceError(const std::string& what, double residual)
      : DataError(what + " (last residual " + std::to_string(residual) + ")"),
        residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// The requested operation needs dense O(n^2) storage beyond the configured
// guard (oracle SVD, projection error).
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fdembed
