#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ngalore {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rejected input: shape mismatches, out-of-range ranks, malformed arguments.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  explicit NumericalFailure(const std::string& what, std::size_t iterations = 0)
      : Error(what), iterations_(iterations) {}

  std::size_t iterations() const noexcept { return iterations_; }

 private:
  std::size_t iterations_;
};

class NotPositiveDefinite : public NumericalFailure {
 public:
  NotPositiveDefinite(const std::string& what, std::size_t pivot)
      : NumericalFailure(what), pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

// API misuse, e.g. backward() on a graph that never produced a loss.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Checkpoint or data file could not be read.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace ngalore
