#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace curegraph {

// Validation failures (bad input, bad arguments, broken references) map to
// CLI exit code 1; numeric failures map to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t byte_offset);
  std::uint64_t byte_offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Zero-norm vectors, coincident geometry, and similar inputs that leave a
// quantity undefined.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Loss became non-finite during optimization.
class TrainingDivergedError : public NumericError {
 public:
  TrainingDivergedError(const std::string& stage, std::size_t step);
  const std::string& stage() const { return stage_; }
  std::size_t step() const { return step_; }

 private:
  std::string stage_;
  std::size_t step_;
};

}  // namespace curegraph
