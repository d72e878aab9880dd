#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mincomm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters, mismatched dimensions, empty inputs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A Gaussian with zero variance where a density is required.
class DegenerateKernelError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

/// The ordered-coding candidate count would exceed the configured cap.
class CapExceededError : public Error {
 public:
  CapExceededError(double required, std::uint64_t cap)
      : Error("candidate count " + std::to_string(required) + " exceeds cap " + std::to_string(cap)),
        required_(required),
        cap_(cap) {}

  double required() const { return required_; }
  std::uint64_t cap() const { return cap_; }

 private:
  double required_;
  std::uint64_t cap_;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

/// Precision payload broke the norm / non-negativity contract.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace mincomm
