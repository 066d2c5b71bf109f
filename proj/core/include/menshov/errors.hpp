#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace menshov {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

// Grid too coarse for the polynomial degree (needs M > 4 deg).
class AliasingError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class ConstructionError : public Error {
 public:
  using Error::Error;
};

class CertificateFailure : public Error {
 public:
  CertificateFailure(std::string requirement, double measured, double bound)
      : Error("certificate '" + requirement + "' failed: measured " +
              std::to_string(measured) + ", bound " + std::to_string(bound)),
        requirement_(std::move(requirement)),
        measured_(measured),
        bound_(bound) {}
  const std::string& requirement() const { return requirement_; }
  double measured() const { return measured_; }
  double bound() const { return bound_; }

 private:
  std::string requirement_;
  double measured_;
  double bound_;
};

// Block parameter s must exceed the ingredient degree S; carries S for retry.
// When an ingredient already exceeds s the rest are not built and required()
// is a lower bound on S (exact() is false).
class BlockTooSmall : public Error {
 public:
  BlockTooSmall(std::int64_t s, std::int64_t required, bool exact = true)
      : Error("block size s = " + std::to_string(s) + " must exceed ingredient degree S " +
              (exact ? "= " : ">= ") + std::to_string(required)),
        required_(required),
        exact_(exact) {}
  std::int64_t required() const { return required_; }
  bool exact() const { return exact_; }

 private:
  std::int64_t required_;
  bool exact_;
};

}  // namespace menshov
