#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qhahn {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidBase : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

/// A (b;q)_k factor of a basic hypergeometric series hit zero before termination.
class DenominatorVanishes : public Error {
 public:
  DenominatorVanishes(std::size_t parameter, std::size_t index)
      : Error("denominator parameter " + std::to_string(parameter) +
              " vanishes at summation index " + std::to_string(index)),
        parameter_(parameter),
        index_(index) {}
  std::size_t parameter() const noexcept { return parameter_; }
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t parameter_;
  std::size_t index_;
};

class NonTerminating : public Error {
 public:
  using Error::Error;
};

/// Unitary ladder matrices were requested but r_n^2 <= 0 at some n.
class NonUnitaryRepresentation : public Error {
 public:
  NonUnitaryRepresentation(int n, double rsq)
      : Error("representation is not unitary: r_n^2 = " + std::to_string(rsq) +
              " <= 0 at n = " + std::to_string(n)),
        n_(n) {}
  int first_offending_index() const noexcept { return n_; }

 private:
  int n_;
};

class IncompatibleParameters : public Error {
 public:
  using Error::Error;
};

class SectorOutOfRange : public Error {
 public:
  using Error::Error;
};

class DegenerateSpectrum : public Error {
 public:
  using Error::Error;
};

/// An operation that needs orthonormal ladder bases got a raw-mode input.
class RequiresUnitary : public Error {
 public:
  using Error::Error;
};

class ZeroSubdiagonal : public Error {
 public:
  explicit ZeroSubdiagonal(int n)
      : Error("recurrence coefficient W_" + std::to_string(n) + " vanishes"), n_(n) {}
  int index() const noexcept { return n_; }

 private:
  int n_;
};

}  // namespace qhahn
