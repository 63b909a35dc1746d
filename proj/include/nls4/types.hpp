#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace nls4 {

using Index = Eigen::Index;

template <typename Real>
using Complex = std::complex<Real>;

template <typename Real>
using RealVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

template <typename Real>
using ComplexVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;

template <typename Real>
using RealMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real>
using ComplexMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation was violated.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Two objects that must live on the same radial grid do not.
class GridMismatchError : public Error {
 public:
  using Error::Error;
};

/// A fixed-point iteration stopped contracting.
class ContractionError : public Error {
 public:
  ContractionError(const std::string& what, double factor, int iterations)
      : Error(what), factor_(factor), iterations_(iterations) {}
  double factor() const noexcept { return factor_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double factor_;
  int iterations_;
};

/// A measurement window is polluted by reflection off the outer boundary.
class ContaminationError : public Error {
 public:
  ContaminationError(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// The nonlinearity overflowed or the state stopped being finite.
class BlowupError : public Error {
 public:
  BlowupError(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace nls4
