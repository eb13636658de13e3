#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace signpos {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidGeometry : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class BasisMismatch : public Error {
 public:
  using Error::Error;
};

/// Raised when an internal invariant is broken (non-Hermitian IR, out-of-sector matvec).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class InvalidProtocol : public Error {
 public:
  using Error::Error;
};

class UnsupportedBoundary : public Error {
 public:
  using Error::Error;
};

class UnsupportedParity : public Error {
 public:
  using Error::Error;
};

class TooLarge : public Error {
 public:
  using Error::Error;
};

class NotRealError : public Error {
 public:
  NotRealError(const std::string& what, double residual) : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> best_residuals)
      : Error(what), best_residuals_(std::move(best_residuals)) {}
  const std::vector<double>& best_residuals() const { return best_residuals_; }

 private:
  std::vector<double> best_residuals_;
};

/// Exhaustive enumeration refused because it would exceed the candidate cap.
class CandidateCapExceeded : public Error {
 public:
  CandidateCapExceeded(const std::string& what, unsigned long long count)
      : Error(what), count_(count) {}
  unsigned long long count() const { return count_; }

 private:
  unsigned long long count_;
};

}  // namespace signpos
