#pragma once

#include <stdexcept>
#include <string>

namespace qsc {

/// Numerical tolerances shared by every module.
///
/// Fidelity throughout the toolkit is the square-root fidelity
/// F(rho, sigma) = ||sqrt(rho) sqrt(sigma)||_1, not its square.
struct Tolerances {
  double hermitian = 1e-10;      // max |M - M^dagger| elementwise
  double trace = 1e-10;          // |Tr M - 1|
  double min_eigenvalue = 1e-10; // eigenvalues in [-this, 0) are clipped to 0
  double unit_norm = 1e-10;      // pure-state norm
  double isometry = 1e-9;        // max |V^dagger V - 1| elementwise
  double log_clip = 1e-12;       // eigenvalue floor inside log / negative powers
};

inline constexpr Tolerances kTolerances{};

/// Largest total Hilbert-space dimension any state may carry.
inline constexpr int kMaxStateDim = 64;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unknown or duplicated factor label.
class LabelError : public Error {
 public:
  using Error::Error;
};

/// Shapes or factor dimensions do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input violates a documented precondition (not a valid state, alpha out of range, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Requested problem exceeds the configured dimension budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure did not reach its target; carries the last residual.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace qsc
