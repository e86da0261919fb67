#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdense {

using cplx = std::complex<double>;
using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;
using rvec = Eigen::VectorXd;

/// Tensor factor dimensions, outermost factor first (row-major composite index).
using Dims = std::vector<std::size_t>;

inline std::size_t product(const Dims& dims) {
  std::size_t p = 1;
  for (auto d : dims) p *= d;
  return p;
}

// Error hierarchy. The CLI maps each class onto a stable exit code.

/// Malformed input: wrong shapes, unreadable files, bad arguments.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A mathematical invariant does not hold (non-PSD state, non-CPTP map, ...).
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Operands have incompatible dimensions.
struct DimensionError : InvariantError {
  using InvariantError::InvariantError;
};

/// A problem exceeds the configured size limits.
struct SizeGuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An operation's documented precondition failed (e.g. a state is not a program).
struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace tol {
inline constexpr double state = 1e-10;       // Hermiticity, PSD, trace
inline constexpr double pure_norm = 1e-12;   // pure-state normalization
inline constexpr double eig_cutoff = 1e-12;  // 0 log 0 and support detection
inline constexpr double kraus = 1e-10;       // Kraus completeness
inline constexpr double choi_equal = 1e-8;   // channel equality
}  // namespace tol

}  // namespace qdense
