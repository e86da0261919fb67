#pragma once

// Finite-dimensional quantum states with explicit tensor-factor structure,
// and the entropic / distance functionals built on them. Logarithms are
// base 2 throughout; entropies are in bits.

#include "qdense/types.hpp"

#include <limits>
#include <optional>
#include <span>

namespace qdense {

class PureState;

/// Hermitian, positive semidefinite, unit-trace operator on the tensor
/// product of the factors in `dims()`.
class DensityMatrix {
 public:
  /// Validates shape, Hermiticity, trace and positivity (tolerance 1e-10).
  /// Throws DimensionError on shape problems, InvariantError otherwise.
  DensityMatrix(Dims dims, cmat entries);

  /// Skips the spectral checks; only the shape is verified. For outputs of
  /// operations that preserve validity by construction. Entries are hermitized.
  static DensityMatrix trusted(Dims dims, cmat entries);

  static DensityMatrix maximally_mixed(Dims dims);
  /// |index><index| in the computational basis.
  static DensityMatrix basis(Dims dims, std::size_t index);

  const Dims& dims() const { return dims_; }
  const cmat& matrix() const { return entries_; }
  std::size_t side() const { return static_cast<std::size_t>(entries_.rows()); }
  std::size_t factor_count() const { return dims_.size(); }
  double purity() const;

 private:
  struct TrustedTag {};
  DensityMatrix(Dims dims, cmat entries, TrustedTag);

  Dims dims_;
  cmat entries_;
};

/// Unit vector with tensor-factor structure.
class PureState {
 public:
  /// Throws InvariantError unless the squared norm is 1 within 1e-12.
  PureState(Dims dims, cvec amplitudes);
  /// Normalizes `amplitudes`; throws InvariantError on the zero vector.
  static PureState normalized(Dims dims, cvec amplitudes);
  static PureState basis(Dims dims, std::size_t index);

  const Dims& dims() const { return dims_; }
  const cvec& amplitudes() const { return amps_; }
  std::size_t size() const { return static_cast<std::size_t>(amps_.size()); }
  DensityMatrix density() const;

 private:
  Dims dims_;
  cvec amps_;
};

// Named states used across the project.
namespace states {
/// (|01> - |10>)/sqrt 2 on dims [2,2].
PureState singlet();
/// Bell states in the order Phi+, Phi-, Psi+, Psi-.
PureState bell(int which);
/// sum_i |ii>/sqrt d on dims [d,d].
PureState max_entangled(std::size_t d);
/// cos(theta)|00> + sin(theta)|11>.
PureState schmidt_qubits(double theta);
/// p |Psi-><Psi-| + (1-p)(I - |Psi-><Psi-|)/3.
DensityMatrix werner(double singlet_fraction);
}  // namespace states

namespace qmath {

struct PptResult {
  bool ppt;
  double min_eigenvalue;
};

struct SchmidtDecomposition {
  rvec coefficients;  // descending, nonnegative
  cmat left;          // columns are the left Schmidt vectors
  cmat right;         // columns are the right Schmidt vectors
};

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);
PureState tensor(const PureState& a, const PureState& b);
cmat kron(const cmat& a, const cmat& b);

/// Reorders factors: factor i of the result is factor `order[i]` of `rho`.
DensityMatrix permute(const DensityMatrix& rho, std::span<const std::size_t> order);
cmat permute(const cmat& m, const Dims& dims, std::span<const std::size_t> order);
cvec permute(const cvec& v, const Dims& dims, std::span<const std::size_t> order);

/// Traces out every factor not in `keep`. Kept factors retain their original
/// relative order. Throws DimensionError on an empty or out-of-range keep set.
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> keep);
cmat partial_trace(const cmat& m, const Dims& dims, std::span<const std::size_t> keep);

/// Eigenvalues of the hermitized matrix, ascending.
rvec eigenvalues(const cmat& hermitian);
/// -sum l log2 l over the eigenvalues, dropping l < 1e-12.
double entropy_from_eigenvalues(const rvec& eigenvalues);
double von_neumann_entropy(const DensityMatrix& rho);
double von_neumann_entropy(const cmat& hermitian);

/// D(rho||sigma) in bits; +infinity when supp(rho) is not inside supp(sigma).
double relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma);

/// Sum of singular values of a Hermitian matrix.
double trace_norm(const cmat& hermitian);
/// ||a - b||_1 (not halved): 2 for orthogonal pure states.
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

/// Transposes the listed factors.
cmat partial_transpose(const DensityMatrix& rho, std::span<const std::size_t> factors);
PptResult is_ppt(const DensityMatrix& rho, std::span<const std::size_t> factors);

/// Schmidt decomposition across the cut (factors in `left` vs the rest).
SchmidtDecomposition schmidt(const PureState& psi, std::span<const std::size_t> left);

/// (m + m^dagger)/2
cmat hermitize(const cmat& m);
/// max |m - m^dagger| entrywise
double hermiticity_defect(const cmat& m);
/// Hilbert-Schmidt inner product Tr(a^dagger b).
cplx hs_inner(const cmat& a, const cmat& b);

/// Haar-random unitary (QR of a complex Gaussian matrix, R-diagonal phase fix).
/// i.i.d. standard complex Gaussian entries (column-major draw order).
cmat gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed);
cmat haar_unitary(std::size_t d, std::uint64_t seed);
/// Haar-random isometry with `cols` orthonormal columns in C^rows.
cmat haar_isometry(std::size_t rows, std::size_t cols, std::uint64_t seed);
/// Q factor of a thin QR with the diagonal of R made real positive.
cmat qr_orthonormalize(const cmat& m);

}  // namespace qmath
}  // namespace qdense
