#pragma once

// Quantum channels (CPTP maps) in Kraus form, with Choi and Stinespring
// conversions, Haar sampling and the Weyl (shift-and-clock) unitary basis.
//
// Conventions:
//  * Choi operator: J = sum_k |K_k>><<K_k| on out (x) in, where
//    |K>> = sum_{o,i} K[o,i] |o>|i>. Equivalently J = (T (x) id)(|W><W|) with
//    |W> = sum_i |i>|i>. Unnormalized: Tr_out J = I_in.
//  * Stinespring isometry V : in -> out (x) env with row index o * d_env + e,
//    so the Kraus operator for environment state e is rows {o * d_env + e}.

#include "qdense/qmath.hpp"

namespace qdense {

class QuantumChannel {
 public:
  /// Throws InvariantError unless sum K^dagger K = I within 1e-10, and
  /// DimensionError on ragged or empty Kraus lists.
  explicit QuantumChannel(std::vector<cmat> kraus);
  /// Same, with explicit tensor structure on input and output.
  QuantumChannel(std::vector<cmat> kraus, Dims in_dims, Dims out_dims);

  static QuantumChannel identity(std::size_t d);
  static QuantumChannel unitary(const cmat& u);
  /// X -> Tr(X) sigma for inputs of dimension d_in.
  static QuantumChannel constant(const DensityMatrix& sigma, std::size_t d_in);
  /// X -> (1-p) X + p Tr(X) I/d.
  static QuantumChannel depolarizing(std::size_t d, double p);
  /// X -> Tr(X) |psi><psi|: discards the input and prepares a pure state.
  static QuantumChannel prepare(const cvec& psi, std::size_t d_in);

  std::size_t d_in() const { return product(in_dims_); }
  std::size_t d_out() const { return product(out_dims_); }
  const Dims& in_dims() const { return in_dims_; }
  const Dims& out_dims() const { return out_dims_; }
  const std::vector<cmat>& kraus() const { return kraus_; }

 private:
  std::vector<cmat> kraus_;
  Dims in_dims_;
  Dims out_dims_;
};

struct StinespringIsometry {
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  std::size_t d_env = 0;
  cmat v;  // (d_out * d_env) x d_in

  /// Throws InvariantError unless V^dagger V = I within `tolerance`.
  void validate(double tolerance = 1e-10) const;
};

struct ChoiMatrix {
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  cmat j;  // (d_out * d_in) square, trace d_in

  /// J / d_in as a state on dims [d_out, d_in].
  DensityMatrix normalized() const;
};

namespace channels {

cmat apply(const QuantumChannel& t, const cmat& rho);
DensityMatrix apply(const QuantumChannel& t, const DensityMatrix& rho);
/// Heisenberg picture: X -> sum K^dagger X K.
cmat apply_adjoint(const QuantumChannel& t, const cmat& x);

/// (T (x) id) on the named factor of a multipartite state.
DensityMatrix apply_local(const QuantumChannel& t, const DensityMatrix& rho, std::size_t factor);
/// T acting jointly on the listed factors (in that order). The result lists
/// the channel's output factors first, then the untouched factors in order.
DensityMatrix apply_on(const QuantumChannel& t, const DensityMatrix& rho, std::span<const std::size_t> factors);

ChoiMatrix choi(const QuantumChannel& t);
/// Max entrywise difference of the Choi operators.
double choi_distance(const QuantumChannel& a, const QuantumChannel& b);
/// Choi distance <= 1e-8. Throws DimensionError on shape mismatch.
bool channels_equal(const QuantumChannel& a, const QuantumChannel& b);

/// Minimal Kraus family from the Choi eigendecomposition (eigenvalues < 1e-12 dropped).
QuantumChannel canonicalize(const QuantumChannel& t);

StinespringIsometry dilate(const QuantumChannel& t);
QuantumChannel undilate(const StinespringIsometry& v);
/// Channel whose Kraus operators are the d_env row blocks of an isometry.
QuantumChannel undilate(const cmat& v, std::size_t d_out, std::size_t d_env);
/// Extends an isometry (n x k) to a unitary (n x n) whose first k columns are V.
cmat unitary_completion(const cmat& isometry);

QuantumChannel compose(const QuantumChannel& after, const QuantumChannel& before);
QuantumChannel tensor(const QuantumChannel& a, const QuantumChannel& b);

cmat random_unitary(std::size_t d, std::uint64_t seed);
/// Normalized Wishart state of the given rank.
DensityMatrix random_state(const Dims& dims, std::size_t rank, std::uint64_t seed);
/// Undilation of a Haar-random isometry C^d_in -> C^(d_out d_env).
QuantumChannel random_channel(std::size_t d_in, std::size_t d_out, std::size_t d_env, std::uint64_t seed);

/// W_{a,b} = X^a Z^b with X|j> = |j+1 mod d>, Z|j> = w^j |j>, w = exp(2 pi i/d);
/// entry a * d + b. Pairwise Tr(W_i^dagger W_j) = d delta_ij.
std::vector<cmat> weyl_basis(std::size_t d);

}  // namespace channels
}  // namespace qdense
