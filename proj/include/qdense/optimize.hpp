#pragma once

// Minimization of spectral objectives over quantum channels, parameterized by
// Stinespring isometries on the complex Stiefel manifold.
//
// Gradient convention: for real f of complex V, the Euclidean gradient G is
// 2 df/d(conj V), so that df = Re Tr(G^dagger dV).

#include "qdense/ensemble.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>

namespace qdense {

struct OptConfig {
  std::size_t restarts = 20;
  std::size_t max_iterations = 500;
  double gradient_tolerance = 1e-8;
  double armijo = 1e-4;
  std::size_t d_env = 0;  // 0 selects d_in * d_out
  std::uint64_t seed = 0;
  bool probes = true;     // seed descent from structured starting points
  std::size_t ensemble_restarts = 2;  // random starts for ensemble ascent (each is costly)
  std::size_t threads = 0;  // 0 selects hardware concurrency

  void validate() const;
};

struct OptReport {
  double value = 0.0;
  StinespringIsometry best;
  std::vector<double> restart_values;      // probes first, then random restarts
  std::vector<std::string> restart_labels;
  std::size_t best_index = 0;
  bool converged = false;                  // of the winning restart
  std::size_t iterations = 0;              // summed over restarts
  double gradient_norm = 0.0;              // Riemannian, at the winner
  double random_spread = 0.0;              // max - min over random restarts
};

/// Objective over a product of Stiefel manifolds. Writes the Euclidean
/// gradient blocks when `grad` is non-null. Must be safe for concurrent calls.
using BlockObjective = std::function<double(const std::vector<cmat>& point, std::vector<cmat>* grad)>;
using Objective = std::function<double(const cmat& v, cmat* grad)>;

struct DescentResult {
  std::vector<cmat> point;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool step_underflow = false;
  double gradient_norm = 0.0;
};

namespace optimize {

/// Deterministic per-index seed stream used for restarts and sampling.
std::uint64_t derived_seed(std::uint64_t seed, std::size_t index);

/// Riemannian gradient descent with Barzilai-Borwein trial steps, Armijo
/// backtracking and QR retraction. Objective values are non-increasing.
DescentResult riemannian_descent(const BlockObjective& f, std::vector<cmat> start, const OptConfig& cfg,
                                 std::size_t max_iterations);

/// Multi-restart minimization over isometries of shape rows x cols. Each
/// explicit start is descended first; then cfg.restarts Haar-random starts.
OptReport stiefel_minimize(const Objective& f, std::size_t rows, std::size_t cols, const OptConfig& cfg,
                           const std::vector<cmat>& starts = {});

/// Entropy H(Y Y^dagger) and, if requested, the product -(log2 YY^dagger + log2(e)) Y
/// restricted to the support. Uses whichever Gram matrix is smaller.
double entropy_of_gram(const cmat& y, cmat* gy = nullptr);

/// The linear map V -> Y with (T_V (x) id) rho = Y Y^dagger, where T_V is the
/// channel with Stinespring isometry V acting on the named factors of rho,
/// optionally followed by a fixed channel `post`. Output factor order: the
/// channel output (post output dims, or {d_out}) then the untouched factors.
class LocalAction {
 public:
  LocalAction(const DensityMatrix& rho, std::span<const std::size_t> factors, std::size_t d_out, std::size_t d_env,
              std::optional<QuantumChannel> post = std::nullopt);

  cmat forward(const cmat& v) const;
  /// Adjoint of forward: maps dF/dY blocks back to the gradient in V.
  cmat backward(const cmat& gy) const;
  DensityMatrix output(const cmat& v) const;

  std::size_t d_in() const { return d_a_; }
  std::size_t d_out() const { return d_out_; }
  std::size_t d_env() const { return d_env_; }
  const Dims& in_dims() const { return a_dims_; }
  /// Factor dims of the channel output (before the post channel).
  const Dims& channel_out_dims() const { return channel_out_dims_; }
  const Dims& output_dims() const { return output_dims_; }

 private:
  std::size_t d_a_, d_b_, d_out_, d_env_;
  Dims a_dims_, channel_out_dims_, output_dims_;
  std::vector<cmat> m_;  // sqrt(lambda_k) * reshape(v_k) as d_A x d_B
  std::optional<QuantumChannel> post_;
  std::vector<cmat> post_big_;  // F_f (x) I_B
};

/// f(V) = H((T_V (x) id) rho) and its Euclidean gradient.
double entropy_objective(const LocalAction& action, const cmat& v, cmat* grad);
cmat entropy_gradient(const StinespringIsometry& v, const DensityMatrix& rho, std::span<const std::size_t> factors);
cmat entropy_gradient(const StinespringIsometry& v, const DensityMatrix& rho, std::size_t factor);

/// Structured isometries: keep a subset of the acted factors (embedded into a
/// subset of the output factors, remaining outputs in |0>) and send the rest
/// to the environment. Covers the pure-state projection and identity embedding.
std::vector<std::pair<std::string, cmat>> probe_isometries(const Dims& in_dims, const Dims& out_dims,
                                                           std::size_t d_env);

/// Zero-pads (or compresses via the Choi rank) an isometry to environment size d_env.
cmat fit_environment(const StinespringIsometry& v, std::size_t d_env);

/// min over channels T on the named factors of H((T (x) id) rho).
OptReport min_local_output_entropy(const DensityMatrix& rho, std::span<const std::size_t> factors, std::size_t d_out,
                                   const OptConfig& cfg, const std::vector<StinespringIsometry>& extra_probes = {},
                                   std::optional<QuantumChannel> post = std::nullopt);
OptReport min_local_output_entropy(const DensityMatrix& rho, std::size_t factor, std::size_t d_out,
                                   const OptConfig& cfg);

struct EnsembleReport {
  EncodingEnsemble ensemble;                 // encodings T_i (before the noisy channel)
  std::vector<StinespringIsometry> isometries;
  double value = 0.0;                        // Holevo quantity of the signal states
  std::vector<double> history;               // best value after each outer round
  std::string start_label;
  bool converged = false;
};

/// Alternating maximization of I(mu; phi o rho) over m encodings and the
/// simplex. The result is a feasible point, hence a lower bound.
EnsembleReport optimize_ensemble(const QuantumChannel& phi, const DensityMatrix& rho,
                                 std::span<const std::size_t> factors, std::size_t m, const OptConfig& cfg);
EnsembleReport optimize_ensemble(const QuantumChannel& phi, const DensityMatrix& rho, std::size_t m,
                                 const OptConfig& cfg);

}  // namespace optimize
}  // namespace qdense
