#pragma once

// Dense-coding capacities of bipartite states, assembled from a heuristic
// minimization of the local output entropy. Every value is a lower bound on
// the true capacity; upper bounds come only from analytic ceilings and the
// relative-entropy bound.

#include "qdense/optimize.hpp"

#include <string>

namespace qdense {

/// Largest matrix side the capacity routines accept.
inline constexpr std::size_t max_problem_side = 256;

struct CapacityResult {
  std::string quantity;          // "dc", "dc_block", "dc_multicopy", "noisy_dc"
  double value = 0.0;            // bits per channel use
  // value = log_d_term + h_b_term - min_entropy_term. For noisy_dc the terms are
  // 0, H(average signal) and the mean signal entropy.
  double log_d_term = 0.0;
  double h_b_term = 0.0;
  double min_entropy_term = 0.0;
  bool lower_bound = true;
  bool converged = false;
  OptReport report;              // inner minimization (empty for noisy_dc)
  std::optional<optimize::EnsembleReport> ensemble;
  // metadata
  std::size_t d = 0;
  Dims dims;
  std::vector<std::size_t> a_factors;
  std::size_t block = 1;
  std::size_t copies = 1;
  OptConfig config;

  double recombined() const { return log_d_term + h_b_term - min_entropy_term; }
};

struct ReeBound {
  double bound = 0.0;            // log2 d + D(rho || sigma), may be +inf
  bool certified = false;        // sigma is PPT across the A|B cut
  double sigma_min_pt_eigenvalue = 0.0;
};

struct AdditivityResult {
  double gap = 0.0;
  CapacityResult joint;
  CapacityResult first;
  CapacityResult second;
};

struct ScanRow {
  std::uint64_t seed = 0;
  std::size_t d1 = 0, d2 = 0;
  double first = 0.0, second = 0.0, joint = 0.0, gap = 0.0;
};

enum class ScanKind { separable, random, pure };

namespace capacity {

double holevo_information(const StateEnsemble& e);

/// Holevo quantity of the signals (phi o T_i (x) id) rho.
double dc_mutual_information(const EncodingEnsemble& mu, const DensityMatrix& rho, const QuantumChannel& phi,
                             std::span<const std::size_t> a_factors);
double dc_mutual_information(const EncodingEnsemble& mu, const DensityMatrix& rho, const QuantumChannel& phi);

/// H(rho_B) for the complement of a_factors.
double marginal_entropy_b(const DensityMatrix& rho, std::span<const std::size_t> a_factors);

CapacityResult dc_capacity(std::size_t d, const DensityMatrix& rho, std::span<const std::size_t> a_factors,
                           const OptConfig& cfg, const std::vector<StinespringIsometry>& probes = {});
CapacityResult dc_capacity(std::size_t d, const DensityMatrix& rho, const OptConfig& cfg);

/// (1/n) [n log d + n H(rho_B) - min over T: A^n -> (C^d)^n of H((T (x) id) rho^n)],
/// seeded with the n-fold product of the single-copy optimizer.
CapacityResult dc_capacity_block(std::size_t n, std::size_t d, const DensityMatrix& rho,
                                 std::span<const std::size_t> a_factors, const OptConfig& cfg);
CapacityResult dc_capacity_block(std::size_t n, std::size_t d, const DensityMatrix& rho, const OptConfig& cfg);

/// DC(d, rho^k) with all k A-parts encoded together.
CapacityResult dc_capacity_multicopy(std::size_t k, std::size_t d, const DensityMatrix& rho,
                                     std::span<const std::size_t> a_factors, const OptConfig& cfg);
CapacityResult dc_capacity_multicopy(std::size_t k, std::size_t d, const DensityMatrix& rho, const OptConfig& cfg);

/// Uniform mixture of W_{a,b} o T_star over the Weyl basis of C^d.
EncodingEnsemble capacity_achieving_ensemble(std::size_t d, const QuantumChannel& t_star);

double coherent_information(const DensityMatrix& rho, std::span<const std::size_t> a_factors);
double coherent_information(const DensityMatrix& rho);

ReeBound ree_bound(const DensityMatrix& rho, std::size_t d, const DensityMatrix& sigma,
                   std::span<const std::size_t> a_factors);
ReeBound ree_bound(const DensityMatrix& rho, std::size_t d, const DensityMatrix& sigma);

/// DC(d1 d2, rho (x) sigma) - DC(d1, rho) - DC(d2, sigma), with the product of
/// the parts' optimizers seeded into the joint problem.
AdditivityResult additivity_gap(const DensityMatrix& rho, std::span<const std::size_t> rho_a, std::size_t d1,
                                const DensityMatrix& sigma, std::span<const std::size_t> sigma_a, std::size_t d2,
                                const OptConfig& cfg);
AdditivityResult additivity_gap(const DensityMatrix& rho, std::size_t d1, const DensityMatrix& sigma, std::size_t d2,
                                const OptConfig& cfg);

/// Lower bound on DC(phi, rho) from an optimized m-element encoding ensemble.
CapacityResult noisy_dc_capacity(const QuantumChannel& phi, const DensityMatrix& rho,
                                 std::span<const std::size_t> a_factors, std::size_t m, const OptConfig& cfg);
CapacityResult noisy_dc_capacity(const QuantumChannel& phi, const DensityMatrix& rho, std::size_t m,
                                 const OptConfig& cfg);

/// Superadditivity gaps for noisy channels: DC(phi1 (x) phi2, rho (x) sigma) against the parts.
struct NoisyAdditivityResult {
  double gap = 0.0;
  CapacityResult joint, first, second;
};
NoisyAdditivityResult noisy_additivity_gap(const QuantumChannel& phi1, const DensityMatrix& rho,
                                           const QuantumChannel& phi2, const DensityMatrix& sigma, std::size_t m1,
                                           std::size_t m2, std::size_t m_joint, const OptConfig& cfg);

/// Isometry of T1 (x) T2 with rows ordered (o1 o2, e1 e2).
StinespringIsometry tensor_isometries(const StinespringIsometry& a, const StinespringIsometry& b);

/// Mixture of at most `terms` product pure states on C^da (x) C^db (a generator,
/// not a separability test).
DensityMatrix random_separable(std::size_t da, std::size_t db, std::size_t terms, std::uint64_t seed);

/// Additivity gaps over random two-qubit pairs; instance i uses seed + i.
std::vector<ScanRow> scan_additivity(std::size_t count, std::size_t d1, std::size_t d2, ScanKind kind,
                                     std::uint64_t seed, const OptConfig& cfg);

}  // namespace capacity
}  // namespace qdense
