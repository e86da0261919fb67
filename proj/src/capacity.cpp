#include "qdense/capacity.hpp"

#include <array>
#include <cmath>
#include <numeric>

namespace qdense::capacity {
namespace {

const std::array<std::size_t, 1> kFirst{0};

std::vector<std::size_t> complement(std::size_t n, std::span<const std::size_t> a) {
  std::vector<bool> used(n, false);
  for (auto f : a) {
    if (f >= n || used[f]) throw DimensionError("A factor index invalid or repeated");
    used[f] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (!used[i]) out.push_back(i);
  return out;
}

std::size_t dim_of(const Dims& dims, std::span<const std::size_t> factors) {
  std::size_t p = 1;
  for (auto f : factors) p *= dims[f];
  return p;
}

void guard(std::size_t side, const char* what) {
  if (side > max_problem_side)
    throw SizeGuardError(std::string(what) + " side " + std::to_string(side) + " exceeds " +
                         std::to_string(max_problem_side));
}

DensityMatrix power(const DensityMatrix& rho, std::size_t n) {
  if (n == 0) throw InvariantError("need at least one copy");
  guard(static_cast<std::size_t>(std::pow(double(rho.side()), double(n))), "tensor power");
  DensityMatrix out = rho;
  for (std::size_t i = 1; i < n; ++i) out = qmath::tensor(out, rho);
  return out;
}

std::vector<std::size_t> repeated_factors(std::span<const std::size_t> a, std::size_t per_copy, std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < n; ++c)
    for (auto f : a) out.push_back(f + c * per_copy);
  return out;
}

std::size_t ipow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  while (e--) r *= b;
  return r;
}

}  // namespace

double holevo_information(const StateEnsemble& e) {
  e.validate();
  const Dims& dims = e.items.front().dims();
  cmat avg = cmat::Zero(static_cast<Eigen::Index>(e.items.front().side()), static_cast<Eigen::Index>(e.items.front().side()));
  double mean = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e.items[i].dims() != dims) throw DimensionError("ensemble states have different dims");
    avg += e.probabilities[i] * e.items[i].matrix();
    mean += e.probabilities[i] * qmath::von_neumann_entropy(e.items[i]);
  }
  return qmath::von_neumann_entropy(avg) - mean;
}

double dc_mutual_information(const EncodingEnsemble& mu, const DensityMatrix& rho, const QuantumChannel& phi,
                             std::span<const std::size_t> a_factors) {
  mu.validate();
  StateEnsemble signals;
  signals.probabilities = mu.probabilities;
  for (const auto& t : mu.items) {
    if (t.d_out() != phi.d_in()) throw DimensionError("encoding output does not match the channel input");
    signals.items.push_back(channels::apply_on(channels::compose(phi, t), rho, a_factors));
  }
  return holevo_information(signals);
}

double dc_mutual_information(const EncodingEnsemble& mu, const DensityMatrix& rho, const QuantumChannel& phi) {
  return dc_mutual_information(mu, rho, phi, kFirst);
}

double marginal_entropy_b(const DensityMatrix& rho, std::span<const std::size_t> a_factors) {
  const auto b = complement(rho.dims().size(), a_factors);
  if (b.empty()) return 0.0;
  return qmath::von_neumann_entropy(qmath::partial_trace(rho, b));
}

CapacityResult dc_capacity(std::size_t d, const DensityMatrix& rho, std::span<const std::size_t> a_factors,
                           const OptConfig& cfg, const std::vector<StinespringIsometry>& probes) {
  if (d < 1) throw DimensionError("channel dimension must be positive");
  const auto b = complement(rho.dims().size(), a_factors);
  guard(rho.side(), "state");
  guard(d * dim_of(rho.dims(), b), "output state");
  CapacityResult r;
  r.quantity = "dc";
  r.d = d;
  r.dims = rho.dims();
  r.a_factors.assign(a_factors.begin(), a_factors.end());
  r.config = cfg;
  r.report = optimize::min_local_output_entropy(rho, a_factors, d, cfg, probes);
  r.log_d_term = std::log2(double(d));
  r.h_b_term = marginal_entropy_b(rho, a_factors);
  r.min_entropy_term = r.report.value;
  r.value = r.recombined();
  r.converged = r.report.converged;
  return r;
}

CapacityResult dc_capacity(std::size_t d, const DensityMatrix& rho, const OptConfig& cfg) {
  return dc_capacity(d, rho, kFirst, cfg);
}

StinespringIsometry tensor_isometries(const StinespringIsometry& a, const StinespringIsometry& b) {
  StinespringIsometry out{a.d_in * b.d_in, a.d_out * b.d_out, a.d_env * b.d_env, cmat()};
  const cmat k = qmath::kron(a.v, b.v);  // rows (o1 e1)(o2 e2)
  out.v.resize(k.rows(), k.cols());
  for (std::size_t o1 = 0; o1 < a.d_out; ++o1)
    for (std::size_t e1 = 0; e1 < a.d_env; ++e1)
      for (std::size_t o2 = 0; o2 < b.d_out; ++o2)
        for (std::size_t e2 = 0; e2 < b.d_env; ++e2) {
          const std::size_t src = (o1 * a.d_env + e1) * (b.d_out * b.d_env) + o2 * b.d_env + e2;
          const std::size_t dst = (o1 * b.d_out + o2) * out.d_env + e1 * b.d_env + e2;
          out.v.row(static_cast<Eigen::Index>(dst)) = k.row(static_cast<Eigen::Index>(src));
        }
  return out;
}

CapacityResult dc_capacity_block(std::size_t n, std::size_t d, const DensityMatrix& rho,
                                 std::span<const std::size_t> a_factors, const OptConfig& cfg) {
  if (n == 0) throw InvariantError("block length must be positive");
  const auto b = complement(rho.dims().size(), a_factors);
  guard(ipow(rho.side(), n), "block state");
  guard(ipow(d * dim_of(rho.dims(), b), n), "block output state");
  const CapacityResult single = dc_capacity(d, rho, a_factors, cfg);
  if (n == 1) {
    CapacityResult r = single;
    r.quantity = "dc_block";
    return r;
  }
  StinespringIsometry product = single.report.best;
  for (std::size_t i = 1; i < n; ++i) product = tensor_isometries(product, single.report.best);
  const DensityMatrix big = power(rho, n);
  const auto acted = repeated_factors(a_factors, rho.dims().size(), n);
  const std::size_t d_n = ipow(d, n);
  OptConfig inner = cfg;
  if (!inner.d_env) inner.d_env = product.d_env;
  CapacityResult r;
  r.quantity = "dc_block";
  r.d = d;
  r.dims = rho.dims();
  r.a_factors.assign(a_factors.begin(), a_factors.end());
  r.block = n;
  r.config = cfg;
  r.report = optimize::min_local_output_entropy(big, acted, d_n, inner, {product});
  r.log_d_term = std::log2(double(d));
  r.h_b_term = marginal_entropy_b(rho, a_factors);
  r.min_entropy_term = r.report.value / double(n);
  r.value = r.recombined();
  r.converged = r.report.converged;
  return r;
}

CapacityResult dc_capacity_block(std::size_t n, std::size_t d, const DensityMatrix& rho, const OptConfig& cfg) {
  return dc_capacity_block(n, d, rho, kFirst, cfg);
}

CapacityResult dc_capacity_multicopy(std::size_t k, std::size_t d, const DensityMatrix& rho,
                                     std::span<const std::size_t> a_factors, const OptConfig& cfg) {
  if (k == 0) throw InvariantError("copy count must be positive");
  const auto b = complement(rho.dims().size(), a_factors);
  guard(ipow(rho.side(), k), "multicopy state");
  guard(d * ipow(dim_of(rho.dims(), b), k), "multicopy output state");
  const DensityMatrix big = power(rho, k);
  const auto acted = repeated_factors(a_factors, rho.dims().size(), k);
  CapacityResult r = dc_capacity(d, big, acted, cfg);
  r.quantity = "dc_multicopy";
  r.dims = rho.dims();
  r.a_factors.assign(a_factors.begin(), a_factors.end());
  r.copies = k;
  return r;
}

CapacityResult dc_capacity_multicopy(std::size_t k, std::size_t d, const DensityMatrix& rho, const OptConfig& cfg) {
  return dc_capacity_multicopy(k, d, rho, kFirst, cfg);
}

EncodingEnsemble capacity_achieving_ensemble(std::size_t d, const QuantumChannel& t_star) {
  if (t_star.d_out() != d) throw DimensionError("T* output dimension differs from d");
  EncodingEnsemble e;
  for (const auto& w : channels::weyl_basis(d)) {
    const QuantumChannel u({w}, t_star.out_dims(), t_star.out_dims());
    e.items.push_back(channels::compose(u, t_star));
    e.probabilities.push_back(1.0 / double(d * d));
  }
  return e;
}

double coherent_information(const DensityMatrix& rho, std::span<const std::size_t> a_factors) {
  return marginal_entropy_b(rho, a_factors) - qmath::von_neumann_entropy(rho);
}

double coherent_information(const DensityMatrix& rho) { return coherent_information(rho, kFirst); }

ReeBound ree_bound(const DensityMatrix& rho, std::size_t d, const DensityMatrix& sigma,
                   std::span<const std::size_t> a_factors) {
  if (rho.dims() != sigma.dims()) throw DimensionError("ree_bound: rho and sigma dims differ");
  ReeBound r;
  const auto ppt = qmath::is_ppt(sigma, a_factors);
  r.certified = ppt.ppt;
  r.sigma_min_pt_eigenvalue = ppt.min_eigenvalue;
  r.bound = std::log2(double(d)) + qmath::relative_entropy(rho, sigma);
  return r;
}

ReeBound ree_bound(const DensityMatrix& rho, std::size_t d, const DensityMatrix& sigma) {
  return ree_bound(rho, d, sigma, kFirst);
}

AdditivityResult additivity_gap(const DensityMatrix& rho, std::span<const std::size_t> rho_a, std::size_t d1,
                                const DensityMatrix& sigma, std::span<const std::size_t> sigma_a, std::size_t d2,
                                const OptConfig& cfg) {
  const auto rho_b = complement(rho.dims().size(), rho_a);
  const auto sigma_b = complement(sigma.dims().size(), sigma_a);
  guard(rho.side() * sigma.side(), "joint state");
  guard(d1 * d2 * dim_of(rho.dims(), rho_b) * dim_of(sigma.dims(), sigma_b), "joint output state");
  AdditivityResult r;
  r.first = dc_capacity(d1, rho, rho_a, cfg);
  r.second = dc_capacity(d2, sigma, sigma_a, cfg);
  const DensityMatrix joint = qmath::tensor(rho, sigma);
  std::vector<std::size_t> acted(rho_a.begin(), rho_a.end());
  for (auto f : sigma_a) acted.push_back(f + rho.dims().size());
  const auto seed = tensor_isometries(r.first.report.best, r.second.report.best);
  OptConfig inner = cfg;
  if (!inner.d_env) inner.d_env = seed.d_env;
  r.joint = dc_capacity(d1 * d2, joint, acted, inner, {seed});
  r.joint.config = cfg;
  r.gap = r.joint.value - r.first.value - r.second.value;
  return r;
}

AdditivityResult additivity_gap(const DensityMatrix& rho, std::size_t d1, const DensityMatrix& sigma, std::size_t d2,
                                const OptConfig& cfg) {
  return additivity_gap(rho, kFirst, d1, sigma, kFirst, d2, cfg);
}

CapacityResult noisy_dc_capacity(const QuantumChannel& phi, const DensityMatrix& rho,
                                 std::span<const std::size_t> a_factors, std::size_t m, const OptConfig& cfg) {
  const auto b = complement(rho.dims().size(), a_factors);
  guard(rho.side(), "state");
  guard(phi.d_out() * dim_of(rho.dims(), b), "output state");
  CapacityResult r;
  r.quantity = "noisy_dc";
  r.d = phi.d_in();
  r.dims = rho.dims();
  r.a_factors.assign(a_factors.begin(), a_factors.end());
  r.config = cfg;
  r.ensemble = optimize::optimize_ensemble(phi, rho, a_factors, m, cfg);
  const auto& ens = *r.ensemble;
  // split the Holevo quantity into H(average) and the mean signal entropy
  StateEnsemble signals;
  signals.probabilities = ens.ensemble.probabilities;
  for (const auto& t : ens.ensemble.items)
    signals.items.push_back(channels::apply_on(channels::compose(phi, t), rho, a_factors));
  cmat avg = cmat::Zero(static_cast<Eigen::Index>(signals.items[0].side()), static_cast<Eigen::Index>(signals.items[0].side()));
  double mean = 0.0;
  for (std::size_t i = 0; i < signals.size(); ++i) {
    avg += signals.probabilities[i] * signals.items[i].matrix();
    if (signals.probabilities[i] > 0.0) mean += signals.probabilities[i] * qmath::von_neumann_entropy(signals.items[i]);
  }
  r.log_d_term = 0.0;
  r.h_b_term = qmath::von_neumann_entropy(avg);
  r.min_entropy_term = mean;
  r.value = r.recombined();
  r.converged = ens.converged;
  return r;
}

CapacityResult noisy_dc_capacity(const QuantumChannel& phi, const DensityMatrix& rho, std::size_t m,
                                 const OptConfig& cfg) {
  return noisy_dc_capacity(phi, rho, kFirst, m, cfg);
}

NoisyAdditivityResult noisy_additivity_gap(const QuantumChannel& phi1, const DensityMatrix& rho,
                                           const QuantumChannel& phi2, const DensityMatrix& sigma, std::size_t m1,
                                           std::size_t m2, std::size_t m_joint, const OptConfig& cfg) {
  NoisyAdditivityResult r;
  r.first = noisy_dc_capacity(phi1, rho, m1, cfg);
  r.second = noisy_dc_capacity(phi2, sigma, m2, cfg);
  const DensityMatrix joint = qmath::tensor(rho, sigma);
  const std::array<std::size_t, 2> acted{0, rho.dims().size()};
  r.joint = noisy_dc_capacity(channels::tensor(phi1, phi2), joint, acted, m_joint, cfg);
  r.gap = r.joint.value - r.first.value - r.second.value;
  return r;
}

DensityMatrix random_separable(std::size_t da, std::size_t db, std::size_t terms, std::uint64_t seed) {
  if (terms == 0) throw InvariantError("need at least one product term");
  const auto n = static_cast<Eigen::Index>(da * db);
  cmat rho = cmat::Zero(n, n);
  const cmat weights = qmath::gaussian_matrix(terms, 1, seed);
  double z = 0.0;
  std::vector<double> w(terms);
  for (std::size_t t = 0; t < terms; ++t) z += w[t] = std::norm(weights(static_cast<Eigen::Index>(t), 0)) + 1e-3;
  for (std::size_t t = 0; t < terms; ++t) {
    const cvec a = qmath::haar_isometry(da, 1, seed + 7919 * (2 * t + 1)).col(0);
    const cvec b = qmath::haar_isometry(db, 1, seed + 7919 * (2 * t + 2)).col(0);
    const cvec ab = qmath::kron(a, b);
    rho.noalias() += (w[t] / z) * ab * ab.adjoint();
  }
  return DensityMatrix::trusted({da, db}, std::move(rho));
}

std::vector<ScanRow> scan_additivity(std::size_t count, std::size_t d1, std::size_t d2, ScanKind kind,
                                     std::uint64_t seed, const OptConfig& cfg) {
  guard(16, "joint state");
  guard(d1 * d2 * 4, "joint output state");
  std::vector<ScanRow> rows;
  const auto make = [kind](std::uint64_t s) {
    switch (kind) {
      case ScanKind::separable: return random_separable(2, 2, 1 + s % 10, s);
      case ScanKind::pure: return channels::random_state({2, 2}, 1, s);
      default: return channels::random_state({2, 2}, 1 + s % 4, s);
    }
  };
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t s = seed + i;
    const auto rho = make(2 * s), sigma = make(2 * s + 1);
    OptConfig c = cfg;
    c.seed = s;
    const auto g = additivity_gap(rho, d1, sigma, d2, c);
    rows.push_back({s, d1, d2, g.first.value, g.second.value, g.joint.value, g.gap});
  }
  return rows;
}

}  // namespace qdense::capacity
