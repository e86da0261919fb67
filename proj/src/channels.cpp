#include "qdense/channels.hpp"

#include "qdense/simd.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qdense {
namespace {

void check_kraus(const std::vector<cmat>& kraus) {
  if (kraus.empty()) throw DimensionError("channel needs at least one Kraus operator");
  const auto rows = kraus.front().rows(), cols = kraus.front().cols();
  if (rows == 0 || cols == 0) throw DimensionError("empty Kraus operator");
  for (const auto& k : kraus)
    if (k.rows() != rows || k.cols() != cols) throw DimensionError("Kraus operators have inconsistent shapes");
  cmat sum = cmat::Zero(cols, cols);
  for (const auto& k : kraus) sum.noalias() += k.adjoint() * k;
  const cmat id = cmat::Identity(cols, cols);
  const double defect = simd::active().max_abs_diff(sum.data(), id.data(), static_cast<std::size_t>(sum.size()));
  if (defect > tol::kraus) throw InvariantError("Kraus operators are not complete (defect " + std::to_string(defect) + ")");
}

// row-major vectorization: index o * d_in + i
cvec vec_rows(const cmat& k) {
  cvec v(k.size());
  for (Eigen::Index o = 0; o < k.rows(); ++o)
    for (Eigen::Index i = 0; i < k.cols(); ++i) v(o * k.cols() + i) = k(o, i);
  return v;
}

cmat unvec_rows(const cvec& v, std::size_t d_out, std::size_t d_in) {
  cmat k(static_cast<Eigen::Index>(d_out), static_cast<Eigen::Index>(d_in));
  for (Eigen::Index o = 0; o < k.rows(); ++o)
    for (Eigen::Index i = 0; i < k.cols(); ++i) k(o, i) = v(o * k.cols() + i);
  return k;
}

}  // namespace

QuantumChannel::QuantumChannel(std::vector<cmat> kraus) : kraus_(std::move(kraus)) {
  check_kraus(kraus_);
  in_dims_ = {static_cast<std::size_t>(kraus_.front().cols())};
  out_dims_ = {static_cast<std::size_t>(kraus_.front().rows())};
}

QuantumChannel::QuantumChannel(std::vector<cmat> kraus, Dims in_dims, Dims out_dims)
    : kraus_(std::move(kraus)), in_dims_(std::move(in_dims)), out_dims_(std::move(out_dims)) {
  check_kraus(kraus_);
  if (product(in_dims_) != static_cast<std::size_t>(kraus_.front().cols()) ||
      product(out_dims_) != static_cast<std::size_t>(kraus_.front().rows()))
    throw DimensionError("channel factor dims do not match Kraus shape");
}

QuantumChannel QuantumChannel::identity(std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  return QuantumChannel({cmat::Identity(n, n)});
}

QuantumChannel QuantumChannel::unitary(const cmat& u) { return QuantumChannel({u}); }

QuantumChannel QuantumChannel::constant(const DensityMatrix& sigma, std::size_t d_in) {
  Eigen::SelfAdjointEigenSolver<cmat> es(sigma.matrix());
  std::vector<cmat> kraus;
  for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
    const double mu = es.eigenvalues()(j);
    if (mu <= tol::eig_cutoff) continue;
    for (std::size_t i = 0; i < d_in; ++i) {
      cmat k = cmat::Zero(static_cast<Eigen::Index>(sigma.side()), static_cast<Eigen::Index>(d_in));
      k.col(static_cast<Eigen::Index>(i)) = std::sqrt(mu) * es.eigenvectors().col(j);
      kraus.push_back(std::move(k));
    }
  }
  return QuantumChannel(std::move(kraus), {d_in}, sigma.dims());
}

QuantumChannel QuantumChannel::depolarizing(std::size_t d, double p) {
  if (p < 0.0 || p > 1.0 + 1.0 / (static_cast<double>(d * d) - 1.0))
    throw InvariantError("depolarizing parameter out of the completely positive range");
  const auto w = channels::weyl_basis(d);
  const double dd = static_cast<double>(d * d);
  std::vector<cmat> kraus;
  kraus.push_back(std::sqrt(1.0 - p + p / dd) * w[0]);
  if (p > 0.0)
    for (std::size_t i = 1; i < w.size(); ++i) kraus.push_back(std::sqrt(p / dd) * w[i]);
  return QuantumChannel(std::move(kraus));
}

QuantumChannel QuantumChannel::prepare(const cvec& psi, std::size_t d_in) {
  const cvec unit = psi / psi.norm();
  std::vector<cmat> kraus;
  for (std::size_t i = 0; i < d_in; ++i) {
    cmat k = cmat::Zero(unit.size(), static_cast<Eigen::Index>(d_in));
    k.col(static_cast<Eigen::Index>(i)) = unit;
    kraus.push_back(std::move(k));
  }
  return QuantumChannel(std::move(kraus));
}

void StinespringIsometry::validate(double tolerance) const {
  if (static_cast<std::size_t>(v.rows()) != d_out * d_env || static_cast<std::size_t>(v.cols()) != d_in)
    throw DimensionError("isometry shape does not match (d_in, d_out, d_env)");
  const cmat g = v.adjoint() * v;
  const cmat id = cmat::Identity(g.rows(), g.cols());
  if (simd::active().max_abs_diff(g.data(), id.data(), static_cast<std::size_t>(g.size())) > tolerance)
    throw InvariantError("V^dagger V != I");
}

DensityMatrix ChoiMatrix::normalized() const {
  return DensityMatrix::trusted({d_out, d_in}, j / static_cast<double>(d_in));
}

namespace channels {

cmat apply(const QuantumChannel& t, const cmat& rho) {
  if (static_cast<std::size_t>(rho.rows()) != t.d_in() || rho.rows() != rho.cols())
    throw DimensionError("apply: state side " + std::to_string(rho.rows()) + " != d_in " + std::to_string(t.d_in()));
  cmat out = cmat::Zero(static_cast<Eigen::Index>(t.d_out()), static_cast<Eigen::Index>(t.d_out()));
  for (const auto& k : t.kraus()) out.noalias() += k * rho * k.adjoint();
  return out;
}

DensityMatrix apply(const QuantumChannel& t, const DensityMatrix& rho) {
  return DensityMatrix::trusted(t.out_dims(), apply(t, rho.matrix()));
}

cmat apply_adjoint(const QuantumChannel& t, const cmat& x) {
  if (static_cast<std::size_t>(x.rows()) != t.d_out() || x.rows() != x.cols())
    throw DimensionError("apply_adjoint: operator side does not match d_out");
  cmat out = cmat::Zero(static_cast<Eigen::Index>(t.d_in()), static_cast<Eigen::Index>(t.d_in()));
  for (const auto& k : t.kraus()) out.noalias() += k.adjoint() * x * k;
  return out;
}

DensityMatrix apply_local(const QuantumChannel& t, const DensityMatrix& rho, std::size_t factor) {
  const Dims& dims = rho.dims();
  if (factor >= dims.size()) throw DimensionError("apply_local: factor out of range");
  if (dims[factor] != t.d_in())
    throw DimensionError("apply_local: factor dimension " + std::to_string(dims[factor]) + " != d_in " +
                         std::to_string(t.d_in()));
  // bring the acted factor to the front
  std::vector<std::size_t> order{factor};
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (i != factor) order.push_back(i);
  const cmat front = qmath::permute(rho.matrix(), dims, order);
  const std::size_t rest = rho.side() / dims[factor];
  const auto id = cmat::Identity(static_cast<Eigen::Index>(rest), static_cast<Eigen::Index>(rest));
  const auto n_out = static_cast<Eigen::Index>(t.d_out() * rest);
  cmat out = cmat::Zero(n_out, n_out);
  for (const auto& k : t.kraus()) {
    const cmat big = qmath::kron(k, id);
    out.noalias() += big * front * big.adjoint();
  }
  // factor dims after the action, in the moved order, then restore the original order
  Dims moved_dims{t.d_out()};
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (i != factor) moved_dims.push_back(dims[i]);
  std::vector<std::size_t> back(dims.size());
  for (std::size_t i = 0; i < dims.size(); ++i) back[order[i]] = i;
  Dims out_dims = dims;
  out_dims[factor] = t.d_out();
  return DensityMatrix::trusted(std::move(out_dims), qmath::permute(out, moved_dims, back));
}

DensityMatrix apply_on(const QuantumChannel& t, const DensityMatrix& rho, std::span<const std::size_t> factors) {
  const Dims& dims = rho.dims();
  std::vector<bool> used(dims.size(), false);
  std::vector<std::size_t> order;
  std::size_t d_a = 1;
  for (auto f : factors) {
    if (f >= dims.size() || used[f]) throw DimensionError("apply_on: factor index invalid or repeated");
    used[f] = true;
    order.push_back(f);
    d_a *= dims[f];
  }
  if (factors.empty() || d_a != t.d_in()) throw DimensionError("apply_on: acted factors do not match d_in");
  Dims out_dims = t.out_dims();
  std::size_t d_rest = 1;
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (!used[i]) {
      order.push_back(i);
      out_dims.push_back(dims[i]);
      d_rest *= dims[i];
    }
  const cmat moved = qmath::permute(rho.matrix(), dims, order);
  const auto id = cmat::Identity(static_cast<Eigen::Index>(d_rest), static_cast<Eigen::Index>(d_rest));
  const auto n = static_cast<Eigen::Index>(t.d_out() * d_rest);
  cmat out = cmat::Zero(n, n);
  for (const auto& k : t.kraus()) {
    const cmat big = qmath::kron(k, id);
    out.noalias() += big * moved * big.adjoint();
  }
  return DensityMatrix::trusted(std::move(out_dims), std::move(out));
}

ChoiMatrix choi(const QuantumChannel& t) {
  const auto n = static_cast<Eigen::Index>(t.d_in() * t.d_out());
  cmat j = cmat::Zero(n, n);
  for (const auto& k : t.kraus()) {
    const cvec v = vec_rows(k);
    j.noalias() += v * v.adjoint();
  }
  return {t.d_in(), t.d_out(), std::move(j)};
}

double choi_distance(const QuantumChannel& a, const QuantumChannel& b) {
  if (a.d_in() != b.d_in() || a.d_out() != b.d_out()) throw DimensionError("channels have different dimensions");
  const cmat ja = choi(a).j, jb = choi(b).j;
  return simd::active().max_abs_diff(ja.data(), jb.data(), static_cast<std::size_t>(ja.size()));
}

bool channels_equal(const QuantumChannel& a, const QuantumChannel& b) { return choi_distance(a, b) <= tol::choi_equal; }

QuantumChannel canonicalize(const QuantumChannel& t) {
  const ChoiMatrix c = choi(t);
  Eigen::SelfAdjointEigenSolver<cmat> es(qmath::hermitize(c.j));
  if (es.info() != Eigen::Success) throw InvariantError("Choi eigendecomposition failed");
  std::vector<cmat> kraus;
  // descending eigenvalues for a deterministic ordering
  for (Eigen::Index i = es.eigenvalues().size(); i-- > 0;) {
    const double mu = es.eigenvalues()(i);
    if (mu < tol::eig_cutoff) continue;
    kraus.push_back(std::sqrt(mu) * unvec_rows(es.eigenvectors().col(i), t.d_out(), t.d_in()));
  }
  return QuantumChannel(std::move(kraus), t.in_dims(), t.out_dims());
}

StinespringIsometry dilate(const QuantumChannel& t) {
  const QuantumChannel c = canonicalize(t);
  const std::size_t r = c.kraus().size();
  StinespringIsometry s{t.d_in(), t.d_out(), r, cmat(static_cast<Eigen::Index>(t.d_out() * r), static_cast<Eigen::Index>(t.d_in()))};
  for (std::size_t e = 0; e < r; ++e)
    for (std::size_t o = 0; o < t.d_out(); ++o)
      s.v.row(static_cast<Eigen::Index>(o * r + e)) = c.kraus()[e].row(static_cast<Eigen::Index>(o));
  return s;
}

QuantumChannel undilate(const cmat& v, std::size_t d_out, std::size_t d_env) {
  if (static_cast<std::size_t>(v.rows()) != d_out * d_env) throw DimensionError("undilate: rows != d_out * d_env");
  std::vector<cmat> kraus;
  kraus.reserve(d_env);
  for (std::size_t e = 0; e < d_env; ++e) {
    cmat k(static_cast<Eigen::Index>(d_out), v.cols());
    for (std::size_t o = 0; o < d_out; ++o) k.row(static_cast<Eigen::Index>(o)) = v.row(static_cast<Eigen::Index>(o * d_env + e));
    kraus.push_back(std::move(k));
  }
  return QuantumChannel(std::move(kraus));
}

QuantumChannel undilate(const StinespringIsometry& s) {
  s.validate(1e-8);
  return undilate(s.v, s.d_out, s.d_env);
}

cmat unitary_completion(const cmat& isometry) {
  const auto n = isometry.rows(), k = isometry.cols();
  if (k > n) throw DimensionError("unitary_completion: more columns than rows");
  // Orthonormal complement from a full QR of [V | I].
  cmat stacked(n, k + n);
  stacked << isometry, cmat::Identity(n, n);
  Eigen::HouseholderQR<cmat> qr(stacked);
  const cmat q = qr.householderQ();
  cmat u(n, n);
  u.leftCols(k) = isometry;
  // the first k columns of Q span range(V); the rest are orthogonal to it
  u.rightCols(n - k) = q.rightCols(n - k);
  return u;
}

QuantumChannel compose(const QuantumChannel& after, const QuantumChannel& before) {
  if (after.d_in() != before.d_out()) throw DimensionError("compose: dimension mismatch");
  std::vector<cmat> kraus;
  kraus.reserve(after.kraus().size() * before.kraus().size());
  for (const auto& a : after.kraus())
    for (const auto& b : before.kraus()) kraus.push_back(a * b);
  return QuantumChannel(std::move(kraus), before.in_dims(), after.out_dims());
}

QuantumChannel tensor(const QuantumChannel& a, const QuantumChannel& b) {
  std::vector<cmat> kraus;
  kraus.reserve(a.kraus().size() * b.kraus().size());
  for (const auto& ka : a.kraus())
    for (const auto& kb : b.kraus()) kraus.push_back(qmath::kron(ka, kb));
  Dims in = a.in_dims(), out = a.out_dims();
  in.insert(in.end(), b.in_dims().begin(), b.in_dims().end());
  out.insert(out.end(), b.out_dims().begin(), b.out_dims().end());
  return QuantumChannel(std::move(kraus), std::move(in), std::move(out));
}

cmat random_unitary(std::size_t d, std::uint64_t seed) { return qmath::haar_unitary(d, seed); }

DensityMatrix random_state(const Dims& dims, std::size_t rank, std::uint64_t seed) {
  const std::size_t n = product(dims);
  if (rank == 0 || rank > n) throw DimensionError("random_state: rank must be in [1, side]");
  const cmat g = qmath::gaussian_matrix(n, rank, seed);
  cmat rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix::trusted(dims, std::move(rho));
}

QuantumChannel random_channel(std::size_t d_in, std::size_t d_out, std::size_t d_env, std::uint64_t seed) {
  if (d_out * d_env < d_in) throw DimensionError("random_channel: d_out * d_env must be >= d_in");
  return undilate(qmath::haar_isometry(d_out * d_env, d_in, seed), d_out, d_env);
}

std::vector<cmat> weyl_basis(std::size_t d) {
  if (d < 1) throw DimensionError("weyl_basis: d must be positive");
  const auto n = static_cast<Eigen::Index>(d);
  cmat x = cmat::Zero(n, n), z = cmat::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    x((j + 1) % n, j) = 1.0;
    z(j, j) = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(d));
  }
  std::vector<cmat> out;
  out.reserve(d * d);
  cmat xa = cmat::Identity(n, n);
  for (std::size_t a = 0; a < d; ++a) {
    cmat zb = cmat::Identity(n, n);
    for (std::size_t b = 0; b < d; ++b) {
      out.push_back(xa * zb);
      zb = zb * z;
    }
    xa = xa * x;
  }
  return out;
}

}  // namespace channels
}  // namespace qdense
