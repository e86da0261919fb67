#include "qdense/qmath.hpp"

#include "qdense/simd.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace qdense {
namespace {

std::string dims_string(const Dims& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
  os << ']';
  return os.str();
}

void check_shape(const Dims& dims, const cmat& m) {
  if (dims.empty()) throw DimensionError("empty factor list");
  for (auto d : dims)
    if (d == 0) throw DimensionError("zero factor dimension in " + dims_string(dims));
  if (m.rows() != m.cols()) throw DimensionError("matrix is not square");
  if (static_cast<std::size_t>(m.rows()) != product(dims))
    throw DimensionError("matrix side " + std::to_string(m.rows()) + " does not match dims " + dims_string(dims));
}

// linear index -> index after reordering factors so that new factor i is old factor order[i]
std::vector<std::size_t> permutation_map(const Dims& dims, std::span<const std::size_t> order) {
  const std::size_t n = dims.size();
  if (order.size() != n) throw DimensionError("permutation length mismatch");
  std::vector<bool> seen(n, false);
  for (auto o : order) {
    if (o >= n || seen[o]) throw DimensionError("invalid factor permutation");
    seen[o] = true;
  }
  // stride of each old factor in the new layout
  std::vector<std::size_t> new_stride(n);
  std::size_t s = 1;
  for (std::size_t i = n; i-- > 0;) {
    new_stride[order[i]] = s;
    s *= dims[order[i]];
  }
  const std::size_t total = product(dims);
  std::vector<std::size_t> map(total);
  std::vector<std::size_t> digit(n, 0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t target = 0;
    for (std::size_t f = 0; f < n; ++f) target += digit[f] * new_stride[f];
    map[idx] = target;
    for (std::size_t f = n; f-- > 0;) {
      if (++digit[f] < dims[f]) break;
      digit[f] = 0;
    }
  }
  return map;
}

std::vector<std::size_t> complement(std::size_t n, std::span<const std::size_t> keep) {
  std::vector<bool> in(n, false);
  for (auto k : keep) {
    if (k >= n) throw DimensionError("factor index " + std::to_string(k) + " out of range");
    if (in[k]) throw DimensionError("duplicate factor index");
    in[k] = true;
  }
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i)
    if (!in[i]) rest.push_back(i);
  return rest;
}

}  // namespace

// ---------------------------------------------------------------------------

DensityMatrix::DensityMatrix(Dims dims, cmat entries, TrustedTag) : dims_(std::move(dims)), entries_(std::move(entries)) {
  check_shape(dims_, entries_);
  entries_ = qmath::hermitize(entries_);
}

DensityMatrix::DensityMatrix(Dims dims, cmat entries) : dims_(std::move(dims)), entries_(std::move(entries)) {
  check_shape(dims_, entries_);
  const double herm = qmath::hermiticity_defect(entries_);
  if (herm > tol::state) throw InvariantError("density matrix is not Hermitian (defect " + std::to_string(herm) + ")");
  const double tr = entries_.trace().real();
  if (std::abs(tr - 1.0) > tol::state) throw InvariantError("density matrix trace is " + std::to_string(tr));
  entries_ = qmath::hermitize(entries_);
  const double min_eig = qmath::eigenvalues(entries_).minCoeff();
  if (min_eig < -tol::state)
    throw InvariantError("density matrix has negative eigenvalue " + std::to_string(min_eig));
}

DensityMatrix DensityMatrix::trusted(Dims dims, cmat entries) {
  return DensityMatrix(std::move(dims), std::move(entries), TrustedTag{});
}

DensityMatrix DensityMatrix::maximally_mixed(Dims dims) {
  const auto n = static_cast<Eigen::Index>(product(dims));
  return trusted(std::move(dims), cmat::Identity(n, n) / static_cast<double>(n));
}

DensityMatrix DensityMatrix::basis(Dims dims, std::size_t index) {
  const auto n = static_cast<Eigen::Index>(product(dims));
  if (index >= static_cast<std::size_t>(n)) throw DimensionError("basis index out of range");
  cmat m = cmat::Zero(n, n);
  m(static_cast<Eigen::Index>(index), static_cast<Eigen::Index>(index)) = 1.0;
  return trusted(std::move(dims), std::move(m));
}

double DensityMatrix::purity() const {
  return simd::active().norm_sq(entries_.data(), static_cast<std::size_t>(entries_.size()));
}

PureState::PureState(Dims dims, cvec amplitudes) : dims_(std::move(dims)), amps_(std::move(amplitudes)) {
  if (dims_.empty()) throw DimensionError("empty factor list");
  if (static_cast<std::size_t>(amps_.size()) != product(dims_)) throw DimensionError("amplitude count does not match dims");
  const double n2 = simd::active().norm_sq(amps_.data(), static_cast<std::size_t>(amps_.size()));
  if (std::abs(n2 - 1.0) > tol::pure_norm) throw InvariantError("pure state norm^2 is " + std::to_string(n2));
}

PureState PureState::normalized(Dims dims, cvec amplitudes) {
  const double n = amplitudes.norm();
  if (n == 0.0) throw InvariantError("cannot normalize the zero vector");
  return PureState(std::move(dims), amplitudes / n);
}

PureState PureState::basis(Dims dims, std::size_t index) {
  const auto n = static_cast<Eigen::Index>(product(dims));
  if (index >= static_cast<std::size_t>(n)) throw DimensionError("basis index out of range");
  cvec v = cvec::Zero(n);
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return PureState(std::move(dims), std::move(v));
}

DensityMatrix PureState::density() const { return DensityMatrix::trusted(dims_, amps_ * amps_.adjoint()); }

// ---------------------------------------------------------------------------

namespace states {

PureState singlet() { return bell(3); }

PureState bell(int which) {
  const double r = 1.0 / std::sqrt(2.0);
  cvec v = cvec::Zero(4);
  switch (which) {
    case 0: v << r, 0, 0, r; break;
    case 1: v << r, 0, 0, -r; break;
    case 2: v << 0, r, r, 0; break;
    case 3: v << 0, r, -r, 0; break;
    default: throw std::invalid_argument("bell index must be 0..3");
  }
  return PureState({2, 2}, v);
}

PureState max_entangled(std::size_t d) {
  cvec v = cvec::Zero(static_cast<Eigen::Index>(d * d));
  for (std::size_t i = 0; i < d; ++i) v(static_cast<Eigen::Index>(i * d + i)) = 1.0 / std::sqrt(static_cast<double>(d));
  return PureState({d, d}, v);
}

PureState schmidt_qubits(double theta) {
  cvec v = cvec::Zero(4);
  v(0) = std::cos(theta);
  v(3) = std::sin(theta);
  return PureState::normalized({2, 2}, v);
}

DensityMatrix werner(double singlet_fraction) {
  const cmat p = singlet().density().matrix();
  const cmat rest = cmat::Identity(4, 4) - p;
  return DensityMatrix({2, 2}, singlet_fraction * p + (1.0 - singlet_fraction) / 3.0 * rest);
}

}  // namespace states

// ---------------------------------------------------------------------------

namespace qmath {

cmat kron(const cmat& a, const cmat& b) {
  const auto& k = simd::active();
  cmat out(a.rows() * b.rows(), a.cols() * b.cols());
  const auto br = static_cast<std::size_t>(b.rows());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index c = 0; c < b.cols(); ++c) {
      cplx* col = out.col(j * b.cols() + c).data();
      for (Eigen::Index i = 0; i < a.rows(); ++i) k.cscale(a(i, j), b.col(c).data(), col + i * b.rows(), br);
    }
  return out;
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  Dims dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  return DensityMatrix::trusted(std::move(dims), kron(a.matrix(), b.matrix()));
}

PureState tensor(const PureState& a, const PureState& b) {
  Dims dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  cvec v(a.amplitudes().size() * b.amplitudes().size());
  for (Eigen::Index i = 0; i < a.amplitudes().size(); ++i)
    v.segment(i * b.amplitudes().size(), b.amplitudes().size()) = a.amplitudes()(i) * b.amplitudes();
  return PureState::normalized(std::move(dims), std::move(v));
}

cmat permute(const cmat& m, const Dims& dims, std::span<const std::size_t> order) {
  if (static_cast<std::size_t>(m.rows()) != product(dims) || m.rows() != m.cols())
    throw DimensionError("permute: matrix does not match dims");
  const auto map = permutation_map(dims, order);
  cmat out(m.rows(), m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      out(static_cast<Eigen::Index>(map[r]), static_cast<Eigen::Index>(map[c])) = m(r, c);
  return out;
}

cvec permute(const cvec& v, const Dims& dims, std::span<const std::size_t> order) {
  if (static_cast<std::size_t>(v.size()) != product(dims)) throw DimensionError("permute: vector does not match dims");
  const auto map = permutation_map(dims, order);
  cvec out(v.size());
  for (Eigen::Index r = 0; r < v.size(); ++r) out(static_cast<Eigen::Index>(map[r])) = v(r);
  return out;
}

DensityMatrix permute(const DensityMatrix& rho, std::span<const std::size_t> order) {
  Dims dims(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i] >= rho.dims().size()) throw DimensionError("permute: factor out of range");
    dims[i] = rho.dims()[order[i]];
  }
  return DensityMatrix::trusted(std::move(dims), permute(rho.matrix(), rho.dims(), order));
}

cmat partial_trace(const cmat& m, const Dims& dims, std::span<const std::size_t> keep) {
  if (keep.empty()) throw DimensionError("partial_trace: keep set is empty");
  std::vector<std::size_t> sorted_keep(keep.begin(), keep.end());
  std::sort(sorted_keep.begin(), sorted_keep.end());
  const auto traced = complement(dims.size(), sorted_keep);
  // traced factors first, kept factors (original order) last: index = t * dk + k
  std::vector<std::size_t> order = traced;
  order.insert(order.end(), sorted_keep.begin(), sorted_keep.end());
  const cmat moved = traced.empty() ? m : permute(m, dims, order);
  std::size_t dk = 1, dt = 1;
  for (auto k : sorted_keep) dk *= dims[k];
  for (auto t : traced) dt *= dims[t];
  const auto& kern = simd::active();
  cmat out = cmat::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
  const auto n = static_cast<Eigen::Index>(dk);
  for (std::size_t t = 0; t < dt; ++t) {
    const auto off = static_cast<Eigen::Index>(t * dk);
    for (Eigen::Index c = 0; c < n; ++c) kern.caxpy(1.0, moved.col(off + c).data() + off, out.col(c).data(), dk);
  }
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> keep) {
  std::vector<std::size_t> sorted_keep(keep.begin(), keep.end());
  std::sort(sorted_keep.begin(), sorted_keep.end());
  for (auto k : sorted_keep)
    if (k >= rho.dims().size()) throw DimensionError("partial_trace: factor " + std::to_string(k) + " out of range");
  Dims dims;
  for (auto k : sorted_keep) dims.push_back(rho.dims()[k]);
  return DensityMatrix::trusted(std::move(dims), partial_trace(rho.matrix(), rho.dims(), sorted_keep));
}

cmat hermitize(const cmat& m) { return (m + m.adjoint()) * 0.5; }

double hermiticity_defect(const cmat& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  const cmat adj = m.adjoint();
  return simd::active().max_abs_diff(m.data(), adj.data(), static_cast<std::size_t>(m.size()));
}

cplx hs_inner(const cmat& a, const cmat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("hs_inner: shape mismatch");
  return simd::active().cdotc(a.data(), b.data(), static_cast<std::size_t>(a.size()));
}

rvec eigenvalues(const cmat& hermitian) {
  Eigen::SelfAdjointEigenSolver<cmat> es(hermitize(hermitian), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw InvariantError("eigendecomposition failed");
  return es.eigenvalues();
}

double entropy_from_eigenvalues(const rvec& eigenvalues) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    const double l = eigenvalues(i);
    if (l > tol::eig_cutoff) h -= l * std::log2(l);
  }
  return std::max(h, 0.0);
}

double von_neumann_entropy(const cmat& hermitian) { return entropy_from_eigenvalues(eigenvalues(hermitian)); }

double von_neumann_entropy(const DensityMatrix& rho) { return von_neumann_entropy(rho.matrix()); }

double relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dims() != sigma.dims()) throw DimensionError("relative_entropy: dims mismatch");
  Eigen::SelfAdjointEigenSolver<cmat> er(rho.matrix());
  Eigen::SelfAdjointEigenSolver<cmat> es(sigma.matrix());
  if (er.info() != Eigen::Success || es.info() != Eigen::Success) throw InvariantError("eigendecomposition failed");
  const rvec& lr = er.eigenvalues();
  const rvec& ls = es.eigenvalues();
  // weight of rho on each eigenvector of sigma
  const cmat overlap = es.eigenvectors().adjoint() * er.eigenvectors();
  double cross = 0.0;
  for (Eigen::Index j = 0; j < ls.size(); ++j) {
    double w = 0.0;
    for (Eigen::Index i = 0; i < lr.size(); ++i)
      if (lr(i) > tol::eig_cutoff) w += lr(i) * std::norm(overlap(j, i));
    if (ls(j) <= tol::eig_cutoff) {
      if (w > tol::eig_cutoff) return std::numeric_limits<double>::infinity();
      continue;
    }
    cross += w * std::log2(ls(j));
  }
  const double d = -entropy_from_eigenvalues(lr) - cross;
  return std::max(d, 0.0);
}

double trace_norm(const cmat& hermitian) { return eigenvalues(hermitian).cwiseAbs().sum(); }

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dims() != b.dims()) throw DimensionError("trace_distance: dims mismatch");
  return trace_norm(a.matrix() - b.matrix());
}

cmat partial_transpose(const DensityMatrix& rho, std::span<const std::size_t> factors) {
  const Dims& dims = rho.dims();
  std::vector<bool> flip(dims.size(), false);
  for (auto f : factors) {
    if (f >= dims.size()) throw DimensionError("partial_transpose: factor out of range");
    flip[f] = true;
  }
  const auto n = static_cast<Eigen::Index>(rho.side());
  cmat out(n, n);
  std::vector<std::size_t> rd(dims.size()), cd(dims.size());
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) {
      // decompose, swap digits of flipped factors, recompose
      std::size_t rr = static_cast<std::size_t>(r), cc = static_cast<std::size_t>(c);
      for (std::size_t f = dims.size(); f-- > 0;) {
        rd[f] = rr % dims[f];
        rr /= dims[f];
        cd[f] = cc % dims[f];
        cc /= dims[f];
      }
      std::size_t nr = 0, nc = 0;
      for (std::size_t f = 0; f < dims.size(); ++f) {
        nr = nr * dims[f] + (flip[f] ? cd[f] : rd[f]);
        nc = nc * dims[f] + (flip[f] ? rd[f] : cd[f]);
      }
      out(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nc)) = rho.matrix()(r, c);
    }
  return out;
}

PptResult is_ppt(const DensityMatrix& rho, std::span<const std::size_t> factors) {
  const double m = eigenvalues(partial_transpose(rho, factors)).minCoeff();
  return {m >= -tol::state, m};
}

SchmidtDecomposition schmidt(const PureState& psi, std::span<const std::size_t> left) {
  std::vector<std::size_t> l(left.begin(), left.end());
  std::sort(l.begin(), l.end());
  const auto right = complement(psi.dims().size(), l);
  if (l.empty() || right.empty()) throw DimensionError("schmidt: cut must leave both sides nonempty");
  std::vector<std::size_t> order = l;
  order.insert(order.end(), right.begin(), right.end());
  const cvec v = permute(psi.amplitudes(), psi.dims(), order);
  std::size_t dl = 1;
  for (auto f : l) dl *= psi.dims()[f];
  const std::size_t dr = psi.size() / dl;
  cmat m(static_cast<Eigen::Index>(dl), static_cast<Eigen::Index>(dr));
  for (std::size_t i = 0; i < dl; ++i)
    for (std::size_t j = 0; j < dr; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v(static_cast<Eigen::Index>(i * dr + j));
  Eigen::JacobiSVD<cmat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.singularValues(), svd.matrixU(), svd.matrixV().conjugate()};
}

cmat qr_orthonormalize(const cmat& m) {
  Eigen::HouseholderQR<cmat> qr(m);
  cmat q = qr.householderQ() * cmat::Identity(m.rows(), m.cols());
  const cmat& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const cplx d = r(j, j);
    const double a = std::abs(d);
    if (a > 0.0) q.col(j) *= d / a;
  }
  return q;
}

cmat gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  cmat g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index c = 0; c < g.cols(); ++c)
    for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = cplx(normal(gen), normal(gen));
  return g;
}

cmat haar_isometry(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (cols > rows) throw DimensionError("isometry needs cols <= rows");
  return qr_orthonormalize(gaussian_matrix(rows, cols, seed));
}

cmat haar_unitary(std::size_t d, std::uint64_t seed) { return haar_isometry(d, d, seed); }

}  // namespace qmath
}  // namespace qdense
