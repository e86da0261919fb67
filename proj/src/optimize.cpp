#include "qdense/optimize.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

namespace qdense {

void OptConfig::validate() const {
  if (max_iterations == 0) throw InvariantError("max_iterations must be positive");
  if (!(gradient_tolerance > 0.0)) throw InvariantError("gradient_tolerance must be positive");
  if (!(armijo > 0.0 && armijo < 1.0)) throw InvariantError("Armijo constant must lie in (0, 1)");
}

namespace optimize {
namespace {

constexpr double kLog2e = std::numbers::log2e;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t restart_seed(std::uint64_t seed, std::size_t r) { return splitmix(seed * 1000003ULL + r); }

}  // namespace

std::uint64_t derived_seed(std::uint64_t seed, std::size_t index) { return restart_seed(seed, index); }

namespace {

template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double inner(const std::vector<cmat>& a, const std::vector<cmat>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i].conjugate().cwiseProduct(b[i])).sum().real();
  return s;
}

std::vector<cmat> project(const std::vector<cmat>& v, const std::vector<cmat>& g) {
  std::vector<cmat> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const cmat vg = v[i].adjoint() * g[i];
    r[i] = g[i] - v[i] * (0.5 * (vg + vg.adjoint()));
  }
  return r;
}

std::vector<cmat> retract(const std::vector<cmat>& v, const std::vector<cmat>& dir, double t) {
  std::vector<cmat> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = qmath::qr_orthonormalize(v[i] - t * dir[i]);
  return out;
}

double g_of(double lambda) { return -(std::log2(lambda) + kLog2e); }

struct Labeled {
  std::string label;
  std::vector<cmat> start;
};

struct RestartOutcome {
  std::vector<DescentResult> results;
  std::vector<std::string> labels;
  std::size_t best = 0;
};

// Runs descent from every start, then picks the lowest value (lowest index on ties).
RestartOutcome run_restarts(const BlockObjective& f, std::vector<Labeled> starts, const OptConfig& cfg) {
  if (starts.empty()) throw InvariantError("optimizer has no starting points (restarts = 0 and no probes)");
  RestartOutcome out;
  out.results.resize(starts.size());
  parallel_for(starts.size(), cfg.threads, [&](std::size_t i) {
    out.results[i] = riemannian_descent(f, std::move(starts[i].start), cfg, cfg.max_iterations);
  });
  for (auto& s : starts) out.labels.push_back(std::move(s.label));
  for (std::size_t i = 1; i < out.results.size(); ++i)
    if (out.results[i].value < out.results[out.best].value) out.best = i;
  return out;
}

OptReport to_report(const RestartOutcome& r) {
  OptReport rep;
  rep.best_index = r.best;
  const auto& win = r.results[r.best];
  rep.value = win.value;
  rep.converged = win.converged;
  rep.gradient_norm = win.gradient_norm;
  rep.best = {static_cast<std::size_t>(win.point[0].cols()), static_cast<std::size_t>(win.point[0].rows()), 1,
              win.point[0]};
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < r.results.size(); ++i) {
    rep.restart_values.push_back(r.results[i].value);
    rep.restart_labels.push_back(r.labels[i]);
    rep.iterations += r.results[i].iterations;
    if (r.labels[i].rfind("random", 0) == 0) {
      lo = std::min(lo, r.results[i].value);
      hi = std::max(hi, r.results[i].value);
    }
  }
  rep.random_spread = hi >= lo ? hi - lo : 0.0;
  return rep;
}

// Index of a multi-index within dims (row-major).
std::size_t flat_index(const std::vector<std::size_t>& idx, const Dims& dims) {
  std::size_t f = 0;
  for (std::size_t i = 0; i < dims.size(); ++i) f = f * dims[i] + idx[i];
  return f;
}

std::vector<std::size_t> unflatten(std::size_t f, const Dims& dims) {
  std::vector<std::size_t> idx(dims.size());
  for (std::size_t i = dims.size(); i-- > 0;) {
    idx[i] = f % dims[i];
    f /= dims[i];
  }
  return idx;
}

Dims select(const Dims& dims, unsigned mask) {
  Dims out;
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (mask & (1u << i)) out.push_back(dims[i]);
  return out;
}

std::string mask_label(unsigned mask, std::size_t n) {
  std::string s = "{";
  bool first = true;
  for (std::size_t i = 0; i < n; ++i)
    if (mask & (1u << i)) {
      if (!first) s += ",";
      s += std::to_string(i);
      first = false;
    }
  return s + "}";
}

}  // namespace

DescentResult riemannian_descent(const BlockObjective& f, std::vector<cmat> start, const OptConfig& cfg,
                                 std::size_t max_iterations) {
  DescentResult res;
  std::vector<cmat> v(start.size());
  for (std::size_t i = 0; i < start.size(); ++i) v[i] = qmath::qr_orthonormalize(start[i]);
  std::vector<cmat> g;
  double fv = f(v, &g);
  std::vector<cmat> r = project(v, g);
  double gn2 = inner(r, r);
  double t = std::min(1.0, 1.0 / std::max(std::sqrt(gn2), 1e-300));
  int stall = 0;
  std::size_t it = 0;
  for (; it < max_iterations; ++it) {
    if (std::sqrt(gn2) <= cfg.gradient_tolerance) break;
    std::vector<cmat> vn;
    double fn = 0.0;
    bool accepted = false;
    for (; t >= 1e-20; t *= 0.5) {
      vn = retract(v, r, t);
      fn = f(vn, nullptr);
      if (std::isfinite(fn) && fn <= fv - cfg.armijo * t * gn2) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.step_underflow = true;
      break;
    }
    std::vector<cmat> gnext;
    fn = f(vn, &gnext);
    std::vector<cmat> rn = project(vn, gnext);
    // Barzilai-Borwein trial step for the next iteration
    std::vector<cmat> s(v.size()), y(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      s[i] = vn[i] - v[i];
      y[i] = rn[i] - r[i];
    }
    const double sy = inner(s, y), ss = inner(s, s);
    const double gn2_next = inner(rn, rn);
    t = sy > 0.0 ? ss / sy : std::min(1.0, 1.0 / std::max(std::sqrt(gn2_next), 1e-300));
    t = std::clamp(t, 1e-10, 1e6);
    stall = (fv - fn <= 1e-15 * std::max(1.0, std::abs(fv))) ? stall + 1 : 0;
    v = std::move(vn);
    fv = fn;
    r = std::move(rn);
    gn2 = gn2_next;
    if (stall >= 5) {
      ++it;
      break;
    }
  }
  res.point = std::move(v);
  res.value = fv;
  res.iterations = it;
  res.gradient_norm = std::sqrt(gn2);
  // stopping at working precision counts as converged when the gradient is already tiny
  res.converged = res.gradient_norm <= cfg.gradient_tolerance ||
                  ((res.step_underflow || stall >= 5) && res.gradient_norm <= 1e-6);
  return res;
}

OptReport stiefel_minimize(const Objective& f, std::size_t rows, std::size_t cols, const OptConfig& cfg,
                           const std::vector<cmat>& starts) {
  cfg.validate();
  if (cols == 0 || cols > rows) throw DimensionError("stiefel_minimize: need 0 < cols <= rows");
  std::vector<Labeled> all;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    if (static_cast<std::size_t>(starts[i].rows()) != rows || static_cast<std::size_t>(starts[i].cols()) != cols)
      throw DimensionError("stiefel_minimize: start has the wrong shape");
    all.push_back({"start:" + std::to_string(i), {starts[i]}});
  }
  for (std::size_t r = 0; r < cfg.restarts; ++r)
    all.push_back({"random:" + std::to_string(r), {qmath::haar_isometry(rows, cols, restart_seed(cfg.seed, r))}});
  const BlockObjective block = [&f](const std::vector<cmat>& v, std::vector<cmat>* grad) {
    if (!grad) return f(v[0], nullptr);
    grad->resize(1);
    return f(v[0], &(*grad)[0]);
  };
  return to_report(run_restarts(block, std::move(all), cfg));
}

double entropy_of_gram(const cmat& y, cmat* gy) {
  if (y.cols() == 0 || y.rows() == 0) {
    if (gy) *gy = cmat::Zero(y.rows(), y.cols());
    return 0.0;
  }
  const bool left = y.rows() <= y.cols();
  cmat gram = left ? cmat(y * y.adjoint()) : cmat(y.adjoint() * y);
  Eigen::SelfAdjointEigenSolver<cmat> es(qmath::hermitize(gram));
  if (es.info() != Eigen::Success) throw InvariantError("eigendecomposition failed");
  const rvec& lam = es.eigenvalues();
  double h = 0.0;
  rvec g = rvec::Zero(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i) > tol::eig_cutoff) {
      h -= lam(i) * std::log2(lam(i));
      g(i) = g_of(lam(i));
    }
  if (gy) {
    const cmat& u = es.eigenvectors();
    const cmat f = u * g.asDiagonal() * u.adjoint();
    *gy = left ? cmat(f * y) : cmat(y * f);
  }
  return h;
}

LocalAction::LocalAction(const DensityMatrix& rho, std::span<const std::size_t> factors, std::size_t d_out,
                         std::size_t d_env, std::optional<QuantumChannel> post)
    : d_out_(d_out), d_env_(d_env), post_(std::move(post)) {
  const Dims& dims = rho.dims();
  if (factors.empty()) throw DimensionError("no acted factors given");
  if (d_out == 0 || d_env == 0) throw DimensionError("d_out and d_env must be positive");
  std::vector<bool> used(dims.size(), false);
  std::vector<std::size_t> order;
  for (auto f : factors) {
    if (f >= dims.size() || used[f]) throw DimensionError("acted factor index invalid or repeated");
    used[f] = true;
    order.push_back(f);
    a_dims_.push_back(dims[f]);
  }
  Dims rest;
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (!used[i]) {
      order.push_back(i);
      rest.push_back(dims[i]);
    }
  d_a_ = product(a_dims_);
  d_b_ = product(rest);
  if (post_) {
    if (post_->d_in() != d_out) throw DimensionError("post channel input does not match d_out");
    channel_out_dims_ = post_->in_dims();
    output_dims_ = post_->out_dims();
  } else {
    channel_out_dims_ = {d_out};
    output_dims_ = {d_out};
  }
  output_dims_.insert(output_dims_.end(), rest.begin(), rest.end());

  if (post_) {
    const auto id = cmat::Identity(static_cast<Eigen::Index>(d_b_), static_cast<Eigen::Index>(d_b_));
    for (const auto& f : post_->kraus()) post_big_.push_back(qmath::kron(f, id));
  }
  const cmat moved = qmath::permute(rho.matrix(), dims, order);
  Eigen::SelfAdjointEigenSolver<cmat> es(qmath::hermitize(moved));
  for (Eigen::Index k = es.eigenvalues().size(); k-- > 0;) {
    const double lam = es.eigenvalues()(k);
    if (lam <= tol::eig_cutoff) continue;
    cmat m(static_cast<Eigen::Index>(d_a_), static_cast<Eigen::Index>(d_b_));
    for (Eigen::Index a = 0; a < m.rows(); ++a)
      for (Eigen::Index b = 0; b < m.cols(); ++b) m(a, b) = std::sqrt(lam) * es.eigenvectors()(a * m.cols() + b, k);
    m_.push_back(std::move(m));
  }
}

cmat LocalAction::forward(const cmat& v) const {
  if (static_cast<std::size_t>(v.rows()) != d_out_ * d_env_ || static_cast<std::size_t>(v.cols()) != d_a_)
    throw DimensionError("isometry shape does not match the local action");
  const auto db = static_cast<Eigen::Index>(d_b_), de = static_cast<Eigen::Index>(d_env_);
  const auto dout = static_cast<Eigen::Index>(d_out_);
  const auto kcount = static_cast<Eigen::Index>(m_.size());
  cmat y(dout * db, kcount * de);
  for (Eigen::Index k = 0; k < kcount; ++k) {
    const cmat p = v * m_[static_cast<std::size_t>(k)];
    for (Eigen::Index o = 0; o < dout; ++o)
      for (Eigen::Index e = 0; e < de; ++e) y.block(o * db, k * de + e, db, 1) = p.row(o * de + e).transpose();
  }
  if (!post_) return y;
  const auto rows = static_cast<Eigen::Index>(post_->d_out()) * db;
  cmat out(rows, y.cols() * static_cast<Eigen::Index>(post_big_.size()));
  for (std::size_t f = 0; f < post_big_.size(); ++f)
    out.middleCols(static_cast<Eigen::Index>(f) * y.cols(), y.cols()).noalias() = post_big_[f] * y;
  return out;
}

cmat LocalAction::backward(const cmat& gy_in) const {
  const auto db = static_cast<Eigen::Index>(d_b_), de = static_cast<Eigen::Index>(d_env_);
  const auto dout = static_cast<Eigen::Index>(d_out_);
  const auto kcount = static_cast<Eigen::Index>(m_.size());
  cmat z;
  if (post_) {
    const Eigen::Index width = kcount * de;
    z = cmat::Zero(dout * db, width);
    for (std::size_t f = 0; f < post_big_.size(); ++f)
      z.noalias() += post_big_[f].adjoint() * gy_in.middleCols(static_cast<Eigen::Index>(f) * width, width);
  } else {
    z = gy_in;
  }
  cmat grad = cmat::Zero(dout * de, static_cast<Eigen::Index>(d_a_));
  cmat zk(dout * de, db);
  for (Eigen::Index k = 0; k < kcount; ++k) {
    for (Eigen::Index o = 0; o < dout; ++o)
      for (Eigen::Index e = 0; e < de; ++e) zk.row(o * de + e) = z.block(o * db, k * de + e, db, 1).transpose();
    grad.noalias() += zk * m_[static_cast<std::size_t>(k)].adjoint();
  }
  return grad;
}

DensityMatrix LocalAction::output(const cmat& v) const {
  const cmat y = forward(v);
  return DensityMatrix::trusted(output_dims_, y * y.adjoint());
}

double entropy_objective(const LocalAction& action, const cmat& v, cmat* grad) {
  const cmat y = action.forward(v);
  if (!grad) return entropy_of_gram(y);
  cmat gy;
  const double h = entropy_of_gram(y, &gy);
  *grad = action.backward(2.0 * gy);
  return h;
}

cmat entropy_gradient(const StinespringIsometry& v, const DensityMatrix& rho, std::span<const std::size_t> factors) {
  const LocalAction action(rho, factors, v.d_out, v.d_env);
  cmat grad;
  entropy_objective(action, v.v, &grad);
  return grad;
}

cmat entropy_gradient(const StinespringIsometry& v, const DensityMatrix& rho, std::size_t factor) {
  const std::array<std::size_t, 1> f{factor};
  return entropy_gradient(v, rho, f);
}

std::vector<std::pair<std::string, cmat>> probe_isometries(const Dims& in_dims, const Dims& out_dims,
                                                           std::size_t d_env) {
  std::vector<std::pair<std::string, cmat>> out;
  const std::size_t d_in = product(in_dims), d_out = product(out_dims);
  const unsigned n_in = static_cast<unsigned>(in_dims.size()), n_out = static_cast<unsigned>(out_dims.size());
  if (n_in > 8 || n_out > 8) return out;
  for (unsigned s = 0; s < (1u << n_in); ++s) {
    const Dims kept = select(in_dims, s);
    const std::size_t d_s = product(kept), d_rest = d_in / d_s;
    if (d_rest > d_env) continue;
    Dims discarded;
    for (unsigned i = 0; i < n_in; ++i)
      if (!(s & (1u << i))) discarded.push_back(in_dims[i]);
    for (unsigned q = 0; q < (1u << n_out); ++q) {
      if ((s == 0) != (q == 0)) continue;
      const Dims target = select(out_dims, q);
      const std::size_t d_q = product(target);
      if (d_q < d_s) continue;
      // only minimal targets: dropping any single factor must make it too small
      bool minimal = true;
      for (unsigned i = 0; i < n_out && minimal; ++i)
        if ((q & (1u << i)) && d_q / out_dims[i] >= d_s) minimal = false;
      if (!minimal) continue;
      cmat v = cmat::Zero(static_cast<Eigen::Index>(d_out * d_env), static_cast<Eigen::Index>(d_in));
      for (std::size_t a = 0; a < d_in; ++a) {
        const auto idx = unflatten(a, in_dims);
        std::vector<std::size_t> ks, rs;
        for (unsigned i = 0; i < n_in; ++i) (s & (1u << i) ? ks : rs).push_back(idx[i]);
        const std::size_t a_kept = flat_index(ks, kept), e = flat_index(rs, discarded);
        const auto t_idx = unflatten(a_kept, target);
        std::vector<std::size_t> o_idx(n_out, 0);
        for (unsigned i = 0, j = 0; i < n_out; ++i)
          if (q & (1u << i)) o_idx[i] = t_idx[j++];
        const std::size_t o = flat_index(o_idx, out_dims);
        v(static_cast<Eigen::Index>(o * d_env + e), static_cast<Eigen::Index>(a)) = 1.0;
      }
      const std::string label =
          s == 0 ? "probe:pure" : "probe:keep" + mask_label(s, n_in) + "->out" + mask_label(q, n_out);
      out.emplace_back(label, std::move(v));
    }
  }
  return out;
}

cmat fit_environment(const StinespringIsometry& v, std::size_t d_env) {
  if (v.d_env == d_env) return v.v;
  StinespringIsometry src = v;
  if (v.d_env > d_env) {
    src = channels::dilate(channels::undilate(v));
    if (src.d_env > d_env) throw DimensionError("probe needs a larger environment than configured");
  }
  cmat out = cmat::Zero(static_cast<Eigen::Index>(src.d_out * d_env), src.v.cols());
  for (std::size_t o = 0; o < src.d_out; ++o)
    for (std::size_t e = 0; e < src.d_env; ++e)
      out.row(static_cast<Eigen::Index>(o * d_env + e)) = src.v.row(static_cast<Eigen::Index>(o * src.d_env + e));
  return out;
}

OptReport min_local_output_entropy(const DensityMatrix& rho, std::span<const std::size_t> factors, std::size_t d_out,
                                   const OptConfig& cfg, const std::vector<StinespringIsometry>& extra_probes,
                                   std::optional<QuantumChannel> post) {
  cfg.validate();
  std::size_t d_a = 1;
  for (auto f : factors) {
    if (f >= rho.dims().size()) throw DimensionError("acted factor index out of range");
    d_a *= rho.dims()[f];
  }
  const std::size_t d_env = cfg.d_env ? cfg.d_env : d_a * d_out;
  if (d_out * d_env < d_a) throw DimensionError("d_out * d_env is smaller than the input dimension");
  const LocalAction action(rho, factors, d_out, d_env, std::move(post));

  std::vector<Labeled> starts;
  if (cfg.probes)
    for (auto& [label, v] : probe_isometries(action.in_dims(), action.channel_out_dims(), d_env))
      starts.push_back({label, {std::move(v)}});
  // caller probes carry bound guarantees, so they are used even when structured probes are off
  for (std::size_t i = 0; i < extra_probes.size(); ++i) {
    const auto& p = extra_probes[i];
    if (p.d_in != d_a || p.d_out != d_out) throw DimensionError("probe isometry has the wrong input/output size");
    starts.push_back({"probe:caller" + std::to_string(i), {fit_environment(p, d_env)}});
  }
  for (std::size_t r = 0; r < cfg.restarts; ++r)
    starts.push_back({"random:" + std::to_string(r), {qmath::haar_isometry(d_out * d_env, d_a, restart_seed(cfg.seed, r))}});

  const BlockObjective f = [&action](const std::vector<cmat>& v, std::vector<cmat>* grad) {
    if (!grad) return entropy_objective(action, v[0], nullptr);
    grad->resize(1);
    return entropy_objective(action, v[0], &(*grad)[0]);
  };
  OptReport rep = to_report(run_restarts(f, std::move(starts), cfg));
  rep.best.d_in = d_a;
  rep.best.d_out = d_out;
  rep.best.d_env = d_env;
  return rep;
}

OptReport min_local_output_entropy(const DensityMatrix& rho, std::size_t factor, std::size_t d_out,
                                   const OptConfig& cfg) {
  const std::array<std::size_t, 1> f{factor};
  return min_local_output_entropy(rho, f, d_out, cfg);
}

namespace {

// Holevo quantity of the signals Y_i Y_i^dagger with weights p, and optionally
// the gradient of its negative with respect to each isometry.
double holevo_value(const LocalAction& action, const std::vector<double>& p, const std::vector<cmat>& v,
                    std::vector<cmat>* grad) {
  std::vector<cmat> ys(v.size());
  Eigen::Index width = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    ys[i] = action.forward(v[i]);
    if (p[i] > 0.0) width += ys[i].cols();
  }
  cmat stacked(ys[0].rows(), width);
  Eigen::Index col = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (p[i] > 0.0) {
      stacked.middleCols(col, ys[i].cols()) = std::sqrt(p[i]) * ys[i];
      col += ys[i].cols();
    }
  cmat g_avg;
  const double h_avg = entropy_of_gram(stacked, grad ? &g_avg : nullptr);
  double chi = h_avg;
  if (grad) grad->assign(v.size(), cmat::Zero(v[0].rows(), v[0].cols()));
  col = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (p[i] <= 0.0) continue;
    cmat gi;
    chi -= p[i] * entropy_of_gram(ys[i], grad ? &gi : nullptr);
    if (grad) {
      const cmat dy = 2.0 * p[i] * gi - 2.0 * std::sqrt(p[i]) * g_avg.middleCols(col, ys[i].cols());
      (*grad)[i] = action.backward(dy);
    }
    col += ys[i].cols();
  }
  return chi;
}

// Relative entropies D(sigma_i || average) for the Blahut reweighting.
std::vector<double> divergences_to_average(const LocalAction& action, const std::vector<double>& p,
                                           const std::vector<cmat>& v) {
  std::vector<cmat> ys(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) ys[i] = action.forward(v[i]);
  cmat avg = cmat::Zero(ys[0].rows(), ys[0].rows());
  for (std::size_t i = 0; i < v.size(); ++i)
    if (p[i] > 0.0) avg.noalias() += p[i] * ys[i] * ys[i].adjoint();
  Eigen::SelfAdjointEigenSolver<cmat> es(qmath::hermitize(avg));
  rvec logs = rvec::Zero(es.eigenvalues().size());
  for (Eigen::Index j = 0; j < logs.size(); ++j)
    if (es.eigenvalues()(j) > tol::eig_cutoff) logs(j) = std::log2(es.eigenvalues()(j));
  const cmat log_avg = es.eigenvectors() * logs.asDiagonal() * es.eigenvectors().adjoint();
  std::vector<double> d(v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (p[i] <= 0.0) continue;
    const double cross = (ys[i].adjoint() * log_avg * ys[i]).trace().real();
    d[i] = -entropy_of_gram(ys[i]) - cross;
  }
  return d;
}

struct EnsembleState {
  std::vector<double> p;
  std::vector<cmat> v;
  double value = 0.0;
  std::vector<double> history;
  bool converged = false;
};

EnsembleState ascend(const LocalAction& action, EnsembleState s, const OptConfig& cfg) {
  const std::size_t inner_iterations = std::min<std::size_t>(50, cfg.max_iterations);
  const std::size_t rounds = std::max<std::size_t>(1, cfg.max_iterations / inner_iterations);
  s.value = holevo_value(action, s.p, s.v, nullptr);
  s.history.push_back(s.value);
  for (std::size_t round = 0; round < rounds; ++round) {
    const double before = s.value;
    const auto& p = s.p;
    const BlockObjective f = [&action, &p](const std::vector<cmat>& v, std::vector<cmat>* grad) {
      std::vector<cmat> g;
      const double chi = holevo_value(action, p, v, grad ? &g : nullptr);
      if (grad) *grad = std::move(g);
      return -chi;
    };
    DescentResult d = riemannian_descent(f, s.v, cfg, inner_iterations);
    if (-d.value >= s.value) {
      s.v = std::move(d.point);
      s.value = -d.value;
    }
    // Blahut-style reweighting, kept only when it helps
    for (int b = 0; b < 50; ++b) {
      const auto div = divergences_to_average(action, s.p, s.v);
      std::vector<double> q(s.p.size());
      double z = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) z += q[i] = s.p[i] > 0.0 ? s.p[i] * std::exp2(div[i]) : 0.0;
      for (auto& x : q) x /= z;
      const double val = holevo_value(action, q, s.v, nullptr);
      if (!(val > s.value + 1e-15)) break;
      s.p = std::move(q);
      s.value = val;
    }
    s.history.push_back(s.value);
    if (s.value - before <= 1e-10) {
      s.converged = true;
      break;
    }
  }
  return s;
}

cmat apply_output_unitary(const cmat& w, const cmat& v, std::size_t d_env) {
  return qmath::kron(w, cmat::Identity(static_cast<Eigen::Index>(d_env), static_cast<Eigen::Index>(d_env))) * v;
}

}  // namespace

EnsembleReport optimize_ensemble(const QuantumChannel& phi, const DensityMatrix& rho,
                                 std::span<const std::size_t> factors, std::size_t m, const OptConfig& cfg) {
  cfg.validate();
  if (m == 0) throw InvariantError("ensemble size must be at least 1");
  std::size_t d_a = 1;
  for (auto f : factors) {
    if (f >= rho.dims().size()) throw DimensionError("acted factor index out of range");
    d_a *= rho.dims()[f];
  }
  const std::size_t d_out = phi.d_in();
  const std::size_t d_env = cfg.d_env ? cfg.d_env : d_a * d_out;
  if (d_out * d_env < d_a) throw DimensionError("d_out * d_env is smaller than the input dimension");
  const LocalAction action(rho, factors, d_out, d_env, phi);
  const Dims& out_dims = phi.in_dims();

  // Seeded candidates: structured encodings twirled by Weyl operators on a subset
  // of the channel's input factors.
  std::vector<std::pair<std::string, cmat>> bases;
  if (cfg.probes) {
    bases = probe_isometries(action.in_dims(), out_dims, d_env);
    OptConfig inner = cfg;
    inner.restarts = std::min<std::size_t>(cfg.restarts, 4);
    const auto t_star = min_local_output_entropy(rho, factors, d_out, inner, {}, phi);
    bases.emplace_back("min-entropy", t_star.best.v);
  }
  std::vector<std::pair<std::string, EnsembleState>> seeds;
  const unsigned n_out = static_cast<unsigned>(out_dims.size());
  for (const auto& [label, base] : bases) {
    for (unsigned s = 1; s < (1u << n_out) && n_out <= 8; ++s) {
      const std::size_t d_s = product(select(out_dims, s));
      if (d_s * d_s > m) continue;
      const auto weyl = channels::weyl_basis(d_s);
      // place the Weyl operator on the chosen factors, identity elsewhere
      std::vector<std::size_t> order, inverse(n_out);
      Dims moved;
      for (unsigned i = 0; i < n_out; ++i)
        if (s & (1u << i)) order.push_back(i);
      for (unsigned i = 0; i < n_out; ++i)
        if (!(s & (1u << i))) order.push_back(i);
      for (unsigned i = 0; i < n_out; ++i) moved.push_back(out_dims[order[i]]);
      for (unsigned i = 0; i < n_out; ++i) inverse[order[i]] = i;
      const auto rest = static_cast<Eigen::Index>(d_out / d_s);
      EnsembleState st;
      st.p.assign(m, 0.0);
      for (std::size_t i = 0; i < m; ++i) {
        const cmat w_moved = qmath::kron(weyl[i % weyl.size()], cmat::Identity(rest, rest));
        const cmat w = qmath::permute(w_moved, moved, inverse);
        st.v.push_back(apply_output_unitary(w, base, d_env));
        if (i < weyl.size()) st.p[i] = 1.0 / static_cast<double>(weyl.size());
      }
      st.value = holevo_value(action, st.p, st.v, nullptr);
      seeds.emplace_back(label + "+weyl" + mask_label(s, n_out), std::move(st));
    }
  }
  std::vector<std::pair<std::string, EnsembleState>> starts;
  if (!seeds.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < seeds.size(); ++i)
      if (seeds[i].second.value > seeds[best].second.value) best = i;
    starts.push_back(std::move(seeds[best]));
  }
  for (std::size_t r = 0; r < cfg.ensemble_restarts; ++r) {
    EnsembleState st;
    st.p.assign(m, 1.0 / static_cast<double>(m));
    for (std::size_t i = 0; i < m; ++i)
      st.v.push_back(qmath::haar_isometry(d_out * d_env, d_a, restart_seed(cfg.seed, r * m + i)));
    starts.emplace_back("random:" + std::to_string(r), std::move(st));
  }
  if (starts.empty()) throw InvariantError("optimizer has no starting points (restarts = 0 and no probes)");

  std::vector<EnsembleState> done(starts.size());
  parallel_for(starts.size(), cfg.threads, [&](std::size_t i) { done[i] = ascend(action, starts[i].second, cfg); });
  std::size_t best = 0;
  for (std::size_t i = 1; i < done.size(); ++i)
    if (done[i].value > done[best].value) best = i;

  EnsembleReport rep;
  auto& win = done[best];
  double z = 0.0;
  for (double x : win.p) z += x;
  for (std::size_t i = 0; i < m; ++i) {
    rep.ensemble.probabilities.push_back(win.p[i] / z);
    const QuantumChannel raw = channels::undilate(win.v[i], d_out, d_env);
    rep.ensemble.items.emplace_back(raw.kraus(), action.in_dims(), out_dims);
    rep.isometries.push_back({d_a, d_out, d_env, win.v[i]});
  }
  rep.value = win.value;
  rep.history = win.history;
  rep.start_label = starts[best].first;
  rep.converged = win.converged;
  return rep;
}

EnsembleReport optimize_ensemble(const QuantumChannel& phi, const DensityMatrix& rho, std::size_t m,
                                 const OptConfig& cfg) {
  const std::array<std::size_t, 1> f{0};
  return optimize_ensemble(phi, rho, f, m, cfg);
}

}  // namespace optimize
}  // namespace qdense
