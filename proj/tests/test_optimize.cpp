#include "doctest.h"
#include "oracles.hpp"
#include "qdense/optimize.hpp"

#include <array>
#include <cmath>

using namespace qdense;
using namespace qdense::optimize;

namespace {

// H(Tr_env (V (x) I) rho (V (x) I)^dagger) with the channel on factor 0 of a
// bipartite rho, by explicit Kraus blocks; V need not be an isometry.
double entropy_oracle(const cmat& v, const cmat& rho, std::size_t da, std::size_t db, std::size_t dout,
                      std::size_t denv) {
  const auto n = static_cast<Eigen::Index>(dout * db);
  cmat sigma = cmat::Zero(n, n);
  for (std::size_t e = 0; e < denv; ++e) {
    cmat k(static_cast<Eigen::Index>(dout), static_cast<Eigen::Index>(da));
    for (std::size_t o = 0; o < dout; ++o) k.row(static_cast<Eigen::Index>(o)) = v.row(static_cast<Eigen::Index>(o * denv + e));
    const cmat big = oracle::kron_loops(k, cmat::Identity(static_cast<Eigen::Index>(db), static_cast<Eigen::Index>(db)));
    sigma += big * rho * big.adjoint();
  }
  return oracle::entropy_bits(sigma);
}

OptConfig quick(std::size_t restarts = 6) {
  OptConfig c;
  c.restarts = restarts;
  c.max_iterations = 400;
  c.seed = 11;
  return c;
}

OptConfig optimizer_only(std::size_t restarts = 6) {
  OptConfig c = quick(restarts);
  c.probes = false;
  return c;
}

DensityMatrix separable_qubits(std::uint64_t seed) {
  // mixture of product pure states
  cmat rho = cmat::Zero(4, 4);
  const std::size_t terms = 1 + seed % 10;
  std::vector<double> w(terms);
  double z = 0;
  for (std::size_t t = 0; t < terms; ++t) z += w[t] = 0.1 + std::abs(oracle::random_gaussian(1, 1, seed * 31 + t)(0, 0));
  for (std::size_t t = 0; t < terms; ++t) {
    cvec a = oracle::random_gaussian(2, 1, seed * 97 + t).col(0).normalized();
    cvec b = oracle::random_gaussian(2, 1, seed * 89 + t + 500).col(0).normalized();
    const cvec ab = oracle::kron_loops(a, b);
    rho += (w[t] / z) * ab * ab.adjoint();
  }
  return DensityMatrix::trusted({2, 2}, rho);
}

}  // namespace

TEST_CASE("Stiefel descent finds a known minimizer") {
  const cmat v0 = qmath::haar_isometry(5, 2, 3);
  const Objective f = [&v0](const cmat& v, cmat* g) {
    if (g) *g = 2.0 * (v - v0);
    return (v - v0).squaredNorm();
  };
  const auto rep = stiefel_minimize(f, 5, 2, quick(3));
  CHECK(rep.value == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(rep.value < 1e-8);
  CHECK((rep.best.v.adjoint() * rep.best.v - cmat::Identity(2, 2)).norm() < 1e-8);
  CHECK(rep.restart_values.size() == 3);
  CHECK(rep.value == *std::min_element(rep.restart_values.begin(), rep.restart_values.end()));
  CHECK_THROWS_AS(stiefel_minimize(f, 2, 5, quick()), DimensionError);
}

TEST_CASE("descent is monotone per restart") {
  const auto rho = DensityMatrix({2, 2}, oracle::random_density(4, 5));
  const LocalAction action(rho, std::array<std::size_t, 1>{0}, 2, 4);
  std::vector<double> trace;
  const BlockObjective f = [&](const std::vector<cmat>& v, std::vector<cmat>* g) {
    cmat grad;
    const double h = entropy_objective(action, v[0], g ? &grad : nullptr);
    if (g) {
      *g = {grad};
      trace.push_back(h);
    }
    return h;
  };
  riemannian_descent(f, {qmath::haar_isometry(8, 2, 1)}, quick(), 100);
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-14);
}

TEST_CASE("entropy gradient matches central finite differences on 20 instances") {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t da = 2 + seed % 2, db = 2 + (seed / 2) % 2, dout = 2 + (seed / 4) % 2;
    const std::size_t denv = std::max<std::size_t>(1 + seed % 3, (da + dout - 1) / dout);
    const std::size_t rank = 1 + seed % (da * db);
    const cmat g = oracle::random_gaussian(da * db, rank, seed + 300);
    cmat rho = g * g.adjoint();
    rho /= rho.trace().real();
    const DensityMatrix state({da, db}, rho);
    const cmat v = qmath::haar_isometry(dout * denv, da, seed + 400);
    const cmat grad = entropy_gradient(StinespringIsometry{da, dout, denv, v}, state, 0);
    const cmat dir = oracle::random_gaussian(dout * denv, da, seed + 500);
    const double h = 1e-5;
    const double fd = (entropy_oracle(v + h * dir, rho, da, db, dout, denv) - entropy_oracle(v - h * dir, rho, da, db, dout, denv)) / (2 * h);
    const double analytic = (grad.conjugate().cwiseProduct(dir)).sum().real();
    CAPTURE(seed);
    CHECK(std::abs(fd - analytic) <= 1e-4 * std::max(1.0, std::abs(fd)));
    worst = std::max(worst, std::abs(fd - analytic) / std::max(1.0, std::abs(fd)));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("gradient with a post channel and several acted factors") {
  const auto rho = DensityMatrix({2, 2, 2}, oracle::random_density(8, 21));
  const auto post = channels::random_channel(3, 2, 2, 4);
  const std::array<std::size_t, 2> acted{2, 0};
  const LocalAction action(rho, acted, 3, 2, post);
  CHECK(action.output_dims() == Dims{2, 2});
  const cmat v = qmath::haar_isometry(6, 4, 2);
  cmat grad;
  entropy_objective(action, v, &grad);
  // value oracle: apply both channels explicitly
  const auto value = [&](const cmat& w) {
    std::vector<cmat> kraus;
    for (std::size_t e = 0; e < 2; ++e) {
      cmat k(3, 4);
      for (Eigen::Index o = 0; o < 3; ++o) k.row(o) = w.row(o * 2 + static_cast<Eigen::Index>(e));
      kraus.push_back(k);
    }
    // permute rho to (A2, A0, B) order by index arithmetic
    cmat moved(8, 8);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) {
        const int ii = ((i & 1) << 2) | (i & 4) >> 2 << 1 | ((i >> 1) & 1);
        const int jj = ((j & 1) << 2) | (j & 4) >> 2 << 1 | ((j >> 1) & 1);
        moved(ii, jj) = rho.matrix()(i, j);
      }
    cmat sigma = cmat::Zero(6, 6);
    for (const auto& k : kraus) {
      const cmat big = oracle::kron_loops(k, cmat::Identity(2, 2));
      sigma += big * moved * big.adjoint();
    }
    cmat out = cmat::Zero(4, 4);
    for (const auto& f : post.kraus()) {
      const cmat big = oracle::kron_loops(f, cmat::Identity(2, 2));
      out += big * sigma * big.adjoint();
    }
    return oracle::entropy_bits(out);
  };
  const cmat dir = oracle::random_gaussian(6, 4, 77);
  const double h = 1e-5;
  const double fd = (value(v + h * dir) - value(v - h * dir)) / (2 * h);
  CHECK(fd == doctest::Approx((grad.conjugate().cwiseProduct(dir)).sum().real()).epsilon(1e-5));
  CHECK(entropy_objective(action, v, nullptr) == doctest::Approx(value(v)).epsilon(1e-10));
}

TEST_CASE("entropy is blind to a global phase of V") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto rho = DensityMatrix({2, 3}, oracle::random_density(6, seed));
    const cmat v = qmath::haar_isometry(6, 2, seed + 9);
    const cmat g = entropy_gradient(StinespringIsometry{2, 2, 3, v}, rho, 0);
    const cmat iv = cplx(0, 1) * v;
    CHECK(std::abs((g.conjugate().cwiseProduct(iv)).sum().real()) < 1e-8);
  }
}

TEST_CASE("first-order condition at the Bell minimizer") {
  const auto rho = states::singlet().density();
  StinespringIsometry id{2, 2, 4, cmat::Zero(8, 2)};
  id.v(0, 0) = 1.0;
  id.v(4, 1) = 1.0;
  const cmat g = entropy_gradient(id, rho, 0);
  const cmat vg = id.v.adjoint() * g;
  const cmat riem = g - id.v * (0.5 * (vg + vg.adjoint()));
  CHECK(riem.norm() <= 1e-6);
}

TEST_CASE("min local output entropy examples") {
  const std::array<std::size_t, 1> a{0};
  CHECK(std::abs(min_local_output_entropy(states::singlet().density(), 0, 2, quick()).value) <= 1e-4);
  CHECK(std::abs(min_local_output_entropy(DensityMatrix::basis({2, 2}, 0), 0, 2, quick()).value) <= 1e-9);
  CHECK(min_local_output_entropy(DensityMatrix::maximally_mixed({2, 2}), a, 2, quick()).value ==
        doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("optimizer alone, without structured probes") {
  const auto bell = min_local_output_entropy(states::singlet().density(), 0, 2, optimizer_only());
  CHECK(std::abs(bell.value) <= 1e-4);
  for (const auto& label : bell.restart_labels) CHECK(label.rfind("random", 0) == 0);
  const auto mixed = min_local_output_entropy(DensityMatrix::maximally_mixed({2, 2}), 0, 2, optimizer_only());
  CHECK(mixed.value == doctest::Approx(1.0).epsilon(1e-3));
  // square isometries with a unitary-invariant optimum: all restarts agree
  OptConfig c = optimizer_only();
  c.d_env = 1;
  const auto sq = min_local_output_entropy(states::singlet().density(), 0, 2, c);
  for (double v : sq.restart_values) CHECK(std::abs(v - sq.value) <= 1e-6);
}

TEST_CASE("bound semantics on random states") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const std::size_t db = 2 + seed % 2;
    const auto rho = DensityMatrix({2, db}, oracle::random_density(2 * db, seed + 40));
    const std::size_t dout = 2 + seed % 2;
    const auto rep = min_local_output_entropy(rho, 0, dout, quick(4));
    const double hb = oracle::entropy_bits(oracle::trace_a(rho.matrix(), 2, db));
    CHECK(rep.value <= hb + 1e-9);
    CHECK(rep.value >= std::max(0.0, hb - std::log2(double(dout))) - 1e-9);
    CHECK((rep.best.v.adjoint() * rep.best.v - cmat::Identity(2, 2)).norm() < 1e-8);
    // no worse than 50 random channel probes
    for (std::uint64_t k = 0; k < 50; ++k) {
      const cmat v = qmath::haar_isometry(dout * rep.best.d_env, 2, 1000 * seed + k);
      CHECK(rep.value <= entropy_oracle(v, rho.matrix(), 2, db, dout, rep.best.d_env) + 1e-9);
    }
    // caller probes are respected
    const StinespringIsometry probe{2, dout, 1, qmath::haar_isometry(dout, 2, seed)};
    const auto with_probe = min_local_output_entropy(rho, std::array<std::size_t, 1>{0}, dout, quick(2), {probe});
    CHECK(with_probe.value <= entropy_oracle(probe.v, rho.matrix(), 2, db, dout, 1) + 1e-9);
  }
}

TEST_CASE("probe isometries") {
  const auto probes = probe_isometries({2, 2}, {4}, 4);
  bool saw_pure = false;
  for (const auto& [label, v] : probes) {
    CHECK((v.adjoint() * v - cmat::Identity(4, 4)).norm() < 1e-14);
    saw_pure |= label == "probe:pure";
  }
  CHECK(saw_pure);
  // keeping one of two qubits of Psi- (x) Psi- leaves entropy 1
  const auto two = qmath::tensor(states::singlet().density(), states::singlet().density());
  const std::array<std::size_t, 2> as{0, 2};
  const LocalAction action(two, as, 2, 4);
  double best = 10;
  for (const auto& [label, v] : probe_isometries({2, 2}, {2}, 4)) best = std::min(best, entropy_objective(action, v, nullptr));
  CHECK(best == doctest::Approx(1.0));
}

TEST_CASE("determinism under a fixed seed") {
  const auto rho = DensityMatrix({2, 2}, oracle::random_density(4, 3));
  const auto a = min_local_output_entropy(rho, 0, 2, quick(3));
  const auto b = min_local_output_entropy(rho, 0, 2, quick(3));
  CHECK(a.value == b.value);
  CHECK(a.restart_values == b.restart_values);
  CHECK((a.best.v - b.best.v).norm() == 0.0);
}

TEST_CASE("ensemble optimization") {
  const std::array<std::size_t, 1> a{0};
  OptConfig c = quick(2);
  const auto bell = optimize_ensemble(QuantumChannel::identity(2), states::singlet().density(), a, 4, c);
  CHECK(bell.value >= 2.0 - 1e-3);
  CHECK(bell.value <= 2.0 + 1e-9);
  bell.ensemble.validate();
  for (std::size_t i = 1; i < bell.history.size(); ++i) CHECK(bell.history[i] >= bell.history[i - 1]);

  const auto flat = optimize_ensemble(QuantumChannel::constant(DensityMatrix::maximally_mixed({2}), 2),
                                      states::singlet().density(), a, 4, c);
  CHECK(std::abs(flat.value) <= 1e-9);

  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto sep = optimize_ensemble(QuantumChannel::identity(2), separable_qubits(seed), a, 4, c);
    CHECK(sep.value == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("ensemble optimization without probes") {
  const std::array<std::size_t, 1> a{0};
  OptConfig c = optimizer_only(3);
  const auto bell = optimize_ensemble(QuantumChannel::identity(2), states::singlet().density(), a, 4, c);
  CHECK(bell.value >= 2.0 - 1e-3);
  for (std::size_t i = 1; i < bell.history.size(); ++i) CHECK(bell.history[i] >= bell.history[i - 1]);
  const double ceiling = 1.0 + 1.0;  // log d_out + H(rho_B)
  CHECK(bell.value <= ceiling + 1e-9);
}
