#include "doctest.h"
#include "oracles.hpp"
#include "qdense/pqg.hpp"

#include <array>
#include <cmath>

using namespace qdense;
using namespace qdense::pqg;

namespace {

const cmat I2 = oracle::pauli(0), X = oracle::pauli(1), Z = oracle::pauli(3);
const cmat XZ = oracle::pauli(1) * oracle::pauli(3);

cmat cnot() {
  cmat c = cmat::Zero(4, 4);
  c(0, 0) = c(1, 1) = c(2, 3) = c(3, 2) = 1;
  return c;
}

// Gamma_psi(s) = Tr_P G (s (x) psi psi^+) G^+ with dense loops.
cmat induced_oracle(const cmat& g, std::size_t dd, std::size_t dp, const cvec& psi, const cmat& s) {
  const cmat in = oracle::kron_loops(s, psi * psi.adjoint());
  return oracle::trace_b(g * in * g.adjoint(), dd, dp);
}

double sup_lower(const QuantumChannel& t, const cmat& u, const std::vector<cvec>& inputs) {
  double best = 0.0;
  for (const auto& z : inputs) {
    const cmat s = z * z.adjoint();
    best = std::max(best, oracle::trace_norm(channels::apply(t, s) - u * s * u.adjoint()));
  }
  return best;
}

// Bloch-vector action of a qubit channel: the affine map r -> M r + c.
std::pair<Eigen::Matrix3d, Eigen::Vector3d> bloch_affine(const QuantumChannel& t) {
  Eigen::Matrix3d m;
  Eigen::Vector3d c;
  const cmat out0 = channels::apply(t, cmat(I2 / 2.0));
  for (int k = 0; k < 3; ++k) c(k) = (oracle::pauli(k + 1) * out0).trace().real();
  for (int j = 0; j < 3; ++j) {
    const cmat out = channels::apply(t, cmat(oracle::pauli(j + 1) / 2.0));
    for (int k = 0; k < 3; ++k) m(k, j) = (oracle::pauli(k + 1) * out).trace().real();
  }
  return {m, c};
}

OptConfig quick() {
  OptConfig c;
  c.restarts = 2;
  c.max_iterations = 200;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("control gate construction") {
  const auto g = control_gate({I2, X});
  CHECK(g.d_data() == 2);
  CHECK(g.d_program() == 2);
  const cmat u = g.unitary();
  cmat expect = cmat::Zero(4, 4);
  // data index o, program k -> o * 2 + k; block diagonal in the program index
  expect(0, 0) = expect(2, 2) = 1;  // k = 0: identity
  expect(1, 3) = expect(3, 1) = 1;  // k = 1: X
  CHECK((u - expect).norm() < 1e-15);
  CHECK(channels::channels_equal(induced_map(g, PureState::basis({2}, 1)), QuantumChannel::unitary(X)));

  const cmat h = oracle::random_unitary(3, 4);
  const auto single = control_gate({h});
  CHECK((single.unitary() - h).norm() < 1e-14);  // U (x) I with a one-dimensional program

  CHECK_THROWS_AS(control_gate({}), DimensionError);
  CHECK_THROWS_AS(control_gate({I2, cmat::Identity(3, 3)}), DimensionError);
  CHECK_THROWS_AS(control_gate({I2, cmat(2.0 * X)}), InvariantError);
  CHECK_THROWS_AS(ProgrammableGate(2, 2, cmat::Identity(3, 3)), DimensionError);

  const auto pauli = control_gate({I2, X, XZ, Z});
  const std::array<cmat, 4> units{I2, X, XZ, Z};
  for (std::size_t k = 0; k < 4; ++k)
    CHECK(channels::channels_equal(induced_map(pauli, PureState::basis({4}, k)), QuantumChannel::unitary(units[k])));
}

TEST_CASE("induced map") {
  const auto g = control_gate({I2, X});
  cvec plus(2);
  plus << 1, 1;
  const auto half = induced_map(g, PureState::normalized({2}, plus));
  // s -> (s + X s X) / 2 from its Kraus pair
  const QuantumChannel expect({cmat(I2 / std::sqrt(2.0)), cmat(X / std::sqrt(2.0))});
  CHECK(channels::channels_equal(half, expect));
  CHECK(channels::apply(half, DensityMatrix::basis({2}, 0)).purity() == doctest::Approx(0.5));

  for (std::uint64_t s = 0; s < 10; ++s) {
    const std::size_t dd = 2 + s % 2, dp = 2 + s % 3;
    const cmat u = oracle::random_unitary(dd * dp, 100 + s);
    const ProgrammableGate dense(dd, dp, u);
    const cvec psi = oracle::random_pure(dp, 200 + s);
    const auto t = induced_map(dense, PureState({dp}, psi));
    const cmat sigma = oracle::random_density(dd, 300 + s);
    CHECK((channels::apply(t, sigma) - induced_oracle(u, dd, dp, psi, sigma)).norm() < 1e-12);
  }
  CHECK_THROWS_AS(induced_map(g, PureState::basis({3}, 0)), DimensionError);
}

TEST_CASE("tensor of gates acts factorwise") {
  const cmat ua = oracle::random_unitary(4, 7), ub = oracle::random_unitary(6, 8);
  const ProgrammableGate a(2, 2, ua), b(2, 3, ub);
  const auto ab = tensor_gates(a, b);
  CHECK(ab.d_data() == 4);
  CHECK(ab.d_program() == 6);
  const cvec p1 = oracle::random_pure(2, 9), p2 = oracle::random_pure(3, 10);
  const auto joint = induced_map(ab, PureState({6}, oracle::kron_loops(p1, p2)));
  const auto prod = channels::tensor(induced_map(a, PureState({2}, p1)), induced_map(b, PureState({3}, p2)));
  CHECK(channels::channels_equal(joint, prod));

  const auto ca = control_gate({I2, X}), cb = control_gate({Z, XZ, I2});
  const auto cab = tensor_gates(ca, cb);
  CHECK(cab.is_controlled());
  CHECK((cab.unitary() - tensor_gates(ProgrammableGate(2, 2, ca.unitary()), ProgrammableGate(2, 3, cb.unitary())).unitary())
            .norm() < 1e-14);
}

TEST_CASE("unitary distance and the approximation error estimate") {
  for (std::uint64_t s = 0; s < 12; ++s) {
    const std::size_t d = 2 + s % 3;
    const cmat u = oracle::random_unitary(d, 40 + s);
    // perturbations of several sizes, including far ones
    const cmat h = oracle::random_gaussian(d, d, 60 + s);
    const cmat herm = (h + h.adjoint()) * (0.05 * double(s % 4 + 1));
    Eigen::ComplexEigenSolver<cmat> es(herm);
    cmat v = u * es.eigenvectors() * es.eigenvalues().unaryExpr([](cplx x) { return std::exp(cplx(0, 1) * x); }).asDiagonal() *
             es.eigenvectors().inverse();
    v = qmath::qr_orthonormalize(v);
    const double exact = unitary_distance(u, v);
    std::vector<cvec> zs;
    for (std::uint64_t k = 0; k < 2000; ++k) zs.push_back(oracle::random_pure(d, 5000 + 31 * s + k));
    const double sampled = sup_lower(QuantumChannel::unitary(v), u, zs);
    CHECK(sampled <= exact + 1e-9);
    const auto est = approximation_error(QuantumChannel::unitary(v), u, s);
    CHECK(est.value <= exact + 1e-9);
    CHECK(est.value >= exact - 2e-3);
    CHECK(unitary_distance(u, cmat(v * std::polar(1.0, 0.7))) == doctest::Approx(exact).epsilon(1e-9));
  }
  CHECK(unitary_distance(I2, X) == doctest::Approx(2.0));
  CHECK(unitary_distance(cnot(), cmat::Identity(4, 4)) == doctest::Approx(2.0));
}

TEST_CASE("approximation error examples") {
  const auto g = control_gate({I2, X});
  CHECK(approximation_error(g, PureState::basis({2}, 1), X).value <= 1e-8);
  CHECK(approximation_error(g, PureState::basis({2}, 0), X).value == doctest::Approx(2.0).epsilon(1e-9));
  cvec plus(2);
  plus << 1, 1;
  const auto e = approximation_error(g, PureState::normalized({2}, plus), X);
  CHECK(e.value > 0.5);
  CHECK(e.value <= 2.0);
  CHECK(e.method.find("haar-200") == 0);

  // qubit mixtures of unitaries: exact worst case is the top singular value of M - I
  for (std::uint64_t s = 0; s < 8; ++s) {
    std::vector<cmat> units;
    for (std::uint64_t k = 0; k < 3; ++k) units.push_back(oracle::random_unitary(2, 700 + 3 * s + k));
    const auto gate = control_gate(units);
    const cvec psi = oracle::random_pure(3, 800 + s);
    const cmat target = oracle::random_unitary(2, 900 + s);
    const auto t = induced_map(gate, PureState({3}, psi));
    const auto [m, c] = bloch_affine(channels::compose(QuantumChannel::unitary(target.adjoint()), t));
    CHECK(c.norm() < 1e-12);
    const double exact = Eigen::JacobiSVD<Eigen::Matrix3d>(m - Eigen::Matrix3d::Identity()).singularValues()(0);
    const double est = approximation_error(t, target, s).value;
    CHECK(est <= exact + 1e-9);
    CHECK(est >= exact - 1e-3);
  }

  // zero error implies Choi equality
  const cmat u = oracle::random_unitary(3, 77);
  const auto gu = control_gate({oracle::random_unitary(3, 78), u});
  CHECK(approximation_error(gu, PureState::basis({2}, 1), u).value <= 1e-8);
  CHECK(channels::channels_equal(induced_map(gu, PureState::basis({2}, 1)), QuantumChannel::unitary(u)));
}

TEST_CASE("program orthogonality check") {
  const auto g = control_gate({I2, X});
  const auto v = program_orthogonality_check(g, PureState::basis({2}, 0), PureState::basis({2}, 1));
  CHECK(v.consistent);
  CHECK(v.orthogonal);
  CHECK_FALSE(v.proportional);

  const auto dense = ProgrammableGate(2, 3, oracle::random_unitary(6, 12));
  const auto gd = control_gate({X, cmat(X * std::polar(1.0, 0.4)), Z});
  const cvec psi = oracle::random_pure(2, 5);
  cvec p(3);
  p << psi(0), psi(1), 0;
  const PureState a({3}, p), b({3}, cvec(p * std::polar(1.0, 1.3)));
  const auto phase = program_orthogonality_check(gd, a, b);
  CHECK(phase.consistent);
  CHECK(phase.proportional);
  CHECK(phase.overlap == doctest::Approx(1.0));

  cvec mixed(3);
  mixed << 1, 0, 1;
  CHECK_THROWS_AS(program_orthogonality_check(gd, PureState::normalized({3}, mixed), a), PreconditionError);
  CHECK_THROWS_AS(program_orthogonality_check(dense, PureState({3}, oracle::random_pure(3, 1)), PureState::basis({3}, 0)),
                  PreconditionError);
}

TEST_CASE("randomized search finds no counterexample to program orthogonality") {
  const auto r = program_orthogonality_search(1000, 2024);
  CHECK(r.qualifying >= 1000);
  CHECK(r.violations == 0);
  CHECK(r.max_collinearity_defect <= 1e-6);
  // the generator also exercises the other branches
  CHECK(r.not_programs > 100);
  CHECK(r.orthogonal_programs > 100);
  const auto again = program_orthogonality_search(1000, 2024);
  CHECK(again.sampled == r.sampled);
}

TEST_CASE("best programs") {
  const auto pauli = control_gate({I2, X, XZ, Z});
  const auto c = best_program(pauli, XZ);
  CHECK(c.error.value <= 1e-12);
  CHECK(std::abs(c.program.amplitudes()(2)) == doctest::Approx(1.0));

  // dense gate: the fidelity-optimal program for a disguised control gate
  const cmat pre = oracle::random_unitary(4, 3);
  const cmat c0 = pauli.unitary();
  const ProgrammableGate hidden(2, 4, c0 * oracle::kron_loops(I2, pre));
  const auto h = best_program(hidden, Z, 1);
  CHECK(h.error.value <= 1e-6);
  CHECK(h.label == "fidelity-eigenvector");
}

TEST_CASE("net gates") {
  const auto coarse = net_gate(2.0, 2, 0);
  CHECK(coarse.certificate.passed);
  CHECK(coarse.gate.d_program() <= 8);

  const auto a = net_gate(0.3, 2, 5);
  CHECK(a.certificate.passed);
  CHECK(a.certificate.targets == 100);
  CHECK(a.certificate.max_error <= 0.3);
  CHECK(a.net.covering_error <= 0.3);
  const auto b = net_gate(0.3, 2, 5);
  CHECK(a.gate.d_program() == b.gate.d_program());
  CHECK(a.certificate.max_error == b.certificate.max_error);
  for (std::size_t i = 0; i < a.net.elements.size(); ++i) CHECK((a.net.elements[i] - b.net.elements[i]).norm() == 0.0);

  // independent check on fresh targets, with the library estimate and an exact Bloch oracle
  for (std::uint64_t s = 0; s < 20; ++s) {
    const cmat t = oracle::random_unitary(2, 4000 + s);
    const auto choice = best_program(a.gate, t, s);
    const auto [m, c] = bloch_affine(channels::compose(QuantumChannel::unitary(t.adjoint()), induced_map(a.gate, choice.program)));
    const double exact = Eigen::JacobiSVD<Eigen::Matrix3d>(m - Eigen::Matrix3d::Identity()).singularValues()(0);
    CHECK(exact == doctest::Approx(choice.error.value).epsilon(1e-9));
    CHECK(exact <= 0.3);
  }

  const auto q3 = net_gate(1.8, 3, 1);
  CHECK(q3.certificate.passed);
  CHECK_THROWS_AS(net_gate(0.01, 2, 0), SizeGuardError);
  CHECK_THROWS_AS(net_gate(0.0, 2, 0), InvariantError);
  CHECK_THROWS_AS(net_gate(0.5, 1, 0), InvariantError);
}

TEST_CASE("scalability witness against CNOT") {
  // controlled {I, X} pairs induce mixtures q of I, X on each qubit; the grid
  // oracle lower-bounds the worst-case error at every mixture
  const auto ix = control_gate({I2, X});
  std::vector<cvec> inputs;
  for (std::size_t k = 0; k < 4; ++k) inputs.push_back(cvec::Unit(4, static_cast<Eigen::Index>(k)));
  for (std::uint64_t k = 0; k < 16; ++k) inputs.push_back(oracle::random_pure(4, 6000 + k));
  const std::array<cmat, 4> units{oracle::kron_loops(I2, I2), oracle::kron_loops(I2, X), oracle::kron_loops(X, I2),
                                  oracle::kron_loops(X, X)};
  constexpr int n = 38;
  double grid_min = 10.0;
  std::size_t points = 0;
  for (int a = 0; a <= n; ++a)
    for (int b = 0; a + b <= n; ++b)
      for (int c = 0; a + b + c <= n; ++c) {
        const std::array<double, 4> q{a / double(n), b / double(n), c / double(n), (n - a - b - c) / double(n)};
        double worst = 0.0;
        for (const auto& z : inputs) {
          const cmat s = z * z.adjoint();
          cmat diff = -cnot() * s * cnot().adjoint();
          for (std::size_t k = 0; k < 4; ++k) diff += q[k] * units[k] * s * units[k].adjoint();
          worst = std::max(worst, oracle::trace_norm(diff));
        }
        grid_min = std::min(grid_min, worst);
        ++points;
      }
  CHECK(points == 10660);
  // the error is 1-Lipschitz in the l1 distance of mixtures; grid points lie within 4/n
  const double e_star_lower = grid_min - 4.0 / n;
  CHECK(e_star_lower > 0.1);
  const auto w = scalability_witness(ix, ix, cnot(), quick());
  CHECK(w.best_error >= e_star_lower);
  CHECK(w.best_error > 0.1);
  CHECK(w.program_dim == 4);

  const auto pauli = control_gate({I2, X, XZ, Z});
  const auto wp = scalability_witness(pauli, pauli, cnot(), quick());
  CHECK(wp.best_error > 0.1);
  CHECK(wp.best_program.size() == 16);

  // swap gates let an entangled program reach the data, yet CNOT stays far
  cmat swap = cmat::Zero(4, 4);
  swap(0, 0) = swap(1, 2) = swap(2, 1) = swap(3, 3) = 1;
  const ProgrammableGate sw(2, 2, swap);
  const auto both = tensor_gates(sw, sw);
  const auto bell = induced_map(both, states::bell(0));
  const auto out = channels::apply(bell, DensityMatrix::basis({2, 2}, 0));
  CHECK(out.purity() == doctest::Approx(1.0));
  CHECK(qmath::von_neumann_entropy(qmath::partial_trace(DensityMatrix({2, 2}, out.matrix()), std::array<std::size_t, 1>{0})) ==
        doctest::Approx(1.0));
  const auto ws = scalability_witness(sw, sw, cnot(), quick());
  CHECK(ws.best_error > 0.1);

  CHECK_THROWS_AS(scalability_witness(ix, ix, cmat::Identity(2, 2), quick()), DimensionError);
}

TEST_CASE("scalability witness on product targets tracks the nets") {
  const cmat xz = oracle::kron_loops(X, Z);
  const cmat ab = oracle::kron_loops(oracle::random_unitary(2, 31), oracle::random_unitary(2, 32));
  for (double eps : {0.5, 0.3, 0.2, 0.1}) {
    const auto net = net_gate(eps, 2, 1);
    REQUIRE(net.certificate.passed);
    const auto w1 = scalability_witness(net.gate, net.gate, xz, quick());
    CHECK(w1.best_error <= 2 * eps + 0.05);
    const auto w2 = scalability_witness(net.gate, net.gate, ab, quick());
    CHECK(w2.best_error <= 2 * eps + 0.05);
  }
  const auto n5 = net_gate(0.5, 2, 1);
  const auto e = emulate_encoding(QuantumChannel::unitary(cnot()), tensor_gates(n5.gate, n5.gate), 1, 0);
  CHECK(e.measured_error > 0.1);
}

TEST_CASE("emulating encodings") {
  const cmat u = oracle::random_unitary(2, 90);
  const auto g = control_gate({I2, u, X});
  const auto exact = emulate_encoding(QuantumChannel::unitary(u), g);
  CHECK(exact.measured_error <= 1e-8);
  CHECK(exact.route == "mixed-unitary");

  const auto net = net_gate(0.1, 2, 1);
  REQUIRE(net.certificate.passed);
  const auto dep = QuantumChannel::depolarizing(2, 0.3);
  const auto e = emulate_encoding(dep, net.gate, 1, 4);
  CHECK(e.measured_error <= 0.1);
  // same channel written with rotated Pauli Kraus operators, off the grid
  const cmat v = oracle::random_unitary(2, 91);
  std::vector<cmat> kraus;
  for (const auto& k : dep.kraus()) kraus.push_back(v * k * v.adjoint());
  const QuantumChannel rotated(kraus);
  CHECK(channels::channels_equal(rotated, dep));
  const auto er = emulate_encoding(rotated, net.gate, 1, 4);
  CHECK(er.measured_error <= 0.1);
  CHECK(er.measured_error > 1e-6);

  // dilation route: amplitude damping through an ancilla, with the dilation unitary in the gate
  const double gam = 0.4;
  cmat k0 = cmat::Zero(2, 2), k1 = cmat::Zero(2, 2);
  k0(0, 0) = 1;
  k0(1, 1) = std::sqrt(1 - gam);
  k1(0, 1) = std::sqrt(gam);
  const QuantumChannel damp({k0, k1});
  const StinespringIsometry iso = channels::dilate(channels::canonicalize(damp));
  const cmat comp = channels::unitary_completion(iso.v);
  cmat w(4, 4);
  w.col(0) = comp.col(0);
  w.col(2) = comp.col(1);
  w.col(1) = comp.col(2);
  w.col(3) = comp.col(3);
  const auto g4 = control_gate({oracle::random_unitary(4, 1), w, oracle::random_unitary(4, 2)});
  const auto ed = emulate_encoding(damp, g4, 2, 0);
  CHECK(ed.route == "dilation");
  CHECK(ed.measured_error <= 1e-8);
  CHECK(channels::channels_equal(ed.emulated, damp));

  CHECK_THROWS_AS(emulate_encoding(damp, g4, 3, 0), DimensionError);
}
