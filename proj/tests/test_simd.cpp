// Every vectorized kernel must agree with the scalar reference.

#include "doctest.h"
#include "qdense/simd.hpp"

#include <random>
#include <vector>

using namespace qdense::simd;

namespace {

std::vector<cplx> random_array(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<cplx> v(n);
  for (auto& x : v) x = {u(gen), u(gen)};
  return v;
}

double scale_of(const std::vector<cplx>& v) {
  double s = 1.0;
  for (auto x : v) s = std::max(s, std::abs(x));
  return s;
}

}  // namespace

TEST_CASE("scalar variant is always available and listed first") {
  const auto isas = available_isas();
  REQUIRE(!isas.empty());
  CHECK(isas.front() == Isa::scalar);
  CHECK(std::string(active().name).size() > 0);
}

TEST_CASE("vector kernels match the scalar reference") {
  const auto& ref = scalar_kernels();
  for (Isa isa : available_isas()) {
    const auto& k = kernels_for(isa);
    CAPTURE(k.name);
    // odd and even lengths exercise the tail paths
    for (std::size_t n : {0u, 1u, 2u, 3u, 7u, 16u, 33u, 1000u}) {
      CAPTURE(n);
      const auto x = random_array(n, 11 + n);
      const auto y0 = random_array(n, 97 + n);
      const cplx a(0.75, -1.25);
      const double tol = 1e-13 * std::max<std::size_t>(n, 1) * scale_of(x) * scale_of(y0);

      auto y_ref = y0, y_vec = y0;
      ref.caxpy(a, x.data(), y_ref.data(), n);
      k.caxpy(a, x.data(), y_vec.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y_ref[i] - y_vec[i]) <= 1e-14 * scale_of(y_ref) * 4);

      ref.cscale(a, x.data(), y_ref.data(), n);
      k.cscale(a, x.data(), y_vec.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y_ref[i] - y_vec[i]) <= 1e-14 * scale_of(y_ref) * 4);

      CHECK(std::abs(ref.cdotc(x.data(), y0.data(), n) - k.cdotc(x.data(), y0.data(), n)) <= tol);
      CHECK(std::abs(ref.norm_sq(x.data(), n) - k.norm_sq(x.data(), n)) <= tol);
      CHECK(ref.max_abs_diff(x.data(), y0.data(), n) == doctest::Approx(k.max_abs_diff(x.data(), y0.data(), n)).epsilon(1e-14));
    }
  }
}

TEST_CASE("cdotc conjugates its first argument") {
  for (Isa isa : available_isas()) {
    const auto& k = kernels_for(isa);
    const std::vector<cplx> x{{0, 1}, {0, 1}, {0, 1}};
    const std::vector<cplx> y{{1, 0}, {1, 0}, {1, 0}};
    const cplx d = k.cdotc(x.data(), y.data(), 3);
    CHECK(d.real() == doctest::Approx(0.0));
    CHECK(d.imag() == doctest::Approx(-3.0));
  }
}

TEST_CASE("unknown variants are rejected") {
  bool have_neon = false;
  for (Isa isa : available_isas()) have_neon |= isa == Isa::neon;
  if (!have_neon) CHECK_THROWS_AS(kernels_for(Isa::neon), std::invalid_argument);
}
