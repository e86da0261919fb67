#pragma once

// Flat complex-array kernels with a scalar reference and vectorized variants.
// All variants compute the same quantities; results may differ in the last
// few ulps because reductions are reassociated across lanes.

#include <complex>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace qdense::simd {

using cplx = std::complex<double>;

enum class Isa { scalar, avx2, neon };

struct KernelTable {
  Isa isa;
  const char* name;
  // y[i] += a * x[i]
  void (*caxpy)(cplx a, const cplx* x, cplx* y, std::size_t n);
  // y[i] = a * x[i]
  void (*cscale)(cplx a, const cplx* x, cplx* y, std::size_t n);
  // sum_i conj(x[i]) * y[i]
  cplx (*cdotc)(const cplx* x, const cplx* y, std::size_t n);
  // sum_i |x[i]|^2
  double (*norm_sq)(const cplx* x, std::size_t n);
  // max_i |x[i] - y[i]|
  double (*max_abs_diff)(const cplx* x, const cplx* y, std::size_t n);
};

const KernelTable& scalar_kernels();
#if defined(QDENSE_WITH_AVX2)
const KernelTable& avx2_kernels();
#endif
#if defined(QDENSE_WITH_NEON)
const KernelTable& neon_kernels();
#endif

/// Variants compiled in and supported by the running CPU, scalar first.
std::vector<Isa> available_isas();

/// Table for a specific variant; throws std::invalid_argument if unavailable.
const KernelTable& kernels_for(Isa isa);

/// The table used by the library. Chosen once: the QDENSE_SIMD environment
/// variable ("scalar", "avx2", "neon") wins when that variant is available,
/// otherwise the widest supported variant.
const KernelTable& active();

std::string_view isa_name(Isa isa);

}  // namespace qdense::simd
