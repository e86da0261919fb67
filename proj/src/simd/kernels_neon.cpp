// AArch64 only; NEON is part of the base ISA there, so no runtime check.
#include "qdense/simd.hpp"

#include <arm_neon.h>

#include <algorithm>
#include <cmath>

namespace qdense::simd {
namespace {

// One float64x2_t holds a single complex value (re, im).

inline float64x2_t load1(const cplx* p) { return vld1q_f64(reinterpret_cast<const double*>(p)); }
inline void store1(cplx* p, float64x2_t v) { vst1q_f64(reinterpret_cast<double*>(p), v); }

inline float64x2_t cmul(cplx a, float64x2_t x) {
  const float64x2_t swapped = vextq_f64(x, x, 1);  // (xi, xr)
  const float64x2_t ar = vdupq_n_f64(a.real());
  const float64x2_t ai_signed = {-a.imag(), a.imag()};
  return vfmaq_f64(vmulq_f64(ai_signed, swapped), ar, x);
}

void caxpy_neon(cplx a, const cplx* x, cplx* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) store1(y + i, vaddq_f64(load1(y + i), cmul(a, load1(x + i))));
}

void cscale_neon(cplx a, const cplx* x, cplx* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) store1(y + i, cmul(a, load1(x + i)));
}

cplx cdotc_neon(const cplx* x, const cplx* y, std::size_t n) {
  float64x2_t acc_re = vdupq_n_f64(0.0);
  float64x2_t acc_im = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const float64x2_t xv = load1(x + i);
    const float64x2_t yv = load1(y + i);
    acc_re = vfmaq_f64(acc_re, xv, yv);
    acc_im = vfmaq_f64(acc_im, xv, vextq_f64(yv, yv, 1));
  }
  return {vaddvq_f64(acc_re), vgetq_lane_f64(acc_im, 0) - vgetq_lane_f64(acc_im, 1)};
}

double norm_sq_neon(const cplx* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const float64x2_t xv = load1(x + i);
    acc = vfmaq_f64(acc, xv, xv);
  }
  return vaddvq_f64(acc);
}

double max_abs_diff_neon(const cplx* x, const cplx* y, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const float64x2_t d = vsubq_f64(load1(x + i), load1(y + i));
    m = std::max(m, vaddvq_f64(vmulq_f64(d, d)));
  }
  return std::sqrt(m);
}

}  // namespace

const KernelTable& neon_kernels() {
  static const KernelTable table{Isa::neon,  "neon",       caxpy_neon,       cscale_neon,
                                 cdotc_neon, norm_sq_neon, max_abs_diff_neon};
  return table;
}

}  // namespace qdense::simd
