#include "qdense/simd.hpp"

#include <cstdlib>
#include <stdexcept>

namespace qdense::simd {
namespace {

bool cpu_has(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(QDENSE_WITH_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(QDENSE_WITH_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& select() {
  const auto isas = available_isas();
  if (const char* env = std::getenv("QDENSE_SIMD")) {
    const std::string_view want(env);
    for (Isa isa : isas)
      if (isa_name(isa) == want) return kernels_for(isa);
  }
  return kernels_for(isas.back());
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon})
    if (cpu_has(isa)) out.push_back(isa);
  return out;
}

const KernelTable& kernels_for(Isa isa) {
  if (!cpu_has(isa)) throw std::invalid_argument("simd variant not available: " + std::string(isa_name(isa)));
  switch (isa) {
#if defined(QDENSE_WITH_AVX2)
    case Isa::avx2: return avx2_kernels();
#endif
#if defined(QDENSE_WITH_NEON)
    case Isa::neon: return neon_kernels();
#endif
    default: return scalar_kernels();
  }
}

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace qdense::simd
