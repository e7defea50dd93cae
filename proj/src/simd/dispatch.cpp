#include <cstdlib>
#include <cstring>

#include "chafee/error.hpp"
#include "simd/kernels_internal.hpp"

namespace chafee::simd {

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

const KernelTable& scalar_kernels() noexcept { return detail::kScalarTable; }

const KernelTable* avx2_kernels() noexcept {
#if defined(CHAFEE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &detail::kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept {
  static const KernelTable* table = [] {
    const char* env = std::getenv("CHAFEE_ISA");
    if (env != nullptr && std::strcmp(env, "scalar") == 0) return &scalar_kernels();
    const KernelTable* wide = avx2_kernels();
    return wide != nullptr ? wide : &scalar_kernels();
  }();
  return *table;
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorKind::Dimension, "dot: length mismatch");
  return active().dot(x.data(), y.data(), x.size());
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) fail(ErrorKind::Dimension, "axpy: length mismatch");
  active().axpy(a, x.data(), y.data(), x.size());
}

bool all_bounded(std::span<const double> x, double bound) {
  return active().all_bounded(x.data(), x.size(), bound);
}

}  // namespace chafee::simd
