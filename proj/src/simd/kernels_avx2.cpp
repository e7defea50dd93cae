// Compiled with -mavx2 -mfma; only reached after a CPUID check.

#include <immintrin.h>

#include <cmath>

#include "simd/kernels_internal.hpp"

namespace chafee::simd::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void cubic_rhs(const double* u, const double* noise, double dt, double sigma, double* out,
               std::size_t n) {
  const __m256d vdt = _mm256_set1_pd(dt);
  const __m256d vsig = _mm256_set1_pd(sigma);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d ui = _mm256_loadu_pd(u + i);
    const __m256d cube_dt = _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(ui, ui), ui), vdt);
    const __m256d r = _mm256_fmadd_pd(vsig, _mm256_loadu_pd(noise + i), _mm256_sub_pd(ui, cube_dt));
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) {
    const double ui = u[i];
    out[i] = ui - ui * ui * ui * dt + sigma * noise[i];
  }
}

void variation_rhs(const double* v, const double* u, double dt, double* out, std::size_t n) {
  const __m256d k = _mm256_set1_pd(3.0 * dt);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d ui = _mm256_loadu_pd(u + i);
    const __m256d vi = _mm256_loadu_pd(v + i);
    const __m256d damp = _mm256_mul_pd(_mm256_mul_pd(ui, ui), k);
    _mm256_storeu_pd(out + i, _mm256_fnmadd_pd(damp, vi, vi));
  }
  for (; i < n; ++i) out[i] = v[i] - 3.0 * u[i] * u[i] * v[i] * dt;
}

// Register-blocked over 8 output lanes; every row is streamed once per block.
void combine_rows(const double* rows, std::size_t nrows, std::size_t n, const double* coeffs,
                  double* out) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    for (std::size_t j = 0; j < nrows; ++j) {
      const __m256d c = _mm256_set1_pd(coeffs[j]);
      const double* row = rows + j * n + i;
      a0 = _mm256_fmadd_pd(c, _mm256_loadu_pd(row), a0);
      a1 = _mm256_fmadd_pd(c, _mm256_loadu_pd(row + 4), a1);
    }
    _mm256_storeu_pd(out + i, a0);
    _mm256_storeu_pd(out + i + 4, a1);
  }
  for (; i + 4 <= n; i += 4) {
    __m256d a0 = _mm256_setzero_pd();
    for (std::size_t j = 0; j < nrows; ++j)
      a0 = _mm256_fmadd_pd(_mm256_set1_pd(coeffs[j]), _mm256_loadu_pd(rows + j * n + i), a0);
    _mm256_storeu_pd(out + i, a0);
  }
  for (; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < nrows; ++j) s += coeffs[j] * rows[j * n + i];
    out[i] = s;
  }
}

void project_rows(const double* rows, std::size_t nrows, std::size_t n, const double* v,
                  double* out) {
  for (std::size_t j = 0; j < nrows; ++j) out[j] = dot(rows + j * n, v, n);
}

bool all_bounded(const double* x, std::size_t n, double bound) {
  const __m256d vb = _mm256_set1_pd(bound);
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d ok = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_andnot_pd(sign, _mm256_loadu_pd(x + i));
    ok = _mm256_and_pd(ok, _mm256_cmp_pd(a, vb, _CMP_LE_OQ));
  }
  if (_mm256_movemask_pd(ok) != 0xF) return false;
  for (; i < n; ++i)
    if (!(std::fabs(x[i]) <= bound)) return false;
  return true;
}

}  // namespace

const KernelTable kAvx2Table{
    Isa::Avx2, dot, axpy, cubic_rhs, variation_rhs, combine_rows, project_rows, all_bounded,
};

}  // namespace chafee::simd::detail
