#pragma once

// Hot inner loops of the solver, in a scalar reference version and an
// AVX2/FMA version. The active table is chosen once at startup from CPUID;
// setting CHAFEE_ISA=scalar in the environment forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace chafee::simd {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa) noexcept;

struct KernelTable {
  Isa isa;
  // sum_i x[i]*y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a*x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // out = u - u^3*dt + sigma*noise
  void (*cubic_rhs)(const double* u, const double* noise, double dt, double sigma, double* out,
                    std::size_t n);
  // out = v - 3*u^2*v*dt
  void (*variation_rhs)(const double* v, const double* u, double dt, double* out, std::size_t n);
  // out[i] = sum_j coeffs[j]*rows[j*n + i]
  void (*combine_rows)(const double* rows, std::size_t nrows, std::size_t n, const double* coeffs,
                       double* out);
  // out[j] = sum_i rows[j*n + i]*v[i]
  void (*project_rows)(const double* rows, std::size_t nrows, std::size_t n, const double* v,
                       double* out);
  // true iff every |x[i]| <= bound (NaN fails)
  bool (*all_bounded)(const double* x, std::size_t n, double bound);
};

const KernelTable& scalar_kernels() noexcept;
// nullptr when the binary was built without AVX2 or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels() noexcept;
const KernelTable& active() noexcept;

// Span conveniences over the active table.
double dot(std::span<const double> x, std::span<const double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);
bool all_bounded(std::span<const double> x, double bound);

}  // namespace chafee::simd
