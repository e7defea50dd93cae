#include <cmath>

#include "simd/kernels_internal.hpp"

namespace chafee::simd::detail {
namespace {

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void cubic_rhs(const double* u, const double* noise, double dt, double sigma, double* out,
               std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double ui = u[i];
    out[i] = ui - ui * ui * ui * dt + sigma * noise[i];
  }
}

void variation_rhs(const double* v, const double* u, double dt, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = v[i] - 3.0 * u[i] * u[i] * v[i] * dt;
}

void combine_rows(const double* rows, std::size_t nrows, std::size_t n, const double* coeffs,
                  double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
  for (std::size_t j = 0; j < nrows; ++j) {
    const double c = coeffs[j];
    const double* row = rows + j * n;
    for (std::size_t i = 0; i < n; ++i) out[i] += c * row[i];
  }
}

void project_rows(const double* rows, std::size_t nrows, std::size_t n, const double* v,
                  double* out) {
  for (std::size_t j = 0; j < nrows; ++j) out[j] = dot(rows + j * n, v, n);
}

bool all_bounded(const double* x, std::size_t n, double bound) {
  for (std::size_t i = 0; i < n; ++i)
    if (!(std::fabs(x[i]) <= bound)) return false;
  return true;
}

}  // namespace

const KernelTable kScalarTable{
    Isa::Scalar, dot, axpy, cubic_rhs, variation_rhs, combine_rows, project_rows, all_bounded,
};

}  // namespace chafee::simd::detail
