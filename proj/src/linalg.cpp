#include "chafee/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "chafee/error.hpp"
#include "chafee/simd.hpp"

namespace chafee::linalg {

TridiagonalFactor::TridiagonalFactor(std::span<const double> diag, std::span<const double> off)
    : off_(off.begin(), off.end()), inv_pivot_(diag.size()), upper_(diag.size(), 0.0) {
  const std::size_t n = diag.size();
  if (n == 0 || off.size() + 1 != n) fail(ErrorKind::Dimension, "tridiagonal: bad band sizes");
  double pivot = diag[0];
  for (std::size_t i = 0;; ++i) {
    if (!(std::fabs(pivot) > 1e-300) || !std::isfinite(pivot))
      fail(ErrorKind::SingularStep, "tridiagonal: zero pivot at row " + std::to_string(i));
    inv_pivot_[i] = 1.0 / pivot;
    if (i + 1 == n) break;
    upper_[i] = off_[i] * inv_pivot_[i];
    pivot = diag[i + 1] - off_[i] * upper_[i];
  }
}

void TridiagonalFactor::solve_in_place(std::span<double> x) const {
  const std::size_t n = inv_pivot_.size();
  if (x.size() != n) fail(ErrorKind::Dimension, "tridiagonal solve: rhs length mismatch");
  x[0] *= inv_pivot_[0];
  for (std::size_t i = 1; i < n; ++i) x[i] = (x[i] - off_[i - 1] * x[i - 1]) * inv_pivot_[i];
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= upper_[i] * x[i + 1];
}

PivotedTridiagonalLU::PivotedTridiagonalLU(std::span<const double> sub,
                                           std::span<const double> diag,
                                           std::span<const double> super)
    : dl_(sub.begin(), sub.end()),
      d_(diag.begin(), diag.end()),
      du_(super.begin(), super.end()),
      du2_(diag.size() > 2 ? diag.size() - 2 : 0, 0.0),
      swapped_(diag.size() > 0 ? diag.size() - 1 : 0, 0) {
  const std::size_t n = d_.size();
  if (n == 0 || dl_.size() + 1 != n || du_.size() + 1 != n)
    fail(ErrorKind::Dimension, "tridiagonal LU: bad band sizes");
  // Same elimination order as LAPACK dgttrf.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::fabs(d_[i]) >= std::fabs(dl_[i])) {
      if (d_[i] != 0.0) {
        const double f = dl_[i] / d_[i];
        dl_[i] = f;
        d_[i + 1] -= f * du_[i];
      }
    } else {
      const double f = d_[i] / dl_[i];
      d_[i] = dl_[i];
      dl_[i] = f;
      const double t = du_[i];
      du_[i] = d_[i + 1];
      d_[i + 1] = t - f * d_[i + 1];
      if (i + 2 < n) {
        du2_[i] = du_[i + 1];
        du_[i + 1] = -f * du_[i + 1];
      }
      swapped_[i] = 1;
    }
  }
  min_pivot_ = std::numeric_limits<double>::infinity();
  for (double p : d_) min_pivot_ = std::min(min_pivot_, std::fabs(p));
}

void PivotedTridiagonalLU::solve_in_place(std::span<double> x) const {
  const std::size_t n = d_.size();
  if (x.size() != n) fail(ErrorKind::Dimension, "tridiagonal LU solve: rhs length mismatch");
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (swapped_[i]) {
      const double t = x[i];
      x[i] = x[i + 1];
      x[i + 1] = t - dl_[i] * x[i];
    } else {
      x[i + 1] -= dl_[i] * x[i];
    }
  }
  // Exactly singular pivots are nudged so inverse iteration can proceed.
  auto pivot = [&](std::size_t i) {
    const double p = d_[i];
    return p != 0.0 ? p : std::numeric_limits<double>::epsilon();
  };
  x[n - 1] /= pivot(n - 1);
  if (n > 1) x[n - 2] = (x[n - 2] - du_[n - 2] * x[n - 1]) / pivot(n - 2);
  for (std::size_t i = n - 2; i-- > 0;)
    x[i] = (x[i] - du_[i] * x[i + 1] - du2_[i] * x[i + 2]) / pivot(i);
}

std::vector<double> orthonormalize_rows(std::span<double> rows, std::size_t count, std::size_t n,
                                        double weight, double rel_tol) {
  if (rows.size() < count * n) fail(ErrorKind::Dimension, "orthonormalize: storage too small");
  const auto& k = simd::active();
  std::vector<double> scale(count, 0.0);
  for (std::size_t j = 0; j < count; ++j) {
    double* vj = rows.data() + j * n;
    const double raw = std::sqrt(weight * k.dot(vj, vj, n));
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        const double* vi = rows.data() + i * n;
        k.axpy(-weight * k.dot(vi, vj, n), vi, vj, n);
      }
    }
    const double norm = std::sqrt(weight * k.dot(vj, vj, n));
    if (!(norm > rel_tol * raw) || !(norm > 0.0) || !std::isfinite(norm))
      throw Error(ErrorKind::DegenerateBundle,
                  "orthonormalize: vector " + std::to_string(j) + " collapsed (norm " +
                      std::to_string(norm) + ")");
    const double inv = 1.0 / norm;
    for (std::size_t i = 0; i < n; ++i) vj[i] *= inv;
    scale[j] = norm;
  }
  return scale;
}

}  // namespace chafee::linalg
