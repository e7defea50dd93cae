#pragma once

// Small dense and tridiagonal linear algebra used by the solvers.

#include <cstddef>
#include <span>
#include <vector>

namespace chafee::linalg {

/// Pre-factored symmetric tridiagonal system (no pivoting). Intended for the
/// diagonally dominant resolvent I - dt*A; throws SingularStep when a pivot
/// collapses.
class TridiagonalFactor {
public:
  TridiagonalFactor() = default;
  TridiagonalFactor(std::span<const double> diag, std::span<const double> off);

  std::size_t size() const noexcept { return inv_pivot_.size(); }
  void solve_in_place(std::span<double> x) const;

private:
  std::vector<double> off_;
  std::vector<double> inv_pivot_;
  std::vector<double> upper_;  // c'_i = off_i / pivot_i
};

/// LU with partial pivoting for a general tridiagonal matrix. Used where the
/// matrix may be indefinite (Newton Jacobians, shifted inverse iteration).
class PivotedTridiagonalLU {
public:
  PivotedTridiagonalLU(std::span<const double> sub, std::span<const double> diag,
                       std::span<const double> super);

  std::size_t size() const noexcept { return d_.size(); }
  /// Smallest |U_ii|; zero means exactly singular.
  double min_abs_pivot() const noexcept { return min_pivot_; }
  void solve_in_place(std::span<double> x) const;

private:
  std::vector<double> dl_, d_, du_, du2_;
  std::vector<unsigned char> swapped_;
  double min_pivot_ = 0.0;
};

/// Modified Gram-Schmidt (two passes) on `count` row vectors of length `n`
/// stored contiguously, with inner product weight * sum(x*y). Returns the
/// diagonal of R. Throws DegenerateBundle when projection leaves less than
/// `rel_tol` of a vector's norm, or the norm is zero or not finite.
std::vector<double> orthonormalize_rows(std::span<double> rows, std::size_t count, std::size_t n,
                                        double weight, double rel_tol = 1e-12);

}  // namespace chafee::linalg
