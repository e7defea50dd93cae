#pragma once

// Finite-difference Dirichlet Laplacian and Schrodinger operator A = Lap - g
// on [0, L], their eigenpairs, and the discrete inner product
// <v, w>_dx = dx * sum v_n w_n shared by every other module.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace chafee {

/// N interior points of [0, L]; boundary values are implicit zeros.
struct Grid {
  double L = 0.0;
  std::size_t N = 0;
  double dx = 0.0;

  /// Throws InvalidGrid for L <= 0 or N == 0.
  static Grid make(double L, std::size_t N);

  /// Coordinate of interior point n (1-based, n = 1..N).
  double x(std::size_t n) const noexcept { return static_cast<double>(n) * dx; }
  std::vector<double> coordinates() const;

  bool operator==(const Grid&) const = default;
};

/// Sampled potential g(x_n) >= 0.
class Potential {
public:
  static Potential zero(const Grid& grid);
  static Potential constant(const Grid& grid, double c);
  /// cos(3x) + 1
  static Potential cos3plus1(const Grid& grid);
  /// x / L
  static Potential linear(const Grid& grid);
  static Potential custom(const Grid& grid, std::vector<double> samples,
                          std::string descriptor = "custom");
  static Potential from_function(const Grid& grid, const std::function<double(double)>& g,
                                 std::string descriptor = "custom");
  /// One sample per line, exactly N lines.
  static Potential from_file(const Grid& grid, const std::filesystem::path& path);
  /// `zero`, `constant:<c>`, `cos3plus1`, `linear`, `file:<path>`.
  static Potential from_descriptor(const Grid& grid, const std::string& descriptor);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> samples() const noexcept { return samples_; }
  const std::string& descriptor() const noexcept { return descriptor_; }
  double min() const;
  /// Arithmetic mean of the samples.
  double mean() const;
  /// Trapezoid rule over [0, L] with boundary values extrapolated linearly
  /// from the first and last two samples.
  double boundary_mean() const;

private:
  Potential(const Grid& grid, std::vector<double> samples, std::string descriptor);

  Grid grid_;
  std::vector<double> samples_;
  std::string descriptor_;
};

/// Symmetric tridiagonal matrix; one off-diagonal array serves both bands.
struct TridiagonalOperator {
  std::vector<double> diag;
  std::vector<double> off;

  std::size_t size() const noexcept { return diag.size(); }
  std::vector<double> apply(std::span<const double> v) const;
  void apply(std::span<const double> v, std::span<double> out) const;
};

struct SpectralBasis {
  Grid grid;
  std::size_t m = 0;
  /// Eigenvalues of -A, strictly ascending.
  std::vector<double> lambdas;
  /// m x N, row k is e_{k+1}, normalized so <e_i, e_j>_dx = delta_ij.
  std::vector<double> vectors;
  /// Continuum Laplacian eigenvalues (pi k / L)^2.
  std::vector<double> lambdas_prime;
  /// Discrete Laplacian eigenvalues (2/dx^2)(1 - cos(k pi / (N+1))).
  std::vector<double> lambdas_discrete;

  /// 1-based mode index.
  std::span<const double> vector(std::size_t k) const;
  double lambda(std::size_t k) const { return lambdas.at(k - 1); }
};

/// Closed-form discrete Dirichlet Laplacian eigenvalue mu_k.
double discrete_laplacian_eigenvalue(const Grid& grid, std::size_t k);
/// Sampled sine mode e'_k(x_n) = sqrt(2/L) sin(k pi x_n / L), unit in <.,.>_dx.
std::vector<double> sine_mode(const Grid& grid, std::size_t k);

TridiagonalOperator build_laplacian(const Grid& grid);
/// Lap - diag(g) + alpha I
TridiagonalOperator build_schrodinger(const Grid& grid, const Potential& g, double alpha);

/// First m eigenpairs of -op (op is A = Lap - g, so the returned values are
/// positive). Bisection on Sturm counts, then inverse iteration with
/// reorthogonalization. Each e_k is signed so that <e_k, e'_k>_dx >= 0, or,
/// when that product is below 1e-12, so that its first nonzero entry is
/// positive.
SpectralBasis eigendecompose(const TridiagonalOperator& op, std::size_t m, const Grid& grid);

/// Shorthand for eigendecompose(build_schrodinger(grid, g, 0), m, grid).
SpectralBasis spectral_basis(const Potential& g, std::size_t m);

double inner_dx(std::span<const double> v, std::span<const double> w, const Grid& grid);
double norm_dx(std::span<const double> v, const Grid& grid);

/// Strict sign alternations between consecutive nonzero entries.
std::size_t count_sign_changes(std::span<const double> v);

enum class LaplacianReference { Continuum, Discrete };

/// lambda_k - lambda'_k - mean(g). The discrete reference removes the
/// O(k^4 dx^2) finite-difference dispersion from the diagnostic and pairs it
/// with boundary_mean(), the limit of <g e_k, e_k>_dx for large k on the grid.
double asymptotic_gap(const SpectralBasis& basis, const Potential& g, std::size_t k,
                      LaplacianReference ref = LaplacianReference::Continuum);

}  // namespace chafee
