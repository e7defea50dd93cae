#include "chafee/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "chafee/error.hpp"
#include "chafee/linalg.hpp"
#include "chafee/simd.hpp"

namespace chafee {

Grid Grid::make(double L, std::size_t N) {
  if (!(L > 0.0) || !std::isfinite(L)) fail(ErrorKind::InvalidGrid, "grid: L must be positive");
  if (N == 0) fail(ErrorKind::InvalidGrid, "grid: N must be at least 1");
  return Grid{L, N, L / static_cast<double>(N + 1)};
}

std::vector<double> Grid::coordinates() const {
  std::vector<double> xs(N);
  for (std::size_t n = 0; n < N; ++n) xs[n] = x(n + 1);
  return xs;
}

// --- Potential ---------------------------------------------------------------

Potential::Potential(const Grid& grid, std::vector<double> samples, std::string descriptor)
    : grid_(grid), samples_(std::move(samples)), descriptor_(std::move(descriptor)) {
  if (samples_.size() != grid_.N)
    fail(ErrorKind::Dimension, "potential: expected " + std::to_string(grid_.N) +
                                   " samples, got " + std::to_string(samples_.size()));
  for (std::size_t n = 0; n < samples_.size(); ++n) {
    if (!std::isfinite(samples_[n]) || samples_[n] < 0.0)
      fail(ErrorKind::Validation, "potential: sample " + std::to_string(n + 1) +
                                      " is negative or not finite (" +
                                      std::to_string(samples_[n]) + ")");
  }
}

Potential Potential::zero(const Grid& grid) {
  return Potential(grid, std::vector<double>(grid.N, 0.0), "zero");
}

Potential Potential::constant(const Grid& grid, double c) {
  std::ostringstream tag;
  tag.precision(17);
  tag << "constant:" << c;
  return Potential(grid, std::vector<double>(grid.N, c), tag.str());
}

Potential Potential::cos3plus1(const Grid& grid) {
  return from_function(grid, [](double x) { return std::cos(3.0 * x) + 1.0; }, "cos3plus1");
}

Potential Potential::linear(const Grid& grid) {
  const double L = grid.L;
  return from_function(grid, [L](double x) { return x / L; }, "linear");
}

Potential Potential::custom(const Grid& grid, std::vector<double> samples, std::string descriptor) {
  return Potential(grid, std::move(samples), std::move(descriptor));
}

Potential Potential::from_function(const Grid& grid, const std::function<double(double)>& g,
                                   std::string descriptor) {
  std::vector<double> s(grid.N);
  for (std::size_t n = 0; n < grid.N; ++n) s[n] = g(grid.x(n + 1));
  return Potential(grid, std::move(s), std::move(descriptor));
}

Potential Potential::from_file(const Grid& grid, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "potential: cannot open " + path.string());
  std::vector<double> s;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      s.push_back(std::stod(line));
    } catch (const std::exception&) {
      fail(ErrorKind::Validation, "potential: bad sample '" + line + "' in " + path.string());
    }
  }
  return Potential(grid, std::move(s), "file:" + path.string());
}

Potential Potential::from_descriptor(const Grid& grid, const std::string& d) {
  if (d == "zero") return zero(grid);
  if (d == "cos3plus1") return cos3plus1(grid);
  if (d == "linear") return linear(grid);
  if (d.rfind("constant:", 0) == 0) {
    try {
      return constant(grid, std::stod(d.substr(9)));
    } catch (const std::invalid_argument&) {
      fail(ErrorKind::Validation, "potential: bad constant in '" + d + "'");
    }
  }
  if (d.rfind("file:", 0) == 0) return from_file(grid, d.substr(5));
  fail(ErrorKind::Validation, "potential: unknown descriptor '" + d + "'");
}

double Potential::min() const { return *std::min_element(samples_.begin(), samples_.end()); }

double Potential::mean() const {
  double s = 0.0;
  for (double v : samples_) s += v;
  return s / static_cast<double>(samples_.size());
}

double Potential::boundary_mean() const {
  const auto& g = samples_;
  const std::size_t N = g.size();
  double s = 0.0;
  for (double v : g) s += v;
  const double g0 = N >= 2 ? 2.0 * g[0] - g[1] : g[0];
  const double g1 = N >= 2 ? 2.0 * g[N - 1] - g[N - 2] : g[0];
  return (s + 0.5 * (g0 + g1)) / static_cast<double>(N + 1);
}

// --- operators -----------------------------------------------------------------

std::vector<double> TridiagonalOperator::apply(std::span<const double> v) const {
  std::vector<double> out(v.size());
  apply(v, out);
  return out;
}

void TridiagonalOperator::apply(std::span<const double> v, std::span<double> out) const {
  const std::size_t n = diag.size();
  if (v.size() != n || out.size() != n) fail(ErrorKind::Dimension, "operator: length mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    double s = diag[i] * v[i];
    if (i > 0) s += off[i - 1] * v[i - 1];
    if (i + 1 < n) s += off[i] * v[i + 1];
    out[i] = s;
  }
}

std::span<const double> SpectralBasis::vector(std::size_t k) const {
  if (k == 0 || k > m) fail(ErrorKind::Truncation, "basis: mode " + std::to_string(k) + " not retained");
  return std::span<const double>(vectors).subspan((k - 1) * grid.N, grid.N);
}

double discrete_laplacian_eigenvalue(const Grid& grid, std::size_t k) {
  const double theta = static_cast<double>(k) * std::numbers::pi / static_cast<double>(grid.N + 1);
  return 2.0 / (grid.dx * grid.dx) * (1.0 - std::cos(theta));
}

std::vector<double> sine_mode(const Grid& grid, std::size_t k) {
  std::vector<double> e(grid.N);
  const double amp = std::sqrt(2.0 / grid.L);
  for (std::size_t n = 0; n < grid.N; ++n)
    e[n] = amp * std::sin(static_cast<double>(k) * std::numbers::pi * static_cast<double>(n + 1) /
                          static_cast<double>(grid.N + 1));
  return e;
}

TridiagonalOperator build_laplacian(const Grid& grid) {
  if (grid.N < 2) fail(ErrorKind::InvalidGrid, "laplacian: need N >= 2");
  const double inv = 1.0 / (grid.dx * grid.dx);
  return TridiagonalOperator{std::vector<double>(grid.N, -2.0 * inv),
                             std::vector<double>(grid.N - 1, inv)};
}

TridiagonalOperator build_schrodinger(const Grid& grid, const Potential& g, double alpha) {
  if (g.samples().size() != grid.N)
    fail(ErrorKind::Dimension, "schrodinger: potential sampled on a different grid");
  TridiagonalOperator op = build_laplacian(grid);
  for (std::size_t n = 0; n < grid.N; ++n) op.diag[n] = op.diag[n] - g.samples()[n] + alpha;
  return op;
}

// --- eigensolver ----------------------------------------------------------------

namespace {

// Number of eigenvalues of the symmetric tridiagonal (d, e) strictly below x.
std::size_t sturm_count(std::span<const double> d, std::span<const double> e2, double x,
                        double pivmin) {
  std::size_t count = 0;
  double q = d[0] - x;
  if (std::fabs(q) < pivmin) q = -pivmin;
  if (q < 0.0) ++count;
  for (std::size_t i = 1; i < d.size(); ++i) {
    q = d[i] - x - e2[i - 1] / q;
    if (std::fabs(q) < pivmin) q = -pivmin;
    if (q < 0.0) ++count;
  }
  return count;
}

// Deterministic start vector with no special alignment to any sine mode.
std::vector<double> start_vector(std::size_t n, std::size_t k) {
  std::vector<double> v(n);
  std::uint64_t s = 0x9E3779B97F4A7C15ULL ^ (k * 0xBF58476D1CE4E5B9ULL);
  for (auto& x : v) {
    s ^= s >> 30;
    s *= 0xBF58476D1CE4E5B9ULL;
    s ^= s >> 27;
    s *= 0x94D049BB133111EBULL;
    s ^= s >> 31;
    x = 0.5 + static_cast<double>(s >> 11) * 0x1.0p-53;
  }
  return v;
}

}  // namespace

SpectralBasis eigendecompose(const TridiagonalOperator& op, std::size_t m, const Grid& grid) {
  const std::size_t n = op.size();
  if (n != grid.N || op.off.size() + 1 != n)
    fail(ErrorKind::Dimension, "eigendecompose: operator does not match grid");
  if (m == 0 || m > n)
    fail(ErrorKind::Truncation, "eigendecompose: m=" + std::to_string(m) + " outside 1.." +
                                    std::to_string(n));

  // Work on T = -op.
  std::vector<double> d(n), e(n - 1), e2(n - 1);
  for (std::size_t i = 0; i < n; ++i) d[i] = -op.diag[i];
  for (std::size_t i = 0; i + 1 < n; ++i) {
    e[i] = -op.off[i];
    e2[i] = e[i] * e[i];
  }

  double lo = d[0], hi = d[0], scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::fabs(e[i - 1]) : 0.0) + (i + 1 < n ? std::fabs(e[i]) : 0.0);
    lo = std::min(lo, d[i] - r);
    hi = std::max(hi, d[i] + r);
    scale = std::max(scale, std::fabs(d[i]) + r);
  }
  const double eps = std::numeric_limits<double>::epsilon();
  const double pivmin = std::max(std::numeric_limits<double>::min(), eps * eps * scale * scale);

  SpectralBasis basis;
  basis.grid = grid;
  basis.m = m;
  basis.lambdas.resize(m);
  basis.lambdas_prime.resize(m);
  basis.lambdas_discrete.resize(m);
  basis.vectors.assign(m * n, 0.0);

  for (std::size_t k = 0; k < m; ++k) {
    double a = lo, b = hi;
    int iter = 0;
    while (b - a > 2.0 * eps * std::max(std::fabs(a), std::fabs(b)) + pivmin) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      if (sturm_count(d, e2, mid, pivmin) > k)
        b = mid;
      else
        a = mid;
      if (++iter > 400)
        throw Error(ErrorKind::Numerical,
                    "eigendecompose: bisection failed to converge for eigenvalue " +
                        std::to_string(k + 1));
    }
    basis.lambdas[k] = 0.5 * (a + b);
    const double kk = static_cast<double>(k + 1) * std::numbers::pi / grid.L;
    basis.lambdas_prime[k] = kk * kk;
    basis.lambdas_discrete[k] = discrete_laplacian_eigenvalue(grid, k + 1);
  }

  const auto& kern = simd::active();
  std::vector<double> shifted(n);
  for (std::size_t k = 0; k < m; ++k) {
    const double lambda = basis.lambdas[k];
    for (std::size_t i = 0; i < n; ++i) shifted[i] = d[i] - lambda;
    const linalg::PivotedTridiagonalLU lu(e, shifted, e);

    std::span<double> v(basis.vectors.data() + k * n, n);
    const std::vector<double> start = start_vector(n, k);
    std::copy(start.begin(), start.end(), v.begin());
    for (int it = 0; it < 4; ++it) {
      lu.solve_in_place(v);
      // Remove components along already accepted eigenvectors.
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < k; ++j) {
          const double* vj = basis.vectors.data() + j * n;
          kern.axpy(-kern.dot(vj, v.data(), n) * grid.dx, vj, v.data(), n);
        }
      }
      const double norm = std::sqrt(grid.dx * kern.dot(v.data(), v.data(), n));
      if (!(norm > 0.0) || !std::isfinite(norm))
        throw Error(ErrorKind::Numerical,
                    "eigendecompose: inverse iteration failed for eigenvalue " + std::to_string(k + 1));
      for (auto& x : v) x /= norm;
    }

    const std::vector<double> ref = sine_mode(grid, k + 1);
    const double align = grid.dx * kern.dot(v.data(), ref.data(), n);
    bool flip = false;
    if (std::fabs(align) >= 1e-12) {
      flip = align < 0.0;
    } else {
      double vmax = 0.0;
      for (double x : v) vmax = std::max(vmax, std::fabs(x));
      for (double x : v) {
        if (std::fabs(x) > 1e-14 * vmax) {
          flip = x < 0.0;
          break;
        }
      }
    }
    if (flip)
      for (auto& x : v) x = -x;
  }
  return basis;
}

SpectralBasis spectral_basis(const Potential& g, std::size_t m) {
  return eigendecompose(build_schrodinger(g.grid(), g, 0.0), m, g.grid());
}

double inner_dx(std::span<const double> v, std::span<const double> w, const Grid& grid) {
  if (v.size() != w.size() || v.size() != grid.N)
    fail(ErrorKind::Dimension, "inner_dx: length mismatch");
  return grid.dx * simd::active().dot(v.data(), w.data(), v.size());
}

double norm_dx(std::span<const double> v, const Grid& grid) {
  return std::sqrt(inner_dx(v, v, grid));
}

std::size_t count_sign_changes(std::span<const double> v) {
  std::size_t changes = 0;
  int last = 0;
  for (double x : v) {
    const int s = (x > 0.0) - (x < 0.0);
    if (s == 0) continue;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  if (last == 0) fail(ErrorKind::DegenerateInput, "count_sign_changes: all-zero vector");
  return changes;
}

double asymptotic_gap(const SpectralBasis& basis, const Potential& g, std::size_t k,
                      LaplacianReference ref) {
  if (k == 0 || k > basis.m) fail(ErrorKind::Truncation, "asymptotic_gap: index out of range");
  const double reference = ref == LaplacianReference::Continuum ? basis.lambdas_prime[k - 1]
                                                                : basis.lambdas_discrete[k - 1];
  const double mean = ref == LaplacianReference::Continuum ? g.mean() : g.boundary_mean();
  return basis.lambdas[k - 1] - reference - mean;
}

}  // namespace chafee
