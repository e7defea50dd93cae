#pragma once

// Truncated Q-Wiener noise. Q has eigenvalues q_1..q_M; its eigenfields b_j
// are b_j = sum_k O(j,k) e'_k for j <= D (an orthonormal mix of the first D
// sine modes) and b_j = e'_j for D < j <= M. Modes beyond M carry no noise.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "chafee/spectral.hpp"

namespace chafee {

struct CovarianceSpec {
  std::size_t M = 0;
  std::size_t D = 0;
  std::vector<double> q;    // M entries
  std::vector<double> mix;  // D x D row-major
  double decay_exponent = -0.75;

  static CovarianceSpec identity(std::size_t M, std::size_t D, double q_all = 1.0);
  double q_max() const;
  double trace() const;

  bool operator==(const CovarianceSpec&) const = default;
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;
  /// sum_{j <= M} q_j (lambda'_j)^gamma; the tail of the infinite series is
  /// not checkable, only the truncation.
  double decay_sum = 0.0;
  std::string note;
};

ValidationReport validate(const CovarianceSpec& spec, double L);

/// Mixing from a QR of a seeded Gaussian D x D matrix (R with positive
/// diagonal), q uniform in (0, 1] rescaled so max q = 1.
CovarianceSpec random_spec(std::size_t M, std::size_t D, std::uint64_t seed);

/// Independent normal stream keyed by (master_seed, stream_index). Copying a
/// stream replays the same sequence.
class RngStream {
public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

  double normal() { ++draws_; return normal_(engine_); }
  void normals(std::span<double> out) {
    for (auto& x : out) x = normal();
  }

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_index() const noexcept { return stream_index_; }
  std::uint64_t draws() const noexcept { return draws_; }

private:
  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Precomputed noise eigenfields b_j sampled on the grid, scaled by sqrt(q_j).
class NoiseField {
public:
  NoiseField(const CovarianceSpec& spec, const Grid& grid);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t modes() const noexcept { return M_; }
  /// Row j-1 is b_j(x_n) (unscaled).
  std::span<const double> eigenfield(std::size_t j) const;
  std::span<const double> eigenfields() const noexcept { return b_; }

  /// out = sqrt(dt) * sum_j sqrt(q_j) W_j b_j with W_j drawn from rng.
  void sample(double dt, RngStream& rng, std::span<double> out) const;
  /// Same with caller-provided normals (length M).
  void synthesize(double dt, std::span<const double> normals, std::span<double> out) const;

private:
  Grid grid_;
  std::size_t M_;
  std::vector<double> b_;       // M x N
  std::vector<double> sqrt_q_;  // M
};

std::vector<double> sample_increment(const CovarianceSpec& spec, const Grid& grid, double dt,
                                     RngStream& rng);

/// m x m matrix sum_n q_n <e_i, b_n>_dx <e_j, b_n>_dx, row-major, exactly
/// symmetric.
std::vector<double> covariance_in_basis(const CovarianceSpec& spec, const SpectralBasis& basis,
                                        const Grid& grid);

}  // namespace chafee
