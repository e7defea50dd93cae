#pragma once

// Finite-time Lyapunov exponents L_k(t) = (1/t) log |v_1 ^ ... ^ v_k|(t) for
// tangent vectors driven by the first-variation equation. The k-volume is
// tracked through QR (Gram-Schmidt) scale factors instead of Gram
// determinants.

#include <cstdint>
#include <span>
#include <vector>

#include "chafee/dynamics.hpp"
#include "chafee/noise.hpp"
#include "chafee/spectral.hpp"

namespace chafee {

enum class InnerProduct { Dx, Euclidean };

struct TangentBundle {
  Grid grid;
  std::size_t k = 0;
  std::vector<double> vectors;  // k x N
  double log_volume = 0.0;
  InnerProduct product = InnerProduct::Dx;

  /// Orthonormalizes the given k vectors; the volume clock starts at zero.
  static TangentBundle from_vectors(const Grid& grid, std::vector<double> rows, std::size_t k,
                                    InnerProduct product = InnerProduct::Dx);
  /// e_1 .. e_k of the basis.
  static TangentBundle leading_modes(const SpectralBasis& basis, std::size_t k,
                                     InnerProduct product = InnerProduct::Dx);

  std::span<double> vector(std::size_t i) {
    return std::span<double>(vectors).subspan(i * grid.N, grid.N);
  }
  double weight() const noexcept { return product == InnerProduct::Dx ? grid.dx : 1.0; }
  /// Re-orthonormalizes in place and accumulates the log scale factors.
  void renormalize();
  /// log_volume plus the log k-volume of the current vectors, without
  /// modifying them.
  double current_log_volume() const;
};

struct FtleRecord {
  std::size_t k = 0;
  double alpha = 0.0;
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
  std::vector<double> times;
  std::vector<double> exponents;  // L_k(times[i])

  double final_value() const { return exponents.empty() ? 0.0 : exponents.back(); }
};

/// Exact propagator exp(A_alpha dt) of the linearization at u = 0, built from
/// the full eigenbasis. Test fixture for the frozen-zero base.
class FrozenLinearPropagator {
public:
  FrozenLinearPropagator(const Potential& g, double alpha, double dt);
  void apply(std::span<double> v) const;
  const SpectralBasis& basis() const noexcept { return basis_; }

private:
  SpectralBasis basis_;
  std::vector<double> growth_;
};

struct TangentOptions {
  int renorm_every = 10;
  /// Steps between recorded L_k(t) values.
  std::int64_t record_every = 1;
};

/// Frozen-zero base: v' = A_alpha v integrated exactly for `steps` steps.
FtleRecord evolve_tangents(TangentBundle& bundle, const FrozenLinearPropagator& base,
                           std::int64_t steps, double dt, const TangentOptions& opts);

/// Nonlinear base: advances `u` and the bundle together for cfg.nt steps at
/// constant alpha; tangents see -3u^2 along the path.
FtleRecord evolve_tangents(TangentBundle& bundle, std::span<double> u, const Potential& g,
                           double alpha, const NoiseField& noise, const SimConfig& cfg,
                           RngStream& rng, const TangentOptions& opts);

/// 20/(lambda_1 - alpha) below threshold, 50 otherwise.
double attractor_burn_in_time(double lambda1, double alpha);

/// Burn-in from a one-kick start (cfg.burn_in steps if positive, otherwise
/// attractor_burn_in_time), then L_k over cfg.nt steps from e_1..e_k.
FtleRecord ftle_on_attractor(const Potential& g, double alpha, const CovarianceSpec& spec,
                             const SimConfig& cfg, std::size_t k, RngStream& rng,
                             const TangentOptions& opts = {});

struct BoundReport {
  std::size_t k = 0;
  double alpha = 0.0;
  double bound = 0.0;               // sum_{j<=k} (alpha - lambda_j)
  double tolerance = 0.0;
  double violation_fraction = 0.0;  // members with any L_k(t) > bound + tol
  std::vector<double> violation_by_time;
  double max_any_time = 0.0;
  double max_final = 0.0;
  double mean_final = 0.0;
  double stderr_final = 0.0;
  double gap_to_bound = 0.0;        // bound - max_final
  double fraction_positive = 0.0;   // members with L_k(T) > 0
  std::size_t members = 0;
};

BoundReport bound_report(std::span<const FtleRecord> records, const SpectralBasis& basis,
                         double alpha, double tol = 0.02);

}  // namespace chafee
