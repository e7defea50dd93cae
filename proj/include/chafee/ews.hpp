#pragma once

// Early-warning signs: the stationary covariance V_inf of the linearized
// system in the eigenbasis of A,
//   <V_inf e_i, e_j> = sigma^2 C_ij / (lambda_i + lambda_j - 2 alpha),
//   C_ij = sum_n q_n <e_i, b_n> <e_j, b_n>,
// its bilinear and pointwise forms, and the time-average estimators that are
// compared against it on simulated paths.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "chafee/dynamics.hpp"
#include "chafee/noise.hpp"
#include "chafee/spectral.hpp"
#include "chafee/stats.hpp"

namespace chafee {

inline constexpr std::size_t kDefaultPointwiseTruncation = 30;

struct VinfEntries {
  std::size_t m = 0;
  std::vector<double> values;  // m x m
  double alpha = 0.0;
  double sigma = 0.0;

  double operator()(std::size_t j1, std::size_t j2) const { return values[(j1 - 1) * m + (j2 - 1)]; }
};

/// Caches C_ij for one (basis, spec) pair; evaluations at any (alpha, sigma)
/// are then O(m^2).
class StationaryCovariance {
public:
  StationaryCovariance(const SpectralBasis& basis, const CovarianceSpec& spec);

  const SpectralBasis& basis() const noexcept { return basis_; }
  /// Noise covariance in the eigenbasis, m x m.
  std::span<const double> noise_covariance() const noexcept { return C_; }

  double entry(std::size_t j1, std::size_t j2, double alpha, double sigma) const;
  VinfEntries matrix(double alpha, double sigma, std::size_t m_trunc) const;
  double bilinear(std::span<const double> f1, std::span<const double> f2, double alpha, double sigma,
                  std::size_t m_trunc) const;
  /// p is the 1-based grid index.
  double pointwise(std::size_t p, double alpha, double sigma,
                   std::size_t m_trunc = kDefaultPointwiseTruncation) const;
  /// max |<A_a V f_i, f_j> + <A_a f_i, V f_j> + sigma^2 <f_i, Q f_j>| over
  /// the truncated eigenbasis.
  double lyapunov_residual(double alpha, double sigma, std::size_t m_trunc) const;

private:
  void require_below_threshold(double alpha, std::size_t m_trunc) const;

  SpectralBasis basis_;
  std::vector<double> C_;
};

double vinf_entry(std::size_t j1, std::size_t j2, const SpectralBasis& basis,
                  const CovarianceSpec& spec, double alpha, double sigma);
double vinf_bilinear(std::span<const double> f1, std::span<const double> f2,
                     const SpectralBasis& basis, const CovarianceSpec& spec, double alpha,
                     double sigma, std::size_t m_trunc);
double vinf_pointwise(std::size_t p, const SpectralBasis& basis, const CovarianceSpec& spec,
                      double alpha, double sigma,
                      std::size_t m_trunc = kDefaultPointwiseTruncation);

struct EwsEstimate {
  enum class Kind { ModeCovariance, PointwiseVariance };

  Kind kind = Kind::ModeCovariance;
  double value = 0.0;
  double std_error = 0.0;
  std::size_t k1 = 0, k2 = 0;  // modes (mode covariance)
  std::size_t p = 0;           // grid index (pointwise)
  std::size_t samples = 0;
};

/// Streaming form of the time-average covariance estimators; std_error comes
/// from `batches` contiguous batch means when the expected sample count is
/// known.
class CovarianceAccumulator {
public:
  explicit CovarianceAccumulator(std::size_t expected_samples = 0, std::size_t batches = 20);
  void add(double x, double y);
  double value() const noexcept { return total_.cov(); }
  std::size_t count() const noexcept { return total_.count(); }
  double batch_std_error() const;

private:
  std::size_t expected_, batches_;
  stats::CoMoment total_;
  std::vector<stats::CoMoment> batch_;
};

/// Snapshots with step >= traj.config.burn_in are used.
EwsEstimate empirical_mode_covariance(const TrajectoryRecord& traj, const SpectralBasis& basis,
                                      std::size_t k1, std::size_t k2);
EwsEstimate empirical_pointwise_variance(const TrajectoryRecord& traj, std::size_t p);

/// Same estimators fed one state at a time, so long runs need not be stored.
/// States at steps below `burn_in` are skipped.
class EwsStream {
public:
  EwsStream(const SpectralBasis& basis, std::vector<std::size_t> modes, std::vector<std::size_t> points,
            std::int64_t burn_in, std::size_t expected_samples);

  void observe(std::int64_t step, std::span<const double> u);
  /// Mode estimates first (k1 = k2 = modes[i]), then pointwise ones.
  std::vector<EwsEstimate> estimates() const;

private:
  const SpectralBasis* basis_;
  std::vector<std::size_t> modes_, points_;
  std::int64_t burn_in_;
  std::vector<CovarianceAccumulator> acc_;
};

/// Mean of per-member values with the ensemble standard error.
EwsEstimate ensemble_estimate(std::span<const EwsEstimate> members);

/// Fit of log(value) against log(lambda_1 - alpha).
stats::LinearFit scaling_fit(std::span<const double> alphas, std::span<const double> values,
                             double lambda1);

/// argmax_n |e_1(x_n)|, 1-based; values within 1e-12 relative count as ties
/// and the smaller index wins.
std::size_t argmax_measurement_point(const SpectralBasis& basis);

}  // namespace chafee
