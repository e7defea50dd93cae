#pragma once

// Exit of stochastic paths from A^s-norm tubes around the deterministic
// (sigma = 0) solution started from the same initial data.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chafee/dynamics.hpp"
#include "chafee/noise.hpp"
#include "chafee/spectral.hpp"
#include "chafee/stats.hpp"

namespace chafee {

struct SobolevSpec {
  double s = 0.4;
  std::size_t m = 0;  // modes in the spectral sum

  /// 0 < s <= 1; s >= 1/2 is accepted but lies outside the tail theorem's range.
  void validate() const;
  bool outside_theorem_range() const noexcept { return s >= 0.5; }
};

/// ||phi||_{A^s} = sqrt(sum_{k<=m} lambda_k^s <phi, e_k>_dx^2), with the
/// lambda_k^s weights precomputed.
class SobolevNorm {
public:
  SobolevNorm(const SpectralBasis& basis, const SobolevSpec& spec);
  double operator()(std::span<const double> phi) const;

private:
  const SpectralBasis* basis_;
  std::size_t m_;
  std::vector<double> weight_;
};

/// Accepts 0 <= s so that s = 0 (Parseval) can be evaluated.
double a_s_norm(std::span<const double> phi, const SpectralBasis& basis, const SobolevSpec& spec);

struct DeterministicReference {
  TrajectoryRecord record;  // sigma = 0
  /// F_L at every snapshot; checked non-increasing.
  std::vector<double> energy;
  /// c1 from F_L(T) = F_L(0) exp(-2 c1 T); zero when F_L(0) = 0.
  double fitted_rate = 0.0;
};

/// sigma = 0 run from u0. Throws Scope if alpha(t) reaches lambda_1 on the
/// horizon and Numerical if F_L increases.
DeterministicReference deterministic_reference(const FieldState& u0, const Potential& g,
                                               const DriftSpec& drift, const SimConfig& cfg);

/// First snapshot time with ||u - ubar||_{A^s} >= h, linearly interpolated
/// between the bracketing snapshots; nullopt when the path never leaves.
std::optional<double> first_exit_time(const TrajectoryRecord& traj, const TrajectoryRecord& ref,
                                      double h, const SobolevSpec& sobolev,
                                      const SpectralBasis& basis);

struct ExitExperiment {
  Potential g;
  CovarianceSpec spec;
  DriftSpec drift;
  SimConfig cfg;  // dt, nt (horizon), sigma, snapshot_stride
  std::vector<double> h_ladder;
  SobolevSpec sobolev;
  std::size_t ensemble = 100;
  /// Shared initial data u(0) = ubar(0); empty means zero.
  std::vector<double> u0;

  /// Throws Validation/Scope on ill-posed experiments.
  void validate() const;
};

struct ExitSamples {
  std::vector<double> h;
  double horizon = 0.0;
  double q_star = 0.0;
  double sigma = 0.0;
  /// members x h; nullopt = no exit before the horizon.
  std::vector<std::vector<std::optional<double>>> tau;
  std::vector<std::string> failures;  // empty string for successful members
  std::size_t failed() const;
};

/// Runs the ensemble; member i uses RngStream(master_seed, i).
ExitSamples simulate_exit_times(const ExitExperiment& exp, std::uint64_t master_seed,
                                std::size_t workers = 1);

struct TailRow {
  double h = 0.0;
  std::size_t n = 0;
  std::size_t n_exited = 0;
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double x = 0.0;  // h^2 / (q* sigma^2)
};

struct TailTable {
  std::vector<TailRow> rows;
  double q_star = 0.0;
  bool all_censored = false;
  /// log p_hat against x over rows with at least one exit.
  std::optional<stats::LinearFit> regression;
};

TailTable tail_table(const ExitSamples& samples);
TailTable exit_tail_sweep(const ExitExperiment& exp, std::uint64_t master_seed, std::size_t workers = 1);

struct MomentRow {
  double h = 0.0;
  int k = 1;
  double moment = 0.0;  // E[min(tau, T)^k]
  double jackknife_err = 0.0;
  double censored_fraction = 0.0;
  bool lower_bound = false;  // censoring above 50%
};

struct MomentTable {
  std::vector<MomentRow> rows;
  /// Spearman correlation of log E[min(tau,T)] with x = h^2/(q* sigma^2).
  double spearman = 0.0;
  bool grows_with_x = false;  // spearman >= 0.9
};

MomentTable moment_table(const ExitSamples& samples, int k_max);
MomentTable exit_moment_sweep(const ExitExperiment& exp, int k_max, std::uint64_t master_seed,
                              std::size_t workers = 1);

struct SlowDriftResult {
  TrajectoryRecord path;
  DeterministicReference reference;
  std::vector<std::optional<double>> exit_times;  // per h
};

/// Single drifting path and its drifting reference. Throws Scope if the ramp
/// reaches lambda_1 within the horizon.
SlowDriftResult slow_drift_run(const ExitExperiment& exp, std::uint64_t master_seed,
                               std::uint64_t member = 0);

}  // namespace chafee
