#pragma once

// Semi-implicit Euler-Maruyama for
//   du = (A u + alpha(t) u - u^3) dt + sigma dW,   A = Lap - g,
// i.e. (I - A_alpha dt) u_{j+1} = u_j - u_j^3 dt + sigma dW_j, together with
// its linearization, the first-variation (tangent) step, and a damped Newton
// solver for steady states on the first pitchfork branch.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chafee/linalg.hpp"
#include "chafee/noise.hpp"
#include "chafee/spectral.hpp"

namespace chafee {

struct FieldState {
  std::vector<double> values;
  double t = 0.0;
};

struct DriftSpec {
  enum class Kind { Constant, Ramp };

  Kind kind = Kind::Constant;
  double alpha0 = 0.0;
  double eps = 0.0;
  double alpha_max = std::numeric_limits<double>::infinity();

  static DriftSpec constant(double alpha) { return DriftSpec{Kind::Constant, alpha, 0.0}; }
  static DriftSpec ramp(double alpha0, double eps,
                        double alpha_max = std::numeric_limits<double>::infinity()) {
    return DriftSpec{Kind::Ramp, alpha0, eps, alpha_max};
  }

  /// min(alpha0 + eps t, alpha_max) for a ramp.
  double alpha_at(double t) const noexcept;

  bool operator==(const DriftSpec&) const = default;
};

struct SimConfig {
  double dt = 0.01;
  std::int64_t nt = 1;
  double sigma = 0.0;
  std::int64_t snapshot_stride = 1;
  std::int64_t burn_in = 0;  // steps excluded from estimators

  void validate() const;
  double horizon() const noexcept { return dt * static_cast<double>(nt); }

  bool operator==(const SimConfig&) const = default;
};

enum class Model { Nonlinear, Linear };

std::string_view to_string(Model model) noexcept;

/// Snapshots every `snapshot_stride` steps, including t = 0.
struct TrajectoryRecord {
  Grid grid;
  std::vector<std::int64_t> steps;
  std::vector<double> times;
  std::vector<double> values;  // snapshots x N, row-major
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
  SimConfig config;
  DriftSpec drift;
  Model model = Model::Nonlinear;

  std::size_t size() const noexcept { return times.size(); }
  std::span<const double> snapshot(std::size_t i) const {
    return std::span<const double>(values).subspan(i * grid.N, grid.N);
  }
  void push(std::int64_t step, double t, std::span<const double> u);
};

/// |u| above this aborts the run.
inline constexpr double kBlowUpThreshold = 1e6;

/// Owns the factorization of I - dt A_alpha and reuses it while alpha is unchanged.
class SemiImplicitStepper {
public:
  SemiImplicitStepper(const Potential& g, double dt);

  /// Refactors only if alpha differs from the current value.
  void set_alpha(double alpha);
  double alpha() const noexcept { return alpha_; }
  double dt() const noexcept { return dt_; }
  const Grid& grid() const noexcept { return grid_; }

  /// In place; `noise` is the unscaled increment.
  void step(std::span<double> u, std::span<const double> noise, double sigma, Model model);
  /// v <- (I - dt A_alpha)^{-1} (v - 3 u^2 v dt)
  void step_variation(std::span<double> v, std::span<const double> u);

private:
  Grid grid_;
  double dt_;
  std::vector<double> base_diag_;  // diagonal of A (alpha = 0)
  std::vector<double> off_;
  double alpha_ = std::numeric_limits<double>::quiet_NaN();
  linalg::TridiagonalFactor factor_;
  std::vector<double> scratch_;
};

FieldState step_semi_implicit(const FieldState& state, const TridiagonalOperator& A_alpha, double dt,
                              std::span<const double> noise_inc, double sigma);
FieldState step_first_variation(const FieldState& v, const FieldState& u,
                                const TridiagonalOperator& A_alpha, double dt);

/// Called at step 0 and after every step with the current state.
using StepObserver = std::function<void(std::int64_t step, double t, std::span<const double> u)>;

/// Core time loop shared by every integrator. `u` is advanced in place from
/// time t0. Errors are rethrown with the failing step index attached.
void integrate(std::span<double> u, double t0, const Potential& g, const DriftSpec& drift,
               const NoiseField& noise, const SimConfig& cfg, RngStream& rng, Model model,
               const StepObserver& observer);

TrajectoryRecord integrate_sde(const FieldState& u0, const Potential& g, const DriftSpec& drift,
                               const CovarianceSpec& spec, const SimConfig& cfg, RngStream& rng);
TrajectoryRecord integrate_linear(const FieldState& w0, const Potential& g, double alpha,
                                  const CovarianceSpec& spec, const SimConfig& cfg, RngStream& rng);

/// u0 = sigma * (one noise increment of length dt), the near-zero start used
/// for replication runs.
FieldState initial_kick(const NoiseField& noise, double dt, double sigma, RngStream& rng);

/// 1/2 <-A u, u>_dx with A = Lap - g.
double lyapunov_functional(std::span<const double> u, const Potential& g);

struct NewtonReport {
  std::string seed;  // "zero", "+e1", "-e1"
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

struct SteadyStates {
  std::vector<std::vector<double>> states;
  std::vector<NewtonReport> reports;
};

/// Damped Newton on A_alpha u - u^3 = 0 from {0, +c e1, -c e1},
/// c = max(0.1, sqrt(max(alpha - lambda_1, 0))). Requires alpha < lambda_2.
SteadyStates find_steady_states(const Potential& g, double alpha);

struct SyncResult {
  std::vector<double> times;
  std::vector<double> gap;  // ||u_a - u_b||_dx
  /// max over snapshots and points of (u_a - u_b); <= 0 when the order of
  /// the initial data is preserved.
  double max_order_excess = 0.0;
};

/// Two runs driven by one noise path.
SyncResult synchronization_gap(const FieldState& u0_a, const FieldState& u0_b, const Potential& g,
                               const DriftSpec& drift, const CovarianceSpec& spec,
                               const SimConfig& cfg, RngStream rng);

}  // namespace chafee
