#include "chafee/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chafee/error.hpp"
#include "chafee/simd.hpp"

namespace chafee {

double DriftSpec::alpha_at(double t) const noexcept {
  if (kind == Kind::Constant) return alpha0;
  return std::min(alpha0 + eps * t, alpha_max);
}

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorKind::Parameter, "sim: dt must be positive");
  if (nt < 1) fail(ErrorKind::Parameter, "sim: nt must be at least 1");
  if (!(sigma >= 0.0)) fail(ErrorKind::Parameter, "sim: sigma must be non-negative");
  if (snapshot_stride < 1) fail(ErrorKind::Parameter, "sim: snapshot_stride must be at least 1");
  if (burn_in < 0) fail(ErrorKind::Parameter, "sim: burn_in must be non-negative");
}

std::string_view to_string(Model model) noexcept {
  return model == Model::Linear ? "linear" : "nonlinear";
}

void TrajectoryRecord::push(std::int64_t step, double t, std::span<const double> u) {
  steps.push_back(step);
  times.push_back(t);
  values.insert(values.end(), u.begin(), u.end());
}

// --- stepper -------------------------------------------------------------------

SemiImplicitStepper::SemiImplicitStepper(const Potential& g, double dt)
    : grid_(g.grid()), dt_(dt), scratch_(g.grid().N) {
  if (!(dt > 0.0)) fail(ErrorKind::Parameter, "stepper: dt must be positive");
  const TridiagonalOperator A = build_schrodinger(grid_, g, 0.0);
  base_diag_ = A.diag;
  off_ = A.off;
}

void SemiImplicitStepper::set_alpha(double alpha) {
  if (alpha == alpha_) return;
  const std::size_t n = base_diag_.size();
  std::vector<double> diag(n), off(off_.size());
  for (std::size_t i = 0; i < n; ++i) diag[i] = 1.0 - dt_ * (base_diag_[i] + alpha);
  for (std::size_t i = 0; i < off.size(); ++i) off[i] = -dt_ * off_[i];
  factor_ = linalg::TridiagonalFactor(diag, off);
  alpha_ = alpha;
}

void SemiImplicitStepper::step(std::span<double> u, std::span<const double> noise, double sigma,
                               Model model) {
  const std::size_t n = u.size();
  if (n != grid_.N || noise.size() != n) fail(ErrorKind::Dimension, "step: length mismatch");
  if (factor_.size() == 0) fail(ErrorKind::Parameter, "step: alpha not set");
  const auto& k = simd::active();
  if (model == Model::Nonlinear) {
    k.cubic_rhs(u.data(), noise.data(), dt_, sigma, u.data(), n);
  } else if (sigma != 0.0) {
    k.axpy(sigma, noise.data(), u.data(), n);
  }
  factor_.solve_in_place(u);
  if (!k.all_bounded(u.data(), n, kBlowUpThreshold))
    fail(ErrorKind::BlowUp, "step: state left |u| <= 1e6 or became non-finite");
}

void SemiImplicitStepper::step_variation(std::span<double> v, std::span<const double> u) {
  const std::size_t n = v.size();
  if (n != grid_.N || u.size() != n) fail(ErrorKind::Dimension, "variation: length mismatch");
  if (factor_.size() == 0) fail(ErrorKind::Parameter, "variation: alpha not set");
  simd::active().variation_rhs(v.data(), u.data(), dt_, v.data(), n);
  factor_.solve_in_place(v);
}

namespace {

linalg::TridiagonalFactor resolvent(const TridiagonalOperator& A, double dt) {
  std::vector<double> diag(A.diag.size()), off(A.off.size());
  for (std::size_t i = 0; i < diag.size(); ++i) diag[i] = 1.0 - dt * A.diag[i];
  for (std::size_t i = 0; i < off.size(); ++i) off[i] = -dt * A.off[i];
  return linalg::TridiagonalFactor(diag, off);
}

}  // namespace

FieldState step_semi_implicit(const FieldState& state, const TridiagonalOperator& A_alpha, double dt,
                              std::span<const double> noise_inc, double sigma) {
  if (!(dt > 0.0)) fail(ErrorKind::Parameter, "step: dt must be positive");
  const std::size_t n = state.values.size();
  if (A_alpha.size() != n || noise_inc.size() != n) fail(ErrorKind::Dimension, "step: length mismatch");
  FieldState next{std::vector<double>(n), state.t + dt};
  simd::active().cubic_rhs(state.values.data(), noise_inc.data(), dt, sigma, next.values.data(), n);
  resolvent(A_alpha, dt).solve_in_place(next.values);
  if (!simd::all_bounded(next.values, kBlowUpThreshold))
    fail(ErrorKind::BlowUp, "step: state left |u| <= 1e6 or became non-finite");
  return next;
}

FieldState step_first_variation(const FieldState& v, const FieldState& u,
                                const TridiagonalOperator& A_alpha, double dt) {
  if (!(dt > 0.0)) fail(ErrorKind::Parameter, "variation: dt must be positive");
  const std::size_t n = v.values.size();
  if (A_alpha.size() != n || u.values.size() != n) fail(ErrorKind::Dimension, "variation: length mismatch");
  FieldState next{std::vector<double>(n), v.t + dt};
  simd::active().variation_rhs(v.values.data(), u.values.data(), dt, next.values.data(), n);
  resolvent(A_alpha, dt).solve_in_place(next.values);
  return next;
}

// --- integrators -------------------------------------------------------------------

void integrate(std::span<double> u, double t0, const Potential& g, const DriftSpec& drift,
               const NoiseField& noise, const SimConfig& cfg, RngStream& rng, Model model,
               const StepObserver& observer) {
  cfg.validate();
  const Grid& grid = g.grid();
  if (u.size() != grid.N || noise.grid().N != grid.N)
    fail(ErrorKind::Dimension, "integrate: state, potential and noise grids differ");
  SemiImplicitStepper stepper(g, cfg.dt);
  std::vector<double> inc(grid.N, 0.0);
  if (observer) observer(0, t0, u);
  for (std::int64_t j = 0; j < cfg.nt; ++j) {
    const double t = t0 + cfg.dt * static_cast<double>(j);
    try {
      stepper.set_alpha(drift.alpha_at(t));
      if (cfg.sigma != 0.0) noise.sample(cfg.dt, rng, inc);
      stepper.step(u, inc, cfg.sigma, model);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " (step " + std::to_string(j + 1) + ")", j + 1);
    }
    if (observer) observer(j + 1, t0 + cfg.dt * static_cast<double>(j + 1), u);
  }
}

namespace {

TrajectoryRecord run_recorded(const FieldState& u0, const Potential& g, const DriftSpec& drift,
                              const CovarianceSpec& spec, const SimConfig& cfg, RngStream& rng,
                              Model model) {
  TrajectoryRecord rec;
  rec.grid = g.grid();
  rec.master_seed = rng.master_seed();
  rec.stream_index = rng.stream_index();
  rec.config = cfg;
  rec.drift = drift;
  rec.model = model;
  const std::size_t count = static_cast<std::size_t>(cfg.nt / std::max<std::int64_t>(cfg.snapshot_stride, 1)) + 1;
  rec.steps.reserve(count);
  rec.times.reserve(count);
  rec.values.reserve(count * g.grid().N);
  std::vector<double> u = u0.values;
  const NoiseField noise(spec, g.grid());
  integrate(u, u0.t, g, drift, noise, cfg, rng, model,
            [&](std::int64_t step, double t, std::span<const double> state) {
              if (step % cfg.snapshot_stride == 0) rec.push(step, t, state);
            });
  return rec;
}

}  // namespace

TrajectoryRecord integrate_sde(const FieldState& u0, const Potential& g, const DriftSpec& drift,
                               const CovarianceSpec& spec, const SimConfig& cfg, RngStream& rng) {
  return run_recorded(u0, g, drift, spec, cfg, rng, Model::Nonlinear);
}

TrajectoryRecord integrate_linear(const FieldState& w0, const Potential& g, double alpha,
                                  const CovarianceSpec& spec, const SimConfig& cfg, RngStream& rng) {
  return run_recorded(w0, g, DriftSpec::constant(alpha), spec, cfg, rng, Model::Linear);
}

FieldState initial_kick(const NoiseField& noise, double dt, double sigma, RngStream& rng) {
  FieldState s{std::vector<double>(noise.grid().N, 0.0), 0.0};
  if (sigma == 0.0) return s;
  noise.sample(dt, rng, s.values);
  for (auto& x : s.values) x *= sigma;
  return s;
}

double lyapunov_functional(std::span<const double> u, const Potential& g) {
  const TridiagonalOperator A = build_schrodinger(g.grid(), g, 0.0);
  const std::vector<double> Au = A.apply(u);
  return -0.5 * inner_dx(Au, u, g.grid());
}

// --- steady states ------------------------------------------------------------------

SteadyStates find_steady_states(const Potential& g, double alpha) {
  const Grid& grid = g.grid();
  const SpectralBasis basis = spectral_basis(g, std::min<std::size_t>(2, grid.N));
  if (basis.m >= 2 && !(alpha < basis.lambda(2)))
    fail(ErrorKind::Scope, "steady states: alpha must stay below lambda_2 = " +
                               std::to_string(basis.lambda(2)));
  const double lambda1 = basis.lambda(1);
  const double c = std::max(0.1, std::sqrt(std::max(alpha - lambda1, 0.0)));
  const TridiagonalOperator A = build_schrodinger(grid, g, alpha);
  const std::size_t n = grid.N;

  auto residual = [&](const std::vector<double>& u, std::vector<double>& F) {
    A.apply(u, F);
    for (std::size_t i = 0; i < n; ++i) F[i] -= u[i] * u[i] * u[i];
    return norm_dx(F, grid);
  };

  SteadyStates out;
  const std::span<const double> e1 = basis.vector(1);
  const std::pair<const char*, double> seeds[] = {{"zero", 0.0}, {"+e1", c}, {"-e1", -c}};
  for (const auto& [label, amp] : seeds) {
    std::vector<double> u(n), F(n), trial(n), Ftrial(n), step(n), sub(n - 1), diag(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = amp * e1[i];
    double r = residual(u, F);
    NewtonReport rep{label};
    constexpr int kMaxIterations = 200;
    constexpr int kMaxHalvings = 30;
    while (r > 1e-10 && rep.iterations < kMaxIterations) {
      ++rep.iterations;
      for (std::size_t i = 0; i < n; ++i) {
        diag[i] = A.diag[i] - 3.0 * u[i] * u[i];
        step[i] = -F[i];
      }
      std::copy(A.off.begin(), A.off.end(), sub.begin());
      const linalg::PivotedTridiagonalLU lu(sub, diag, sub);
      if (lu.min_abs_pivot() == 0.0) break;
      lu.solve_in_place(step);
      double t = 1.0;
      double rt = 0.0;
      for (int h = 0; h <= kMaxHalvings; ++h) {
        for (std::size_t i = 0; i < n; ++i) trial[i] = u[i] + t * step[i];
        rt = residual(trial, Ftrial);
        if (rt < r) break;
        t *= 0.5;
      }
      if (!(rt < r)) break;
      u.swap(trial);
      F.swap(Ftrial);
      r = rt;
    }
    rep.residual = r;
    rep.converged = r <= 1e-10;
    if (rep.converged) {
      bool distinct = true;
      for (const auto& s : out.states) {
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = s[i] - u[i];
        if (norm_dx(d, grid) <= 1e-6) distinct = false;
      }
      if (distinct) out.states.push_back(u);
    }
    out.reports.push_back(rep);
  }
  return out;
}

// --- synchronization ----------------------------------------------------------------

SyncResult synchronization_gap(const FieldState& u0_a, const FieldState& u0_b, const Potential& g,
                               const DriftSpec& drift, const CovarianceSpec& spec,
                               const SimConfig& cfg, RngStream rng) {
  cfg.validate();
  const Grid& grid = g.grid();
  if (u0_a.values.size() != grid.N || u0_b.values.size() != grid.N)
    fail(ErrorKind::Dimension, "sync: initial data length mismatch");
  const NoiseField noise(spec, grid);
  SemiImplicitStepper stepper(g, cfg.dt);
  std::vector<double> a = u0_a.values, b = u0_b.values, inc(grid.N, 0.0), diff(grid.N);
  SyncResult res;
  res.max_order_excess = -std::numeric_limits<double>::infinity();
  auto record = [&](double t) {
    double excess = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.N; ++i) {
      diff[i] = a[i] - b[i];
      excess = std::max(excess, diff[i]);
    }
    res.times.push_back(t);
    res.gap.push_back(norm_dx(diff, grid));
    res.max_order_excess = std::max(res.max_order_excess, excess);
  };
  record(u0_a.t);
  for (std::int64_t j = 0; j < cfg.nt; ++j) {
    const double t = u0_a.t + cfg.dt * static_cast<double>(j);
    try {
      stepper.set_alpha(drift.alpha_at(t));
      if (cfg.sigma != 0.0) noise.sample(cfg.dt, rng, inc);
      stepper.step(a, inc, cfg.sigma, Model::Nonlinear);
      stepper.step(b, inc, cfg.sigma, Model::Nonlinear);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " (step " + std::to_string(j + 1) + ")", j + 1);
    }
    if ((j + 1) % cfg.snapshot_stride == 0) record(u0_a.t + cfg.dt * static_cast<double>(j + 1));
  }
  return res;
}

}  // namespace chafee
