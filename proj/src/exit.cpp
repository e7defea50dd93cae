#include "chafee/exit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "chafee/error.hpp"
#include "chafee/parallel.hpp"
#include "chafee/simd.hpp"

namespace chafee {

void SobolevSpec::validate() const {
  if (!(s > 0.0 && s <= 1.0)) fail(ErrorKind::Validation, "sobolev: s must lie in (0, 1]");
}

SobolevNorm::SobolevNorm(const SpectralBasis& basis, const SobolevSpec& spec)
    : basis_(&basis), m_(spec.m == 0 ? basis.m : spec.m) {
  if (m_ > basis.m) fail(ErrorKind::Truncation, "sobolev: m exceeds retained modes");
  if (!(spec.s >= 0.0)) fail(ErrorKind::Validation, "sobolev: s must be non-negative");
  weight_.resize(m_);
  for (std::size_t k = 0; k < m_; ++k) weight_[k] = std::pow(basis.lambdas[k], spec.s);
}

double SobolevNorm::operator()(std::span<const double> phi) const {
  const Grid& grid = basis_->grid;
  if (phi.size() != grid.N) fail(ErrorKind::Dimension, "sobolev: field length mismatch");
  // scratch per call: one norm object is shared by every ensemble worker
  std::vector<double> coeff(m_);
  simd::active().project_rows(basis_->vectors.data(), m_, grid.N, phi.data(), coeff.data());
  double s = 0.0;
  for (std::size_t k = 0; k < m_; ++k) {
    const double c = grid.dx * coeff[k];
    s += weight_[k] * c * c;
  }
  return std::sqrt(s);
}

double a_s_norm(std::span<const double> phi, const SpectralBasis& basis, const SobolevSpec& spec) {
  return SobolevNorm(basis, spec)(phi);
}

namespace {

void require_subcritical(const DriftSpec& drift, double horizon, double lambda1) {
  // alpha(t) is nondecreasing, so the endpoint is the maximum.
  const double top = std::max(drift.alpha_at(0.0), drift.alpha_at(horizon));
  if (!(top < lambda1))
    fail(ErrorKind::Scope, "exit: alpha(t) reaches " + std::to_string(top) +
                               " >= lambda_1 = " + std::to_string(lambda1) + " within the horizon");
}

}  // namespace

DeterministicReference deterministic_reference(const FieldState& u0, const Potential& g,
                                               const DriftSpec& drift, const SimConfig& cfg) {
  cfg.validate();
  const SpectralBasis basis = spectral_basis(g, 1);
  require_subcritical(drift, cfg.horizon(), basis.lambda(1));
  SimConfig det = cfg;
  det.sigma = 0.0;
  RngStream unused(0, 0);
  DeterministicReference ref;
  ref.record = integrate_sde(u0, g, drift, CovarianceSpec::identity(1, 1), det, unused);
  for (std::size_t i = 0; i < ref.record.size(); ++i) {
    const double F = lyapunov_functional(ref.record.snapshot(i), g);
    if (!ref.energy.empty() && F > ref.energy.back() * (1.0 + 1e-12) + 1e-300)
      throw Error(ErrorKind::Numerical,
                  "deterministic reference: F_L increased at t = " + std::to_string(ref.record.times[i]),
                  ref.record.steps[i]);
    ref.energy.push_back(F);
  }
  const double F0 = ref.energy.front(), FT = ref.energy.back();
  const double T = ref.record.times.back() - ref.record.times.front();
  if (F0 > 0.0 && FT > 0.0 && T > 0.0) ref.fitted_rate = -std::log(FT / F0) / (2.0 * T);
  return ref;
}

namespace {

/// First crossing of `h` by a sampled deviation series, linearly interpolated.
class CrossingTracker {
public:
  explicit CrossingTracker(std::vector<double> h) : h_(std::move(h)), tau_(h_.size()) {}

  void observe(double t, double d) {
    for (std::size_t i = 0; i < h_.size(); ++i) {
      if (tau_[i] || d < h_[i]) continue;
      if (!has_prev_) {
        tau_[i] = t;
      } else {
        const double frac = (h_[i] - prev_d_) / (d - prev_d_);
        tau_[i] = prev_t_ + std::clamp(frac, 0.0, 1.0) * (t - prev_t_);
      }
    }
    has_prev_ = true;
    prev_t_ = t;
    prev_d_ = d;
  }
  bool all_exited() const {
    return std::all_of(tau_.begin(), tau_.end(), [](const auto& v) { return v.has_value(); });
  }
  const std::vector<std::optional<double>>& tau() const noexcept { return tau_; }

private:
  std::vector<double> h_;
  std::vector<std::optional<double>> tau_;
  bool has_prev_ = false;
  double prev_t_ = 0.0, prev_d_ = 0.0;
};

}  // namespace

std::optional<double> first_exit_time(const TrajectoryRecord& traj, const TrajectoryRecord& ref,
                                      double h, const SobolevSpec& sobolev, const SpectralBasis& basis) {
  if (traj.size() != ref.size() || traj.grid.N != ref.grid.N)
    fail(ErrorKind::Alignment, "first_exit_time: trajectories have different snapshot counts");
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (std::fabs(traj.times[i] - ref.times[i]) > 1e-12 * std::max(1.0, std::fabs(ref.times[i])))
      fail(ErrorKind::Alignment, "first_exit_time: snapshot times differ at index " + std::to_string(i));
  const SobolevNorm norm(basis, sobolev);
  CrossingTracker tracker({h});
  std::vector<double> d(traj.grid.N);
  for (std::size_t i = 0; i < traj.size() && !tracker.all_exited(); ++i) {
    const auto a = traj.snapshot(i), b = ref.snapshot(i);
    for (std::size_t n = 0; n < d.size(); ++n) d[n] = a[n] - b[n];
    tracker.observe(traj.times[i], norm(d));
  }
  return tracker.tau().front();
}

void ExitExperiment::validate() const {
  cfg.validate();
  sobolev.validate();
  if (h_ladder.empty()) fail(ErrorKind::Validation, "exit: h ladder is empty");
  for (std::size_t i = 0; i < h_ladder.size(); ++i) {
    if (!(h_ladder[i] > 0.0)) fail(ErrorKind::Validation, "exit: h values must be positive");
    if (i > 0 && !(h_ladder[i] > h_ladder[i - 1])) fail(ErrorKind::Validation, "exit: h ladder must increase");
  }
  if (g.min() < 1.0) fail(ErrorKind::Validation, "exit: the potential must satisfy g >= 1");
  if (ensemble == 0) fail(ErrorKind::Validation, "exit: ensemble must be non-empty");
  if (!u0.empty() && u0.size() != g.grid().N) fail(ErrorKind::Dimension, "exit: u0 length mismatch");
  const ValidationReport rep = chafee::validate(spec, g.grid().L);
  if (!rep.ok) fail(ErrorKind::Validation, "exit: covariance spec invalid: " + rep.violations.front());
}

std::size_t ExitSamples::failed() const {
  return static_cast<std::size_t>(std::count_if(failures.begin(), failures.end(),
                                                [](const std::string& s) { return !s.empty(); }));
}

namespace {

struct ExitContext {
  const ExitExperiment& exp;
  SpectralBasis basis;
  SobolevNorm norm;
  DeterministicReference ref;
  NoiseField noise;

  ExitContext(const ExitExperiment& e, SpectralBasis b, const FieldState& u0)
      : exp(e),
        basis(std::move(b)),
        norm(basis, e.sobolev),
        ref(deterministic_reference(u0, e.g, e.drift, e.cfg)),
        noise(e.spec, e.g.grid()) {}
};

FieldState initial_state(const ExitExperiment& exp) {
  FieldState u0{exp.u0.empty() ? std::vector<double>(exp.g.grid().N, 0.0) : exp.u0, 0.0};
  return u0;
}

SpectralBasis exit_basis(const ExitExperiment& exp) {
  const std::size_t m = exp.sobolev.m == 0 ? exp.g.grid().N : exp.sobolev.m;
  if (m > exp.g.grid().N) fail(ErrorKind::Truncation, "exit: sobolev m exceeds N");
  return spectral_basis(exp.g, m);
}

/// One stochastic path against the shared reference. Stops early once every
/// tube has been left.
std::vector<std::optional<double>> run_member(const ExitContext& ctx, RngStream& rng) {
  const ExitExperiment& exp = ctx.exp;
  const SimConfig& cfg = exp.cfg;
  const TrajectoryRecord& ref = ctx.ref.record;
  const std::size_t N = exp.g.grid().N;
  SemiImplicitStepper stepper(exp.g, cfg.dt);
  const auto s0 = ref.snapshot(0);
  std::vector<double> u(s0.begin(), s0.end());
  std::vector<double> inc(N, 0.0), d(N);
  CrossingTracker tracker(exp.h_ladder);
  tracker.observe(ref.times[0], 0.0);
  const double t0 = ref.times[0];
  std::size_t snap = 1;
  for (std::int64_t j = 0; j < cfg.nt && !tracker.all_exited(); ++j) {
    try {
      stepper.set_alpha(exp.drift.alpha_at(t0 + cfg.dt * static_cast<double>(j)));
      if (cfg.sigma != 0.0) ctx.noise.sample(cfg.dt, rng, inc);
      stepper.step(u, inc, cfg.sigma, Model::Nonlinear);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " (step " + std::to_string(j + 1) + ")", j + 1);
    }
    if ((j + 1) % cfg.snapshot_stride != 0) continue;
    const auto r = ref.snapshot(snap);
    for (std::size_t n = 0; n < N; ++n) d[n] = u[n] - r[n];
    tracker.observe(ref.times[snap], ctx.norm(d));
    ++snap;
  }
  return tracker.tau();
}

}  // namespace

ExitSamples simulate_exit_times(const ExitExperiment& exp, std::uint64_t master_seed, std::size_t workers) {
  exp.validate();
  const ExitContext ctx(exp, exit_basis(exp), initial_state(exp));
  ExitSamples out;
  out.h = exp.h_ladder;
  out.horizon = exp.cfg.horizon();
  out.q_star = exp.spec.q_max();
  out.sigma = exp.cfg.sigma;
  out.tau.assign(exp.ensemble, {});
  out.failures.assign(exp.ensemble, {});
  const auto errors = parallel_for(exp.ensemble, workers, [&](std::size_t i) {
    RngStream rng(master_seed, i);
    out.tau[i] = run_member(ctx, rng);
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      out.failures[i] = e.what();
      out.tau[i].assign(out.h.size(), std::nullopt);
    }
  }
  if (out.failed() == exp.ensemble)
    fail(ErrorKind::Numerical, "exit: every ensemble member failed: " + out.failures.front());
  return out;
}

namespace {

double tail_x(const ExitSamples& s, double h) {
  const double denom = s.q_star * s.sigma * s.sigma;
  return denom > 0.0 ? h * h / denom : std::numeric_limits<double>::infinity();
}

}  // namespace

TailTable tail_table(const ExitSamples& samples) {
  TailTable table;
  table.q_star = samples.q_star;
  std::vector<double> xs, ys;
  std::size_t total_exits = 0;
  for (std::size_t c = 0; c < samples.h.size(); ++c) {
    TailRow row;
    row.h = samples.h[c];
    row.x = tail_x(samples, row.h);
    for (std::size_t i = 0; i < samples.tau.size(); ++i) {
      if (!samples.failures[i].empty()) continue;
      ++row.n;
      if (samples.tau[i][c]) ++row.n_exited;
    }
    if (row.n > 0) {
      row.p_hat = static_cast<double>(row.n_exited) / static_cast<double>(row.n);
      std::tie(row.ci_low, row.ci_high) = stats::wilson_interval(row.n_exited, row.n);
    }
    total_exits += row.n_exited;
    if (row.n_exited > 0 && std::isfinite(row.x)) {
      xs.push_back(row.x);
      ys.push_back(std::log(row.p_hat));
    }
    table.rows.push_back(row);
  }
  table.all_censored = total_exits == 0;
  if (xs.size() >= 2) table.regression = stats::least_squares(xs, ys);
  return table;
}

TailTable exit_tail_sweep(const ExitExperiment& exp, std::uint64_t master_seed, std::size_t workers) {
  return tail_table(simulate_exit_times(exp, master_seed, workers));
}

MomentTable moment_table(const ExitSamples& samples, int k_max) {
  if (k_max < 1) fail(ErrorKind::Validation, "moment table: k_max must be >= 1");
  MomentTable table;
  std::vector<double> xs, log_means;
  for (std::size_t c = 0; c < samples.h.size(); ++c) {
    std::vector<double> capped;
    std::size_t censored = 0;
    for (std::size_t i = 0; i < samples.tau.size(); ++i) {
      if (!samples.failures[i].empty()) continue;
      const auto& t = samples.tau[i][c];
      if (!t) ++censored;
      capped.push_back(t ? std::min(*t, samples.horizon) : samples.horizon);
    }
    if (capped.empty()) fail(ErrorKind::Estimator, "moment table: no successful members");
    const double cf = static_cast<double>(censored) / static_cast<double>(capped.size());
    for (int k = 1; k <= k_max; ++k) {
      std::vector<double> powk(capped.size());
      std::transform(capped.begin(), capped.end(), powk.begin(), [k](double t) { return std::pow(t, k); });
      MomentRow row;
      row.h = samples.h[c];
      row.k = k;
      row.moment = stats::mean_stderr(powk).mean;
      row.jackknife_err = powk.size() > 1 ? stats::jackknife_stderr_of_mean(powk) : 0.0;
      row.censored_fraction = cf;
      row.lower_bound = cf > 0.5;
      if (k == 1) {
        xs.push_back(tail_x(samples, row.h));
        log_means.push_back(std::log(std::max(row.moment, std::numeric_limits<double>::min())));
      }
      table.rows.push_back(row);
    }
  }
  if (xs.size() >= 2 && std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); })) {
    table.spearman = stats::spearman(xs, log_means);
    table.grows_with_x = table.spearman >= 0.9;
  }
  return table;
}

MomentTable exit_moment_sweep(const ExitExperiment& exp, int k_max, std::uint64_t master_seed,
                              std::size_t workers) {
  return moment_table(simulate_exit_times(exp, master_seed, workers), k_max);
}

SlowDriftResult slow_drift_run(const ExitExperiment& exp, std::uint64_t master_seed, std::uint64_t member) {
  exp.validate();
  const SpectralBasis basis = exit_basis(exp);
  const FieldState u0 = initial_state(exp);
  SlowDriftResult out;
  out.reference = deterministic_reference(u0, exp.g, exp.drift, exp.cfg);
  RngStream rng(master_seed, member);
  out.path = integrate_sde(u0, exp.g, exp.drift, exp.spec, exp.cfg, rng);
  for (double h : exp.h_ladder)
    out.exit_times.push_back(first_exit_time(out.path, out.reference.record, h, exp.sobolev, basis));
  return out;
}

}  // namespace chafee
