#include "chafee/runner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "chafee/dynamics.hpp"
#include "chafee/error.hpp"
#include "chafee/ews.hpp"
#include "chafee/exit.hpp"
#include "chafee/ftle.hpp"
#include "chafee/parallel.hpp"
#include "chafee/stats.hpp"

namespace chafee {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Context {
  ExperimentConfig cfg;
  RunOptions opts;
  Grid grid;
  Potential g;
  double lambda1;
  std::vector<double> alphas;
  OutputSink sink;
  std::vector<std::string> failures;
  std::vector<std::uint64_t> streams;

  Context(const ExperimentConfig& c, const RunOptions& o, std::filesystem::path dir)
      : cfg(c), opts(o), grid(c.grid()), g(c.make_potential()),
        lambda1(spectral_basis(g, 1).lambda(1)), sink(std::move(dir)) {
    for (const auto& t : c.sweep.alpha) alphas.push_back(t.resolve(lambda1));
  }

  /// Records a member failure as "alpha=<a> member=<i>: <what>".
  void record(const std::vector<std::exception_ptr>& errors, std::size_t members,
              const std::vector<double>& job_alpha) {
    for (std::size_t j = 0; j < errors.size(); ++j) {
      if (!errors[j]) continue;
      std::string what;
      try {
        std::rethrow_exception(errors[j]);
      } catch (const std::exception& e) {
        what = e.what();
      }
      failures.push_back("alpha=" + format_number(job_alpha[j]) + " member=" +
                         std::to_string(j % members) + ": " + what);
    }
  }
};

std::string alpha_file(const char* stem, std::size_t a) {
  return std::string(stem) + "_a" + std::to_string(a) + ".csv";
}

// --- spectrum -----------------------------------------------------------------------

void run_spectrum(Context& ctx) {
  const std::size_t m = ctx.cfg.sweep.modes;
  const SpectralBasis basis = spectral_basis(ctx.g, m);
  CsvTable spec({"k", "lambda_k", "lambda_k_prime", "lambda_k_discrete", "gap", "gap_discrete", "sign_changes"});
  for (std::size_t k = 1; k <= m; ++k)
    spec.row(cells({k, basis.lambda(k), basis.lambdas_prime[k - 1], basis.lambdas_discrete[k - 1],
                    asymptotic_gap(basis, ctx.g, k, LaplacianReference::Continuum),
                    asymptotic_gap(basis, ctx.g, k, LaplacianReference::Discrete),
                    count_sign_changes(basis.vector(k))}));
  ctx.sink.write("spectrum.csv", spec);
  CsvTable vec({"k", "n", "x", "e"});
  for (std::size_t k = 1; k <= m; ++k) {
    const auto e = basis.vector(k);
    for (std::size_t n = 1; n <= ctx.grid.N; ++n) vec.row(cells({k, n, ctx.grid.x(n), e[n - 1]}));
  }
  ctx.sink.write("eigenvectors.csv", vec);
}

// --- simulate -----------------------------------------------------------------------

void run_simulate(Context& ctx) {
  const CovarianceSpec spec = ctx.cfg.noise.resolve();
  const NoiseField noise(spec, ctx.grid);
  const std::size_t A = ctx.alphas.size();
  std::vector<std::optional<TrajectoryRecord>> paths(A);
  const auto errors = parallel_for(A, ctx.opts.workers, [&](std::size_t a) {
    RngStream rng(ctx.cfg.seed, 0);
    const FieldState u0 = initial_kick(noise, ctx.cfg.sim.dt, ctx.cfg.sim.sigma, rng);
    paths[a] = integrate_sde(u0, ctx.g, DriftSpec::constant(ctx.alphas[a]), spec, ctx.cfg.sim, rng);
  });
  ctx.streams = {0};
  ctx.record(errors, 1, ctx.alphas);
  CsvTable summary({"alpha_index", "alpha", "snapshots", "N", "final_norm_dx", "final_energy"});
  for (std::size_t a = 0; a < A; ++a) {
    if (!paths[a]) continue;
    const auto& rec = *paths[a];
    std::vector<std::string> header{"t"};
    for (std::size_t n = 1; n <= ctx.grid.N; ++n) header.push_back("u_" + std::to_string(n));
    CsvTable traj(header);
    for (std::size_t i = 0; i < rec.size(); ++i) {
      std::vector<std::string> row{format_number(rec.times[i])};
      for (double v : rec.snapshot(i)) row.push_back(format_number(v));
      traj.row(row);
    }
    ctx.sink.write(alpha_file("trajectory", a), traj);
    const auto last = rec.snapshot(rec.size() - 1);
    summary.row(cells({a, ctx.alphas[a], rec.size(), ctx.grid.N, norm_dx(last, ctx.grid),
                       lyapunov_functional(last, ctx.g)}));
  }
  ctx.sink.write("simulate_summary.csv", summary);
}

// --- steady states ------------------------------------------------------------------

void run_steady_states(Context& ctx) {
  const SpectralBasis basis = spectral_basis(ctx.g, 1);
  CsvTable table({"alpha", "branch", "seed", "converged", "iterations", "residual", "norm_dx", "e1_coeff"});
  CsvTable profiles({"alpha", "branch", "n", "x", "u"});
  for (double alpha : ctx.alphas) {
    const SteadyStates ss = find_steady_states(ctx.g, alpha);
    for (std::size_t b = 0; b < ss.states.size(); ++b) {
      const auto& u = ss.states[b];
      const auto& r = ss.reports[b];
      table.row(cells({alpha, b, r.seed, r.converged, r.iterations, r.residual, norm_dx(u, ctx.grid),
                       inner_dx(u, basis.vector(1), ctx.grid)}));
      for (std::size_t n = 1; n <= ctx.grid.N; ++n)
        profiles.row(cells({alpha, b, n, ctx.grid.x(n), u[n - 1]}));
    }
  }
  ctx.sink.write("steady_states.csv", table);
  ctx.sink.write("steady_profiles.csv", profiles);
}

// --- ftle ---------------------------------------------------------------------------

void run_ftle(Context& ctx) {
  const auto& w = ctx.cfg.sweep;
  const CovarianceSpec spec = ctx.cfg.noise.resolve();
  const SpectralBasis basis = spectral_basis(ctx.g, w.k);
  const std::size_t A = ctx.alphas.size(), E = w.ensemble;
  std::vector<std::optional<FtleRecord>> recs(A * E);
  std::vector<double> job_alpha(A * E);
  for (std::size_t j = 0; j < A * E; ++j) job_alpha[j] = ctx.alphas[j / E];
  TangentOptions topts;
  topts.record_every = ctx.cfg.sim.snapshot_stride;
  const auto errors = parallel_for(A * E, ctx.opts.workers, [&](std::size_t j) {
    RngStream rng(ctx.cfg.seed, j % E);
    recs[j] = ftle_on_attractor(ctx.g, job_alpha[j], spec, ctx.cfg.sim, w.k, rng, topts);
  });
  for (std::size_t i = 0; i < E; ++i) ctx.streams.push_back(i);
  ctx.record(errors, E, job_alpha);

  CsvTable per_member({"alpha", "member", "t", "L_k"});
  CsvTable series({"alpha", "k", "t", "mean", "stderr", "band_low", "band_high", "max", "bound", "members"});
  CsvTable summary({"alpha", "k", "mean", "max", "fraction_positive", "theoretical_bound", "stderr", "tol",
                    "max_any_time", "violation_fraction", "members", "failed"});
  for (std::size_t a = 0; a < A; ++a) {
    std::vector<FtleRecord> ok;
    for (std::size_t i = 0; i < E; ++i) {
      const auto& r = recs[a * E + i];
      if (!r) continue;
      ok.push_back(*r);
      for (std::size_t t = 0; t < r->times.size(); ++t)
        per_member.row(cells({ctx.alphas[a], i, r->times[t], r->exponents[t]}));
    }
    if (ok.empty()) continue;
    const BoundReport rep = bound_report(ok, basis, ctx.alphas[a], w.tol);
    for (std::size_t t = 0; t < ok.front().times.size(); ++t) {
      std::vector<double> v;
      for (const auto& r : ok) v.push_back(r.exponents[t]);
      const stats::MeanStderr ms = stats::mean_stderr(v);
      series.row(cells({ctx.alphas[a], w.k, ok.front().times[t], ms.mean, ms.sem, ms.mean - 2.0 * ms.sem,
                        ms.mean + 2.0 * ms.sem, *std::max_element(v.begin(), v.end()), rep.bound, ok.size()}));
    }
    summary.row(cells({ctx.alphas[a], w.k, rep.mean_final, rep.max_final, rep.fraction_positive, rep.bound,
                       rep.stderr_final, rep.tolerance, rep.max_any_time, rep.violation_fraction, rep.members,
                       E - ok.size()}));
  }
  ctx.sink.write("ftle.csv", series);
  ctx.sink.write("ftle_members.csv", per_member);
  ctx.sink.write("ftle_summary.csv", summary);
}

// --- ews ----------------------------------------------------------------------------

void run_ews(Context& ctx) {
  const auto& w = ctx.cfg.sweep;
  const auto& sim = ctx.cfg.sim;
  const CovarianceSpec spec = ctx.cfg.noise.resolve();
  std::size_t m = w.m_trunc;
  for (auto k : w.mode_index) m = std::max(m, k);
  const SpectralBasis basis = spectral_basis(ctx.g, m);
  const StationaryCovariance analytic(basis, spec);
  const NoiseField noise(spec, ctx.grid);
  const std::size_t A = ctx.alphas.size(), E = w.ensemble;
  const std::size_t expected =
      static_cast<std::size_t>((sim.nt - sim.burn_in) / sim.snapshot_stride) + 1;
  std::vector<std::vector<EwsEstimate>> est(A * E);
  std::vector<double> job_alpha(A * E);
  for (std::size_t j = 0; j < A * E; ++j) job_alpha[j] = ctx.alphas[j / E];
  const auto errors = parallel_for(A * E, ctx.opts.workers, [&](std::size_t j) {
    RngStream rng(ctx.cfg.seed, j % E);
    FieldState u = initial_kick(noise, sim.dt, sim.sigma, rng);
    EwsStream stream(basis, w.mode_index, w.points, sim.burn_in, expected);
    integrate(u.values, 0.0, ctx.g, DriftSpec::constant(job_alpha[j]), noise, sim, rng, w.model,
              [&](std::int64_t step, double, std::span<const double> s) {
                if (step % sim.snapshot_stride == 0) stream.observe(step, s);
              });
    est[j] = stream.estimates();
  });
  for (std::size_t i = 0; i < E; ++i) ctx.streams.push_back(i);
  ctx.record(errors, E, job_alpha);

  const auto analytic_or_nan = [](auto&& f) {
    try {
      return f();
    } catch (const Error&) {
      return kNaN;
    }
  };
  CsvTable modes({"alpha", "k1", "k2", "analytic_value", "empirical_mean", "empirical_stderr", "n_seeds",
                  "band_low", "band_high"});
  CsvTable points({"alpha", "p", "x", "analytic_value", "empirical_mean", "empirical_stderr", "n_seeds",
                   "band_low", "band_high"});
  const std::size_t per = w.mode_index.size() + w.points.size();
  for (std::size_t a = 0; a < A; ++a) {
    const double alpha = ctx.alphas[a];
    for (std::size_t q = 0; q < per; ++q) {
      std::vector<EwsEstimate> members;
      for (std::size_t i = 0; i < E; ++i)
        if (!est[a * E + i].empty()) members.push_back(est[a * E + i][q]);
      if (members.empty()) continue;
      const EwsEstimate e = ensemble_estimate(members);
      const double lo = e.value - 2.0 * e.std_error, hi = e.value + 2.0 * e.std_error;
      if (e.kind == EwsEstimate::Kind::ModeCovariance) {
        const double an = analytic_or_nan([&] { return analytic.entry(e.k1, e.k2, alpha, sim.sigma); });
        modes.row(cells({alpha, e.k1, e.k2, an, e.value, e.std_error, members.size(), lo, hi}));
      } else {
        const double an = analytic_or_nan([&] { return analytic.pointwise(e.p, alpha, sim.sigma, w.m_trunc); });
        points.row(cells({alpha, e.p, ctx.grid.x(e.p), an, e.value, e.std_error, members.size(), lo, hi}));
      }
    }
  }
  if (!w.mode_index.empty()) ctx.sink.write("ews_mode.csv", modes);
  if (!w.points.empty()) ctx.sink.write("ews_pointwise.csv", points);
}

// --- exit ---------------------------------------------------------------------------

void run_exit(Context& ctx) {
  const auto& w = ctx.cfg.sweep;
  std::vector<DriftSpec> drifts;
  if (w.ramp) {
    const double cap = w.ramp_alpha_max ? w.ramp_alpha_max->resolve(ctx.lambda1)
                                        : std::numeric_limits<double>::infinity();
    drifts.push_back(DriftSpec::ramp(w.ramp_alpha0.resolve(ctx.lambda1), w.ramp_eps, cap));
  } else {
    for (double a : ctx.alphas) drifts.push_back(DriftSpec::constant(a));
  }
  CsvTable tail({"alpha", "h", "n", "n_exited", "p_hat", "ci_low", "ci_high", "x"});
  CsvTable moments({"alpha", "h", "k", "moment", "jackknife_err", "censored_fraction", "lower_bound"});
  CsvTable fit({"alpha", "eps", "q_star", "slope", "intercept", "r2", "spearman", "grows_with_x", "all_censored"});
  for (const DriftSpec& drift : drifts) {
    ExitExperiment exp{ctx.g, ctx.cfg.noise.resolve(), drift, ctx.cfg.sim, w.h, {w.s, w.sobolev_modes}, w.ensemble, {}};
    const ExitSamples samples = simulate_exit_times(exp, ctx.cfg.seed, ctx.opts.workers);
    for (std::size_t i = 0; i < samples.failures.size(); ++i)
      if (!samples.failures[i].empty())
        ctx.failures.push_back("alpha=" + format_number(drift.alpha0) + " member=" + std::to_string(i) + ": " +
                               samples.failures[i]);
    const TailTable tt = tail_table(samples);
    const MomentTable mt = moment_table(samples, w.k_max);
    for (const auto& r : tt.rows)
      tail.row(cells({drift.alpha0, r.h, r.n, r.n_exited, r.p_hat, r.ci_low, r.ci_high, r.x}));
    for (const auto& r : mt.rows)
      moments.row(cells({drift.alpha0, r.h, r.k, r.moment, r.jackknife_err, r.censored_fraction, r.lower_bound}));
    fit.row(cells({drift.alpha0, drift.eps, tt.q_star, tt.regression ? tt.regression->slope : kNaN,
                   tt.regression ? tt.regression->intercept : kNaN, tt.regression ? tt.regression->r2 : kNaN,
                   mt.spearman, mt.grows_with_x, tt.all_censored}));
  }
  for (std::size_t i = 0; i < w.ensemble; ++i) ctx.streams.push_back(i);
  ctx.sink.write("exit_tail.csv", tail);
  ctx.sink.write("exit_moments.csv", moments);
  ctx.sink.write("exit_fit.csv", fit);
}

// --- sync ---------------------------------------------------------------------------

void run_sync(Context& ctx) {
  const auto& w = ctx.cfg.sweep;
  const CovarianceSpec spec = ctx.cfg.noise.resolve();
  const SpectralBasis basis = spectral_basis(ctx.g, 1);
  const auto e1 = basis.vector(1);
  const std::size_t A = ctx.alphas.size();
  std::vector<std::optional<SyncResult>> res(A);
  const auto errors = parallel_for(A, ctx.opts.workers, [&](std::size_t a) {
    FieldState ua{std::vector<double>(ctx.grid.N, 0.0), 0.0};
    FieldState ub = ua;
    for (std::size_t n = 0; n < ctx.grid.N; ++n) ub.values[n] = w.gap * e1[n];
    res[a] = synchronization_gap(ua, ub, ctx.g, DriftSpec::constant(ctx.alphas[a]), spec, ctx.cfg.sim,
                                 RngStream(ctx.cfg.seed, 0));
  });
  ctx.streams = {0};
  ctx.record(errors, 1, ctx.alphas);
  CsvTable series({"alpha", "t", "gap"});
  CsvTable summary({"alpha", "initial_gap", "final_gap", "max_order_excess", "t_below_1e-6"});
  for (std::size_t a = 0; a < A; ++a) {
    if (!res[a]) continue;
    const auto& r = *res[a];
    double t_hit = kNaN;
    for (std::size_t i = 0; i < r.times.size(); ++i) {
      series.row(cells({ctx.alphas[a], r.times[i], r.gap[i]}));
      if (std::isnan(t_hit) && r.gap[i] < 1e-6) t_hit = r.times[i];
    }
    summary.row(cells({ctx.alphas[a], r.gap.front(), r.gap.back(), r.max_order_excess, t_hit}));
  }
  ctx.sink.write("sync.csv", series);
  ctx.sink.write("sync_summary.csv", summary);
}

}  // namespace

RunResult run(const ExperimentConfig& cfg_in, const RunOptions& opts) {
  ExperimentConfig cfg = cfg_in;
  if (opts.seed) cfg.seed = *opts.seed;
  const std::filesystem::path dir = opts.out_dir ? *opts.out_dir : std::filesystem::path(cfg.output_dir);
  RunManifest manifest;
  manifest.started = utc_timestamp();
  Context ctx(cfg, opts, dir);
  const std::string normalized = serialize(cfg);
  ctx.sink.write("config.ini", normalized);
  switch (cfg.command) {
    case Command::Spectrum: run_spectrum(ctx); break;
    case Command::Simulate: run_simulate(ctx); break;
    case Command::SteadyStates: run_steady_states(ctx); break;
    case Command::FtleSweep: run_ftle(ctx); break;
    case Command::EwsSweep: run_ews(ctx); break;
    case Command::ExitSweep: run_exit(ctx); break;
    case Command::SyncCheck: run_sync(ctx); break;
  }
  RunResult result;
  result.status = ctx.failures.empty() ? kOk : kPartialFailure;
  result.out_dir = dir;
  result.member_failures = ctx.failures;
  result.files = ctx.sink.files();

  manifest.command = std::string(to_string(cfg.command));
  manifest.config_hash = sha256_hex(normalized);
  manifest.version = kVersion;
  manifest.master_seed = cfg.seed;
  manifest.stream_indices = ctx.streams;
  manifest.finished = utc_timestamp();
  manifest.exit_status = result.status;
  manifest.member_failures = ctx.failures;
  manifest.files = result.files;
  write_text(dir / "manifest.json", manifest.to_json());
  return result;
}

int exit_status_for(const std::exception& e) noexcept {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    if (err->kind() == ErrorKind::Config) return kConfigError;
  }
  return kRuntimeError;
}

}  // namespace chafee
