#include "chafee/ftle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "chafee/error.hpp"
#include "chafee/linalg.hpp"
#include "chafee/simd.hpp"

namespace chafee {

TangentBundle TangentBundle::from_vectors(const Grid& grid, std::vector<double> rows, std::size_t k,
                                          InnerProduct product) {
  if (k == 0 || rows.size() != k * grid.N) fail(ErrorKind::Dimension, "tangent bundle: bad vector storage");
  TangentBundle b{grid, k, std::move(rows), 0.0, product};
  linalg::orthonormalize_rows(b.vectors, k, grid.N, b.weight());
  return b;
}

TangentBundle TangentBundle::leading_modes(const SpectralBasis& basis, std::size_t k,
                                           InnerProduct product) {
  if (k == 0 || k > basis.m) fail(ErrorKind::Truncation, "tangent bundle: k exceeds retained modes");
  std::vector<double> rows(basis.vectors.begin(), basis.vectors.begin() + static_cast<std::ptrdiff_t>(k * basis.grid.N));
  return from_vectors(basis.grid, std::move(rows), k, product);
}

void TangentBundle::renormalize() {
  const std::vector<double> scale = linalg::orthonormalize_rows(vectors, k, grid.N, weight());
  for (double s : scale) log_volume += std::log(s);
}

double TangentBundle::current_log_volume() const {
  std::vector<double> copy = vectors;
  const std::vector<double> scale = linalg::orthonormalize_rows(copy, k, grid.N, weight());
  double v = log_volume;
  for (double s : scale) v += std::log(s);
  return v;
}

FrozenLinearPropagator::FrozenLinearPropagator(const Potential& g, double alpha, double dt)
    : basis_(spectral_basis(g, g.grid().N)), growth_(basis_.m) {
  for (std::size_t j = 0; j < basis_.m; ++j) growth_[j] = std::exp((alpha - basis_.lambdas[j]) * dt);
}

void FrozenLinearPropagator::apply(std::span<double> v) const {
  const auto& k = simd::active();
  const std::size_t n = basis_.grid.N;
  thread_local std::vector<double> c;
  c.resize(basis_.m);
  k.project_rows(basis_.vectors.data(), basis_.m, n, v.data(), c.data());
  for (std::size_t j = 0; j < basis_.m; ++j) c[j] *= basis_.grid.dx * growth_[j];
  k.combine_rows(basis_.vectors.data(), basis_.m, n, c.data(), v.data());
}

namespace {

void record_point(FtleRecord& rec, const TangentBundle& b, double t) {
  rec.times.push_back(t);
  rec.exponents.push_back(b.current_log_volume() / t);
}

template <class AdvanceOne>
void run_tangent_loop(TangentBundle& bundle, FtleRecord& rec, std::int64_t steps, double dt,
                      const TangentOptions& opts, AdvanceOne&& advance) {
  if (opts.renorm_every < 1 || opts.record_every < 1)
    fail(ErrorKind::Parameter, "tangents: renorm_every and record_every must be positive");
  for (std::int64_t j = 1; j <= steps; ++j) {
    advance(j);
    if (j % opts.renorm_every == 0) {
      try {
        bundle.renormalize();
      } catch (const Error& e) {
        throw Error(e.kind(), std::string(e.what()) + " (step " + std::to_string(j) + ")", j);
      }
    }
    if (j % opts.record_every == 0 || j == steps) record_point(rec, bundle, dt * static_cast<double>(j));
  }
}

}  // namespace

FtleRecord evolve_tangents(TangentBundle& bundle, const FrozenLinearPropagator& base,
                           std::int64_t steps, double dt, const TangentOptions& opts) {
  FtleRecord rec;
  rec.k = bundle.k;
  run_tangent_loop(bundle, rec, steps, dt, opts, [&](std::int64_t) {
    for (std::size_t i = 0; i < bundle.k; ++i) base.apply(bundle.vector(i));
  });
  return rec;
}

FtleRecord evolve_tangents(TangentBundle& bundle, std::span<double> u, const Potential& g,
                           double alpha, const NoiseField& noise, const SimConfig& cfg,
                           RngStream& rng, const TangentOptions& opts) {
  cfg.validate();
  if (u.size() != g.grid().N) fail(ErrorKind::Dimension, "tangents: base state length mismatch");
  SemiImplicitStepper stepper(g, cfg.dt);
  stepper.set_alpha(alpha);
  std::vector<double> inc(g.grid().N, 0.0);
  FtleRecord rec;
  rec.k = bundle.k;
  rec.alpha = alpha;
  rec.master_seed = rng.master_seed();
  rec.stream_index = rng.stream_index();
  run_tangent_loop(bundle, rec, cfg.nt, cfg.dt, opts, [&](std::int64_t j) {
    try {
      for (std::size_t i = 0; i < bundle.k; ++i) stepper.step_variation(bundle.vector(i), u);
      if (cfg.sigma != 0.0) noise.sample(cfg.dt, rng, inc);
      stepper.step(u, inc, cfg.sigma, Model::Nonlinear);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " (step " + std::to_string(j) + ")", j);
    }
  });
  return rec;
}

double attractor_burn_in_time(double lambda1, double alpha) {
  return alpha < lambda1 ? 20.0 / (lambda1 - alpha) : 50.0;
}

FtleRecord ftle_on_attractor(const Potential& g, double alpha, const CovarianceSpec& spec,
                             const SimConfig& cfg, std::size_t k, RngStream& rng,
                             const TangentOptions& opts) {
  cfg.validate();
  const SpectralBasis basis = spectral_basis(g, std::max<std::size_t>(k, 1));
  const NoiseField noise(spec, g.grid());
  const std::int64_t burn_steps =
      cfg.burn_in > 0 ? cfg.burn_in
                      : static_cast<std::int64_t>(std::ceil(attractor_burn_in_time(basis.lambda(1), alpha) / cfg.dt));

  FieldState u = initial_kick(noise, cfg.dt, cfg.sigma, rng);
  SimConfig burn = cfg;
  burn.nt = burn_steps;
  integrate(u.values, 0.0, g, DriftSpec::constant(alpha), noise, burn, rng, Model::Nonlinear, {});

  TangentBundle bundle = TangentBundle::leading_modes(basis, k);
  FtleRecord rec = evolve_tangents(bundle, u.values, g, alpha, noise, cfg, rng, opts);
  return rec;
}

BoundReport bound_report(std::span<const FtleRecord> records, const SpectralBasis& basis,
                         double alpha, double tol) {
  BoundReport r;
  r.alpha = alpha;
  r.tolerance = tol;
  r.members = records.size();
  if (records.empty()) return r;
  r.k = records.front().k;
  if (r.k == 0 || r.k > basis.m) fail(ErrorKind::Truncation, "bound_report: k exceeds retained modes");
  for (std::size_t j = 1; j <= r.k; ++j) r.bound += alpha - basis.lambda(j);

  const std::size_t nt = records.front().times.size();
  r.violation_by_time.assign(nt, 0.0);
  r.max_any_time = -std::numeric_limits<double>::infinity();
  r.max_final = -std::numeric_limits<double>::infinity();
  std::size_t violators = 0, positive = 0;
  double sum = 0.0, sum2 = 0.0;
  for (const auto& rec : records) {
    if (rec.k != r.k || rec.times.size() != nt) fail(ErrorKind::Alignment, "bound_report: heterogeneous ensemble");
    bool any = false;
    for (std::size_t i = 0; i < nt; ++i) {
      const double L = rec.exponents[i];
      r.max_any_time = std::max(r.max_any_time, L);
      if (L > r.bound + tol) {
        any = true;
        r.violation_by_time[i] += 1.0;
      }
    }
    if (any) ++violators;
    const double fin = rec.final_value();
    r.max_final = std::max(r.max_final, fin);
    if (fin > 0.0) ++positive;
    sum += fin;
    sum2 += fin * fin;
  }
  const double n = static_cast<double>(records.size());
  for (auto& v : r.violation_by_time) v /= n;
  r.violation_fraction = static_cast<double>(violators) / n;
  r.fraction_positive = static_cast<double>(positive) / n;
  r.mean_final = sum / n;
  if (records.size() > 1) {
    const double var = std::max(0.0, (sum2 - n * r.mean_final * r.mean_final) / (n - 1.0));
    r.stderr_final = std::sqrt(var / n);
  }
  r.gap_to_bound = r.bound - r.max_final;
  return r;
}

}  // namespace chafee
