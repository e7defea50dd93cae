#include "chafee/ews.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chafee/error.hpp"
#include "chafee/simd.hpp"

namespace chafee {

StationaryCovariance::StationaryCovariance(const SpectralBasis& basis, const CovarianceSpec& spec)
    : basis_(basis), C_(covariance_in_basis(spec, basis, basis.grid)) {}

void StationaryCovariance::require_below_threshold(double alpha, std::size_t m_trunc) const {
  if (m_trunc == 0 || m_trunc > basis_.m)
    fail(ErrorKind::Truncation, "V_inf: truncation " + std::to_string(m_trunc) + " exceeds retained modes " +
                                    std::to_string(basis_.m));
  if (!(alpha < basis_.lambda(1)))
    fail(ErrorKind::DivergenceDomain, "V_inf: alpha = " + std::to_string(alpha) +
                                          " is not below lambda_1 = " + std::to_string(basis_.lambda(1)));
}

double StationaryCovariance::entry(std::size_t j1, std::size_t j2, double alpha, double sigma) const {
  if (j1 == 0 || j2 == 0 || j1 > basis_.m || j2 > basis_.m)
    fail(ErrorKind::Truncation, "V_inf: mode index out of range");
  const double denom = basis_.lambda(j1) + basis_.lambda(j2) - 2.0 * alpha;
  if (!(denom > 0.0))
    fail(ErrorKind::DivergenceDomain, "V_inf: alpha >= (lambda_j1 + lambda_j2)/2 for (" +
                                          std::to_string(j1) + "," + std::to_string(j2) + ")");
  return sigma * sigma / denom * C_[(j1 - 1) * basis_.m + (j2 - 1)];
}

VinfEntries StationaryCovariance::matrix(double alpha, double sigma, std::size_t m_trunc) const {
  require_below_threshold(alpha, m_trunc);
  VinfEntries v{m_trunc, std::vector<double>(m_trunc * m_trunc), alpha, sigma};
  for (std::size_t i = 1; i <= m_trunc; ++i)
    for (std::size_t j = 1; j <= m_trunc; ++j) v.values[(i - 1) * m_trunc + (j - 1)] = entry(i, j, alpha, sigma);
  return v;
}

double StationaryCovariance::bilinear(std::span<const double> f1, std::span<const double> f2,
                                      double alpha, double sigma, std::size_t m_trunc) const {
  require_below_threshold(alpha, m_trunc);
  const Grid& grid = basis_.grid;
  if (f1.size() != grid.N || f2.size() != grid.N) fail(ErrorKind::Dimension, "V_inf: field length mismatch");
  std::vector<double> c1(m_trunc), c2(m_trunc);
  for (std::size_t j = 1; j <= m_trunc; ++j) {
    c1[j - 1] = inner_dx(f1, basis_.vector(j), grid);
    c2[j - 1] = inner_dx(f2, basis_.vector(j), grid);
  }
  double s = 0.0;
  for (std::size_t j1 = 1; j1 <= m_trunc; ++j1)
    for (std::size_t j2 = 1; j2 <= m_trunc; ++j2) s += c1[j2 - 1] * c2[j1 - 1] * entry(j1, j2, alpha, sigma);
  return s;
}

double StationaryCovariance::pointwise(std::size_t p, double alpha, double sigma, std::size_t m_trunc) const {
  require_below_threshold(alpha, m_trunc);
  if (p == 0 || p > basis_.grid.N) fail(ErrorKind::Dimension, "V_inf: grid index out of range");
  double s = 0.0;
  for (std::size_t j1 = 1; j1 <= m_trunc; ++j1) {
    const double a = basis_.vector(j1)[p - 1];
    for (std::size_t j2 = 1; j2 <= m_trunc; ++j2)
      s += a * basis_.vector(j2)[p - 1] * entry(j1, j2, alpha, sigma);
  }
  return s;
}

double StationaryCovariance::lyapunov_residual(double alpha, double sigma, std::size_t m_trunc) const {
  const VinfEntries V = matrix(alpha, sigma, m_trunc);
  double worst = 0.0;
  for (std::size_t i = 1; i <= m_trunc; ++i)
    for (std::size_t j = 1; j <= m_trunc; ++j) {
      const double r = (alpha - basis_.lambda(i)) * V(i, j) + (alpha - basis_.lambda(j)) * V(i, j) +
                       sigma * sigma * C_[(i - 1) * basis_.m + (j - 1)];
      worst = std::max(worst, std::fabs(r));
    }
  return worst;
}

double vinf_entry(std::size_t j1, std::size_t j2, const SpectralBasis& basis,
                  const CovarianceSpec& spec, double alpha, double sigma) {
  return StationaryCovariance(basis, spec).entry(j1, j2, alpha, sigma);
}

double vinf_bilinear(std::span<const double> f1, std::span<const double> f2,
                     const SpectralBasis& basis, const CovarianceSpec& spec, double alpha,
                     double sigma, std::size_t m_trunc) {
  return StationaryCovariance(basis, spec).bilinear(f1, f2, alpha, sigma, m_trunc);
}

double vinf_pointwise(std::size_t p, const SpectralBasis& basis, const CovarianceSpec& spec,
                      double alpha, double sigma, std::size_t m_trunc) {
  return StationaryCovariance(basis, spec).pointwise(p, alpha, sigma, m_trunc);
}

// --- estimators ------------------------------------------------------------------

CovarianceAccumulator::CovarianceAccumulator(std::size_t expected_samples, std::size_t batches)
    : expected_(expected_samples), batches_(batches) {
  if (expected_ >= 2 * batches_ && batches_ >= 2) batch_.resize(batches_);
}

void CovarianceAccumulator::add(double x, double y) {
  if (!batch_.empty()) {
    const std::size_t b = std::min(batches_ - 1, total_.count() * batches_ / expected_);
    batch_[b].add(x, y);
  }
  total_.add(x, y);
}

double CovarianceAccumulator::batch_std_error() const {
  if (batch_.empty()) return 0.0;
  std::vector<double> v;
  for (const auto& b : batch_)
    if (b.count() >= 2) v.push_back(b.cov());
  if (v.size() < 2) return 0.0;
  return stats::mean_stderr(v).sem;
}

namespace {

std::size_t first_post_burn_in(const TrajectoryRecord& traj) {
  std::size_t i = 0;
  while (i < traj.size() && traj.steps[i] < traj.config.burn_in) ++i;
  if (traj.size() - i < 2)
    fail(ErrorKind::Estimator, "estimator: fewer than 2 post-burn-in snapshots");
  return i;
}

}  // namespace

EwsEstimate empirical_mode_covariance(const TrajectoryRecord& traj, const SpectralBasis& basis,
                                      std::size_t k1, std::size_t k2) {
  const std::size_t first = first_post_burn_in(traj);
  const std::span<const double> e1 = basis.vector(k1), e2 = basis.vector(k2);
  CovarianceAccumulator acc(traj.size() - first);
  for (std::size_t i = first; i < traj.size(); ++i) {
    const auto u = traj.snapshot(i);
    acc.add(inner_dx(u, e1, traj.grid), inner_dx(u, e2, traj.grid));
  }
  EwsEstimate e;
  e.kind = EwsEstimate::Kind::ModeCovariance;
  e.value = acc.value();
  e.std_error = acc.batch_std_error();
  e.k1 = k1;
  e.k2 = k2;
  e.samples = acc.count();
  return e;
}

EwsEstimate empirical_pointwise_variance(const TrajectoryRecord& traj, std::size_t p) {
  if (p == 0 || p > traj.grid.N) fail(ErrorKind::Dimension, "estimator: grid index out of range");
  const std::size_t first = first_post_burn_in(traj);
  CovarianceAccumulator acc(traj.size() - first);
  for (std::size_t i = first; i < traj.size(); ++i) {
    const double v = traj.snapshot(i)[p - 1];
    acc.add(v, v);
  }
  EwsEstimate e;
  e.kind = EwsEstimate::Kind::PointwiseVariance;
  e.value = acc.value();
  e.std_error = acc.batch_std_error();
  e.p = p;
  e.samples = acc.count();
  return e;
}

EwsStream::EwsStream(const SpectralBasis& basis, std::vector<std::size_t> modes,
                     std::vector<std::size_t> points, std::int64_t burn_in, std::size_t expected_samples)
    : basis_(&basis), modes_(std::move(modes)), points_(std::move(points)), burn_in_(burn_in) {
  for (auto k : modes_)
    if (k == 0 || k > basis.m) fail(ErrorKind::Truncation, "estimator: mode index exceeds retained modes");
  for (auto p : points_)
    if (p == 0 || p > basis.grid.N) fail(ErrorKind::Dimension, "estimator: grid index out of range");
  acc_.assign(modes_.size() + points_.size(), CovarianceAccumulator(expected_samples));
}

void EwsStream::observe(std::int64_t step, std::span<const double> u) {
  if (step < burn_in_) return;
  std::size_t a = 0;
  for (auto k : modes_) {
    const double c = inner_dx(u, basis_->vector(k), basis_->grid);
    acc_[a++].add(c, c);
  }
  for (auto p : points_) {
    const double v = u[p - 1];
    acc_[a++].add(v, v);
  }
}

std::vector<EwsEstimate> EwsStream::estimates() const {
  std::vector<EwsEstimate> out;
  std::size_t a = 0;
  for (auto k : modes_) {
    const auto& acc = acc_[a++];
    if (acc.count() < 2) fail(ErrorKind::Estimator, "estimator: fewer than 2 post-burn-in snapshots");
    out.push_back({EwsEstimate::Kind::ModeCovariance, acc.value(), acc.batch_std_error(), k, k, 0, acc.count()});
  }
  for (auto p : points_) {
    const auto& acc = acc_[a++];
    if (acc.count() < 2) fail(ErrorKind::Estimator, "estimator: fewer than 2 post-burn-in snapshots");
    out.push_back({EwsEstimate::Kind::PointwiseVariance, acc.value(), acc.batch_std_error(), 0, 0, p, acc.count()});
  }
  return out;
}

EwsEstimate ensemble_estimate(std::span<const EwsEstimate> members) {
  if (members.empty()) fail(ErrorKind::Estimator, "ensemble estimate: no members");
  std::vector<double> v;
  v.reserve(members.size());
  std::size_t samples = 0;
  for (const auto& m : members) {
    v.push_back(m.value);
    samples += m.samples;
  }
  const stats::MeanStderr ms = stats::mean_stderr(v);
  EwsEstimate e = members.front();
  e.value = ms.mean;
  e.std_error = ms.sem;
  e.samples = samples;
  return e;
}

stats::LinearFit scaling_fit(std::span<const double> alphas, std::span<const double> values, double lambda1) {
  if (alphas.size() != values.size()) fail(ErrorKind::Fit, "scaling_fit: length mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] < lambda1)) fail(ErrorKind::Fit, "scaling_fit: alpha must lie below lambda_1");
    if (!(values[i] > 0.0)) fail(ErrorKind::Fit, "scaling_fit: values must be positive");
    lx.push_back(std::log(lambda1 - alphas[i]));
    ly.push_back(std::log(values[i]));
  }
  return stats::least_squares(lx, ly);
}

std::size_t argmax_measurement_point(const SpectralBasis& basis) {
  const auto e1 = basis.vector(1);
  double best = -1.0;
  std::size_t idx = 0;
  for (std::size_t n = 0; n < e1.size(); ++n) {
    const double a = std::fabs(e1[n]);
    if (a > best * (1.0 + 1e-12)) {
      best = a;
      idx = n;
    }
  }
  return idx + 1;
}

}  // namespace chafee
