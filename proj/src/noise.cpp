#include "chafee/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "chafee/error.hpp"
#include "chafee/linalg.hpp"
#include "chafee/simd.hpp"

namespace chafee {

CovarianceSpec CovarianceSpec::identity(std::size_t M, std::size_t D, double q_all) {
  CovarianceSpec s;
  s.M = M;
  s.D = D;
  s.q.assign(M, q_all);
  s.mix.assign(D * D, 0.0);
  for (std::size_t i = 0; i < D; ++i) s.mix[i * D + i] = 1.0;
  return s;
}

double CovarianceSpec::q_max() const {
  return q.empty() ? 0.0 : *std::max_element(q.begin(), q.end());
}

double CovarianceSpec::trace() const {
  double s = 0.0;
  for (double v : q) s += v;
  return s;
}

ValidationReport validate(const CovarianceSpec& spec, double L) {
  ValidationReport r;
  auto violate = [&r](std::string msg) {
    r.ok = false;
    r.violations.push_back(std::move(msg));
  };
  if (spec.M == 0) violate("size: M must be at least 1");
  if (spec.D > spec.M) violate("size: D must not exceed M");
  if (spec.q.size() != spec.M) violate("size: q must have M entries");
  if (spec.mix.size() != spec.D * spec.D) violate("size: mix must be D x D");

  for (std::size_t j = 0; j < spec.q.size(); ++j) {
    if (!(spec.q[j] > 0.0) || !std::isfinite(spec.q[j])) {
      std::ostringstream os;
      os << "positivity: q_" << (j + 1) << " = " << spec.q[j] << " is not strictly positive";
      violate(os.str());
    }
  }

  if (spec.mix.size() == spec.D * spec.D) {
    double worst = 0.0;
    for (std::size_t i = 0; i < spec.D; ++i)
      for (std::size_t j = 0; j < spec.D; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < spec.D; ++k) s += spec.mix[k * spec.D + i] * spec.mix[k * spec.D + j];
        worst = std::max(worst, std::fabs(s - (i == j ? 1.0 : 0.0)));
      }
    if (!(worst <= 1e-10)) {
      std::ostringstream os;
      os << "orthonormality: max |O^T O - I| = " << worst << " exceeds 1e-10";
      violate(os.str());
    }
  }

  double sum = 0.0;
  for (std::size_t j = 0; j < spec.q.size(); ++j) {
    const double lp = std::pow((static_cast<double>(j + 1) * std::numbers::pi / L), 2);
    sum += spec.q[j] * std::pow(lp, spec.decay_exponent);
  }
  r.decay_sum = sum;
  if (!std::isfinite(sum)) violate("decay: truncated sum q_j lambda'_j^gamma is not finite");
  r.note = "decay condition checked at truncation M only";
  return r;
}

CovarianceSpec random_spec(std::size_t M, std::size_t D, std::uint64_t seed) {
  if (M == 0) fail(ErrorKind::Parameter, "random_spec: M must be at least 1");
  if (D > M) fail(ErrorKind::Parameter, "random_spec: D must not exceed M");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x6e6f6973u};
  std::mt19937_64 eng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  CovarianceSpec s;
  s.M = M;
  s.D = D;
  // Columns of G are stored as rows so Gram-Schmidt runs on contiguous data;
  // the result is Q^T with R's diagonal positive.
  std::vector<double> qt(D * D);
  for (auto& x : qt) x = normal(eng);
  if (D > 0) linalg::orthonormalize_rows(qt, D, D, 1.0);
  s.mix.resize(D * D);
  for (std::size_t i = 0; i < D; ++i)
    for (std::size_t j = 0; j < D; ++j) s.mix[i * D + j] = qt[j * D + i];

  s.q.resize(M);
  for (auto& v : s.q) v = 1.0 - uniform(eng);  // (0, 1]
  const double mx = s.q_max();
  for (auto& v : s.q) v /= mx;
  return s;
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
    : master_seed_(master_seed), stream_index_(stream_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream_index),
                    static_cast<std::uint32_t>(stream_index >> 32), 0x73747265u};
  engine_.seed(seq);
}

NoiseField::NoiseField(const CovarianceSpec& spec, const Grid& grid)
    : grid_(grid), M_(spec.M), b_(spec.M * grid.N, 0.0), sqrt_q_(spec.M) {
  if (spec.q.size() != spec.M || spec.mix.size() != spec.D * spec.D || spec.D > spec.M)
    fail(ErrorKind::Validation, "noise: inconsistent covariance spec sizes");
  const std::size_t N = grid.N;
  std::vector<std::vector<double>> sines(spec.M);
  for (std::size_t k = 0; k < spec.M; ++k) sines[k] = sine_mode(grid, k + 1);
  for (std::size_t j = 0; j < spec.M; ++j) {
    double* row = b_.data() + j * N;
    if (j < spec.D) {
      for (std::size_t k = 0; k < spec.D; ++k) {
        const double o = spec.mix[j * spec.D + k];
        for (std::size_t n = 0; n < N; ++n) row[n] += o * sines[k][n];
      }
    } else {
      std::copy(sines[j].begin(), sines[j].end(), row);
    }
    sqrt_q_[j] = std::sqrt(spec.q[j]);
  }
}

std::span<const double> NoiseField::eigenfield(std::size_t j) const {
  if (j == 0 || j > M_) fail(ErrorKind::Dimension, "noise: eigenfield index out of range");
  return std::span<const double>(b_).subspan((j - 1) * grid_.N, grid_.N);
}

void NoiseField::synthesize(double dt, std::span<const double> normals, std::span<double> out) const {
  if (normals.size() != M_ || out.size() != grid_.N)
    fail(ErrorKind::Dimension, "noise: synthesize length mismatch");
  const double sdt = std::sqrt(dt);
  thread_local std::vector<double> w;
  w.resize(M_);
  for (std::size_t j = 0; j < M_; ++j) w[j] = sdt * sqrt_q_[j] * normals[j];
  simd::active().combine_rows(b_.data(), M_, grid_.N, w.data(), out.data());
}

void NoiseField::sample(double dt, RngStream& rng, std::span<double> out) const {
  if (out.size() != grid_.N) fail(ErrorKind::Dimension, "noise: output length mismatch");
  const double sdt = std::sqrt(dt);
  thread_local std::vector<double> w;
  w.resize(M_);
  for (std::size_t j = 0; j < M_; ++j) w[j] = sdt * sqrt_q_[j] * rng.normal();
  simd::active().combine_rows(b_.data(), M_, grid_.N, w.data(), out.data());
}

std::vector<double> sample_increment(const CovarianceSpec& spec, const Grid& grid, double dt,
                                     RngStream& rng) {
  if (dt < 0.0) fail(ErrorKind::Parameter, "sample_increment: dt must be non-negative");
  std::vector<double> out(grid.N);
  NoiseField(spec, grid).sample(dt, rng, out);
  return out;
}

std::vector<double> covariance_in_basis(const CovarianceSpec& spec, const SpectralBasis& basis,
                                        const Grid& grid) {
  const NoiseField field(spec, grid);
  const std::size_t m = basis.m, M = spec.M, N = grid.N;
  // proj(i, n) = <e_i, b_n>_dx
  std::vector<double> proj(m * M);
  for (std::size_t i = 0; i < m; ++i) {
    simd::active().project_rows(field.eigenfields().data(), M, N, basis.vector(i + 1).data(),
                                proj.data() + i * M);
    for (std::size_t n = 0; n < M; ++n) proj[i * M + n] *= grid.dx;
  }
  std::vector<double> C(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) {
      double s = 0.0;
      for (std::size_t n = 0; n < M; ++n) s += spec.q[n] * proj[i * M + n] * proj[j * M + n];
      C[i * m + j] = s;
      C[j * m + i] = s;
    }
  return C;
}

}  // namespace chafee
