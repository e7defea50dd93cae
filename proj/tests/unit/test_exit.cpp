#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "chafee/error.hpp"
#include "chafee/exit.hpp"

using namespace chafee;

namespace {

constexpr double kPi = std::numbers::pi;

Potential cos3plus2(const Grid& G) {
  return Potential::from_function(G, [](double x) { return std::cos(3 * x) + 2.0; }, "cos3plus2");
}

std::vector<double> smooth_field(const Grid& G, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  std::vector<double> c(6);
  for (auto& x : c) x = nd(gen);
  std::vector<double> f(G.N, 0.0);
  for (std::size_t k = 1; k <= c.size(); ++k) {
    const auto e = sine_mode(G, k);
    for (std::size_t n = 0; n < G.N; ++n) f[n] += c[k - 1] / (k * k) * e[n];
  }
  return f;
}

ExitExperiment small_experiment(const Grid& G, double sigma, std::size_t members) {
  ExitExperiment e{cos3plus2(G), random_spec(10, 10, 3), DriftSpec::constant(0.5),
                   SimConfig{0.01, 1000, sigma, 1, 0}, {0.06, 0.07, 0.08, 0.09}, {0.4, 0}, members, {}};
  return e;
}

}  // namespace

TEST_CASE("A^s norm identities") {
  const Grid G = Grid::make(2 * kPi, 64);
  const Potential g = cos3plus2(G);
  const SpectralBasis b = spectral_basis(g, G.N);
  const SobolevSpec s04{0.4, 0};
  CHECK(a_s_norm(b.vector(1), b, s04) == doctest::Approx(std::pow(b.lambda(1), 0.2)).epsilon(1e-12));

  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd;
  std::vector<double> phi(G.N);
  for (auto& x : phi) x = nd(gen);
  CHECK(a_s_norm(phi, b, {0.0, G.N}) == doctest::Approx(norm_dx(phi, G)).epsilon(1e-8));
  for (int t = 0; t < 20; ++t) {
    for (auto& x : phi) x = nd(gen);
    const double n0 = norm_dx(phi, G);
    const double a02 = a_s_norm(phi, b, {0.2, G.N}), a04 = a_s_norm(phi, b, {0.4, G.N}), a1 = a_s_norm(phi, b, {1.0, G.N});
    CHECK(a02 <= a04);
    CHECK(n0 <= a04 * (1 + 1e-12));
    CHECK(a04 <= a1);
  }
  CHECK_THROWS_AS(SobolevNorm(spectral_basis(g, 4), {0.4, 5}), Error);
}

TEST_CASE("Young-type product inequality holds with a stable constant") {
  const Grid G = Grid::make(2 * kPi, 128);
  const SpectralBasis b = spectral_basis(cos3plus2(G), G.N);
  std::mt19937_64 gen(2);
  std::vector<double> ratio;
  for (int i = 0; i < 100; ++i) {
    const auto f1 = smooth_field(G, gen), f2 = smooth_field(G, gen);
    std::vector<double> prod(G.N);
    for (std::size_t n = 0; n < G.N; ++n) prod[n] = f1[n] * f2[n];
    ratio.push_back(a_s_norm(prod, b, {0.3, G.N}) / (a_s_norm(f1, b, {1.0, G.N}) * a_s_norm(f2, b, {0.4, G.N})));
  }
  const double c1 = *std::max_element(ratio.begin(), ratio.begin() + 50);
  const double c2 = *std::max_element(ratio.begin() + 50, ratio.end());
  CHECK(c1 / c2 <= 2.0);
  CHECK(c2 / c1 <= 2.0);
  for (double r : ratio) CHECK(r <= std::max(c1, c2));
}

TEST_CASE("deterministic reference") {
  const Grid G = Grid::make(2 * kPi, 64);
  const Potential g = cos3plus2(G);
  const SpectralBasis b = spectral_basis(g, 1);
  const SimConfig cfg{0.001, 5000, 0.0, 10, 0};
  const auto zero = deterministic_reference({std::vector<double>(G.N, 0.0), 0.0}, g, DriftSpec::constant(0.5), cfg);
  for (double x : zero.record.values) CHECK(x == 0.0);

  const double alpha = b.lambda(1) - 0.5;
  std::vector<double> u0(b.vector(1).begin(), b.vector(1).end());
  for (auto& x : u0) x *= 1e-3;
  const auto ref = deterministic_reference({u0, 0.0}, g, DriftSpec::constant(alpha), cfg);
  const double delta = std::sqrt(2.0 * ref.energy.front());
  std::vector<double> lt, ln;
  for (std::size_t i = 0; i < ref.record.size(); ++i) {
    const double a = std::sqrt(2.0 * ref.energy[i]);
    CHECK(a <= delta * (1 + 1e-12));
    lt.push_back(ref.record.times[i]);
    ln.push_back(std::log(a));
  }
  const double slope = stats::least_squares(lt, ln).slope;
  CHECK(slope == doctest::Approx(-(b.lambda(1) - alpha)).epsilon(0.05));
  CHECK(ref.fitted_rate > 0.0);
  CHECK(ref.energy.back() <= ref.energy.front() * std::exp(-2.0 * ref.fitted_rate * 5.0) * (1 + 1e-9));

  CHECK_THROWS_AS(deterministic_reference({u0, 0.0}, g, DriftSpec::ramp(b.lambda(1) - 0.1, 0.1), cfg), Error);
  CHECK_NOTHROW(deterministic_reference({u0, 0.0}, g, DriftSpec::ramp(b.lambda(1) - 0.1, 0.1, b.lambda(1) - 0.05), cfg));
}

TEST_CASE("first exit time") {
  const Grid G = Grid::make(2 * kPi, 48);
  const Potential g = cos3plus2(G);
  const SpectralBasis b = spectral_basis(g, G.N);
  const auto spec = random_spec(10, 10, 4);
  const SimConfig det{0.01, 500, 0.0, 1, 0};
  const FieldState u0{std::vector<double>(G.N, 0.0), 0.0};
  const auto ref = deterministic_reference(u0, g, DriftSpec::constant(0.5), det).record;
  RngStream r0(1, 0);
  const auto same = integrate_sde(u0, g, DriftSpec::constant(0.5), spec, det, r0);
  CHECK_FALSE(first_exit_time(same, ref, 1e-12, {0.4, 0}, b).has_value());

  SimConfig noisy = det;
  noisy.sigma = 0.05;
  RngStream r1(1, 0);
  const auto path = integrate_sde(u0, g, DriftSpec::constant(0.5), spec, noisy, r1);
  const auto tiny = first_exit_time(path, ref, 1e-12, {0.4, 0}, b);
  REQUIRE(tiny.has_value());
  CHECK(*tiny >= path.times[0]);
  CHECK(*tiny <= path.times[1]);
  double prev = 0.0;
  for (double h : {0.002, 0.004, 0.008, 0.016}) {
    const auto t = first_exit_time(path, ref, h, {0.4, 0}, b);
    if (!t) break;
    CHECK(*t >= prev);
    prev = *t;
  }
  SimConfig other = det;
  other.snapshot_stride = 2;
  const auto coarse = deterministic_reference(u0, g, DriftSpec::constant(0.5), other).record;
  CHECK_THROWS_AS(first_exit_time(path, coarse, 0.01, {0.4, 0}, b), Error);
}

TEST_CASE("experiment validation") {
  const Grid G = Grid::make(2 * kPi, 32);
  auto e = small_experiment(G, 0.05, 4);
  CHECK_NOTHROW(e.validate());
  e.h_ladder = {0.02, 0.01};
  CHECK_THROWS_AS(e.validate(), Error);
  auto low = small_experiment(G, 0.05, 4);
  low.g = Potential::cos3plus1(G);
  CHECK_THROWS_AS(low.validate(), Error);
  CHECK(SobolevSpec{0.6, 0}.outside_theorem_range());
  CHECK_FALSE(SobolevSpec{0.4, 0}.outside_theorem_range());
}

TEST_CASE("tail and moment tables") {
  const Grid G = Grid::make(2 * kPi, 32);
  const auto e = small_experiment(G, 0.05, 60);
  const ExitSamples s1 = simulate_exit_times(e, 7, 1);
  const ExitSamples s3 = simulate_exit_times(e, 7, 3);
  CHECK(s1.tau == s3.tau);
  CHECK(s1.failed() == 0);
  CHECK(s1.q_star == e.spec.q_max());

  const TailTable t = tail_table(s1);
  REQUIRE(t.rows.size() == 4);
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    CHECK(t.rows[i].p_hat <= t.rows[i - 1].p_hat);
    CHECK(t.rows[i].x == doctest::Approx(t.rows[i].h * t.rows[i].h / (s1.q_star * 0.05 * 0.05)));
  }
  for (const auto& r : t.rows) {
    CHECK(r.ci_low <= r.p_hat);
    CHECK(r.p_hat <= r.ci_high);
  }
  // pathwise nesting
  for (const auto& m : s1.tau)
    for (std::size_t c = 1; c < m.size(); ++c)
      if (m[c]) {
        REQUIRE(m[c - 1].has_value());
        CHECK(*m[c - 1] <= *m[c]);
      }

  auto half = e;
  half.cfg.sigma = 0.025;
  const TailTable th = tail_table(simulate_exit_times(half, 7, 1));
  for (std::size_t i = 0; i < t.rows.size(); ++i) CHECK(th.rows[i].p_hat <= t.rows[i].ci_high);
  CHECK(th.rows[1].p_hat < t.rows[1].p_hat);

  const MomentTable mt = moment_table(s1, 2);
  REQUIRE(mt.rows.size() == 8);
  for (std::size_t i = 0; i < mt.rows.size(); i += 2) {
    CHECK(mt.rows[i].k == 1);
    CHECK(mt.rows[i + 1].moment >= mt.rows[i].moment * mt.rows[i].moment * (1 - 1e-12));
    if (i >= 2) CHECK(mt.rows[i].moment >= mt.rows[i - 2].moment);
    CHECK(mt.rows[i].lower_bound == (mt.rows[i].censored_fraction > 0.5));
  }

  auto quiet = e;
  quiet.cfg.sigma = 0.0;
  quiet.ensemble = 3;
  const ExitSamples sq = simulate_exit_times(quiet, 7, 1);
  const TailTable tq = tail_table(sq);
  CHECK(tq.all_censored);
  CHECK_FALSE(tq.regression.has_value());
  for (const auto& r : moment_table(sq, 2).rows) {
    CHECK(r.censored_fraction == 1.0);
    CHECK(r.moment == doctest::Approx(std::pow(sq.horizon, r.k)));
  }
}

TEST_CASE("slow drift") {
  const Grid G = Grid::make(2 * kPi, 32);
  auto e = small_experiment(G, 0.05, 1);
  const double l1 = spectral_basis(e.g, 1).lambda(1);
  const auto constant = slow_drift_run(e, 5, 0);
  e.drift = DriftSpec::ramp(0.5, 0.0);
  const auto ramp0 = slow_drift_run(e, 5, 0);
  CHECK(constant.path.values == ramp0.path.values);
  CHECK(constant.exit_times == ramp0.exit_times);

  e.drift = DriftSpec::ramp(l1 - 1.0, 0.2, l1 - 0.1);
  CHECK_NOTHROW(slow_drift_run(e, 5, 0));
  e.drift = DriftSpec::ramp(l1 - 1.0, 0.2);
  CHECK_THROWS_AS(slow_drift_run(e, 5, 0), Error);
}

TEST_CASE("slower drift to the same endpoint exits no less often") {
  // fixed slow-time window [0, tau]: the real horizon tau/eps grows as eps shrinks
  const Grid G = Grid::make(2 * kPi, 32);
  const Potential g = cos3plus2(G);
  const double l1 = spectral_basis(g, 1).lambda(1);
  const double a_end = l1 - 0.3, span = 1.0, dt = 0.01;
  std::vector<TailRow> rows;
  for (double eps : {0.1, 0.025}) {
    const double T = span / eps;
    ExitExperiment e{g, random_spec(10, 10, 3), DriftSpec::ramp(a_end - span, eps),
                     SimConfig{dt, static_cast<std::int64_t>(std::llround(T / dt)), 0.05, 1, 0}, {0.05}, {0.4, 0}, 200, {}};
    rows.push_back(tail_table(simulate_exit_times(e, 11, 2)).rows.front());
  }
  CHECK(rows[1].p_hat >= rows[0].ci_low);
  CHECK(rows[1].ci_high >= rows[0].p_hat);
}
