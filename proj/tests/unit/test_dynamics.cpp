#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "chafee/dynamics.hpp"
#include "chafee/error.hpp"
#include "chafee/ews.hpp"
#include "chafee/stats.hpp"

using namespace chafee;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> scaled(std::span<const double> v, double a) {
  std::vector<double> out(v.begin(), v.end());
  for (auto& x : out) x *= a;
  return out;
}

}  // namespace

TEST_CASE("drift") {
  const auto r = DriftSpec::ramp(0.5, 0.1, 0.8);
  CHECK(r.alpha_at(0.0) == 0.5);
  CHECK(r.alpha_at(2.0) == doctest::Approx(0.7));
  CHECK(r.alpha_at(100.0) == 0.8);
  CHECK(DriftSpec::constant(1.2).alpha_at(1e9) == 1.2);
}

TEST_CASE("single step fixed point and mode oracle") {
  const Grid G = Grid::make(kPi, 50);
  const Potential g0 = Potential::zero(G);
  SemiImplicitStepper s(g0, 0.01);
  s.set_alpha(0.3);
  std::vector<double> u(G.N, 0.0), noise(G.N, 0.0);
  s.step(u, noise, 0.0, Model::Nonlinear);
  for (double x : u) CHECK(x == 0.0);

  const double a = 1e-6, dt = 0.01, alpha = 0.3;
  const double mu1 = 2.0 / (G.dx * G.dx) * (1.0 - std::cos(kPi / 51.0));
  const auto e1 = sine_mode(G, 1);
  auto v = scaled(e1, a);
  s.step(v, noise, 0.0, Model::Nonlinear);
  const double ratio = inner_dx(v, e1, G) / a;
  CHECK(ratio == doctest::Approx(1.0 / (1.0 + (mu1 - alpha) * dt)).epsilon(1e-6));

  // first variation at u = 0 has the same growth factor
  const SpectralBasis b = spectral_basis(g0, 1);
  std::vector<double> w(b.vector(1).begin(), b.vector(1).end());
  const std::vector<double> zero(G.N, 0.0);
  s.step_variation(w, zero);
  CHECK(inner_dx(w, b.vector(1), G) == doctest::Approx(1.0 / (1.0 + (b.lambda(1) - alpha) * dt)).epsilon(1e-12));
  std::vector<double> z(G.N, 0.0);
  s.step_variation(z, e1);
  for (double x : z) CHECK(x == 0.0);
}

TEST_CASE("free-function steps agree with the stepper") {
  const Grid G = Grid::make(2 * kPi, 40);
  const Potential g = Potential::cos3plus1(G);
  const auto A = build_schrodinger(G, g, 0.9);
  FieldState u{std::vector<double>(G.N), 0.0};
  for (std::size_t n = 0; n < G.N; ++n) u.values[n] = 0.3 * std::sin(0.7 * n);
  std::vector<double> noise(G.N);
  for (std::size_t n = 0; n < G.N; ++n) noise[n] = std::cos(1.3 * n);
  const FieldState next = step_semi_implicit(u, A, 0.05, noise, 0.2);
  SemiImplicitStepper s(g, 0.05);
  s.set_alpha(0.9);
  auto w = u.values;
  s.step(w, noise, 0.2, Model::Nonlinear);
  CHECK(next.t == doctest::Approx(0.05));
  for (std::size_t n = 0; n < G.N; ++n) CHECK(next.values[n] == doctest::Approx(w[n]).epsilon(1e-12));

  // residual of (I - dt A) u_next = u - u^3 dt + sigma inc
  const auto Au = A.apply(next.values);
  for (std::size_t n = 0; n < G.N; ++n) {
    const double lhs = next.values[n] - 0.05 * Au[n];
    const double rhs = u.values[n] - std::pow(u.values[n], 3) * 0.05 + 0.2 * noise[n];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("deterministic decay and energy") {
  const Grid G = Grid::make(2 * kPi, 100);
  const Potential g = Potential::cos3plus1(G);
  const SpectralBasis b = spectral_basis(g, 1);
  const double alpha = b.lambda(1) - 0.2;
  SimConfig cfg{0.01, 10000, 0.0, 10, 0};
  RngStream rng(1, 0);
  const FieldState u0{scaled(b.vector(1), 0.1), 0.0};
  const auto rec = integrate_sde(u0, g, DriftSpec::constant(alpha), CovarianceSpec::identity(10, 10), cfg, rng);
  CHECK(rec.size() == 10000 / 10 + 1);
  const double n0 = norm_dx(rec.snapshot(0), G);
  double prev = n0, prevF = lyapunov_functional(rec.snapshot(0), g);
  for (std::size_t i = 1; i < rec.size(); ++i) {
    const double n = norm_dx(rec.snapshot(i), G);
    const double F = lyapunov_functional(rec.snapshot(i), g);
    CHECK(n <= prev);
    CHECK(F <= prevF);
    CHECK(rec.times[i] > rec.times[i - 1]);
    prev = n;
    prevF = F;
  }
  CHECK(prev < 1e-4 * n0);
}

TEST_CASE("contraction for non-positive alpha") {
  const Grid G = Grid::make(2 * kPi, 64);
  const Potential g = Potential::linear(G);
  SemiImplicitStepper s(g, 0.1);
  s.set_alpha(-0.2);
  std::vector<double> u(G.N), noise(G.N, 0.0);
  for (std::size_t n = 0; n < G.N; ++n) u[n] = 2.0 * std::sin(0.3 * n) + 0.5;
  for (int j = 0; j < 50; ++j) {
    const double before = norm_dx(u, G);
    s.step(u, noise, 0.0, Model::Nonlinear);
    CHECK(norm_dx(u, G) <= before);
  }
}

TEST_CASE("linear semigroup decay of the ground mode") {
  const Grid G = Grid::make(2 * kPi, 100);
  const Potential g = Potential::cos3plus1(G);
  const SpectralBasis b = spectral_basis(g, 1);
  const double alpha = 0.5;
  SimConfig cfg{1e-3, 1000, 0.0, 1000, 0};
  RngStream rng(1, 0);
  const auto rec = integrate_linear({scaled(b.vector(1), 1.0), 0.0}, g, alpha, CovarianceSpec::identity(10, 10), cfg, rng);
  const double c = inner_dx(rec.snapshot(rec.size() - 1), b.vector(1), G);
  CHECK(c == doctest::Approx(std::exp((alpha - b.lambda(1)) * 1.0)).epsilon(1e-3));

  const auto zero = integrate_linear({std::vector<double>(G.N, 0.0), 0.0}, g, alpha,
                                     CovarianceSpec::identity(10, 10), cfg, rng);
  for (double x : zero.values) CHECK(x == 0.0);
}

TEST_CASE("linear stationary variance matches the analytic entry") {
  const Grid G = Grid::make(2 * kPi, 32);
  const Potential g = Potential::cos3plus1(G);
  const SpectralBasis b = spectral_basis(g, 4);
  const auto spec = random_spec(10, 10, 3);
  const double alpha = b.lambda(1) - 0.5, sigma = 0.1;
  SimConfig cfg{0.01, 300000, sigma, 1, 2000};
  RngStream rng(9, 0);
  const auto rec = integrate_linear({std::vector<double>(G.N, 0.0), 0.0}, g, alpha, spec, cfg, rng);
  const auto est = empirical_mode_covariance(rec, b, 1, 1);
  const double analytic = vinf_entry(1, 1, b, spec, alpha, sigma);
  CHECK(std::fabs(est.value - analytic) <= 0.1 * analytic);
}

TEST_CASE("reproducibility and snapshot count") {
  const Grid G = Grid::make(2 * kPi, 30);
  const Potential g = Potential::cos3plus1(G);
  const auto spec = random_spec(10, 10, 1);
  SimConfig cfg{0.01, 1003, 0.05, 7, 0};
  RngStream r1(5, 2), r2(5, 2);
  const FieldState u0{std::vector<double>(G.N, 0.0), 0.0};
  const auto a = integrate_sde(u0, g, DriftSpec::constant(1.0), spec, cfg, r1);
  const auto b = integrate_sde(u0, g, DriftSpec::constant(1.0), spec, cfg, r2);
  CHECK(a.values == b.values);
  CHECK(a.times == b.times);
  CHECK(a.size() == 1003 / 7 + 1);

  // a ramp with eps = 0 is bitwise the constant pipeline
  RngStream r3(5, 2);
  const auto c = integrate_sde(u0, g, DriftSpec::ramp(1.0, 0.0), spec, cfg, r3);
  CHECK(c.values == a.values);
}

TEST_CASE("blow-up is reported with its step") {
  const Grid G = Grid::make(1.0, 8);
  const Potential g = Potential::zero(G);
  SimConfig cfg{1.0, 10, 0.0, 1, 0};
  RngStream rng(1, 0);
  try {
    integrate_sde({std::vector<double>(G.N, 10.0), 0.0}, g, DriftSpec::constant(0.0), CovarianceSpec::identity(1, 1),
                  cfg, rng);
    FAIL("expected blow-up");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BlowUp);
    REQUIRE(e.step().has_value());
    CHECK(*e.step() >= 1);
    CHECK(*e.step() <= 3);
  }
}

TEST_CASE("first variation matches a finite difference of the scheme") {
  const Grid G = Grid::make(2 * kPi, 64);
  const Potential g = Potential::cos3plus1(G);
  const auto spec = random_spec(10, 10, 4);
  const NoiseField noise(spec, G);
  const double dt = 1e-3, alpha = 1.3, sigma = 0.05, delta = 1e-6;
  SemiImplicitStepper s(g, dt);
  s.set_alpha(alpha);
  std::vector<double> u(G.N), v(G.N);
  for (std::size_t n = 0; n < G.N; ++n) {
    u[n] = 0.4 * std::sin(G.x(n + 1) / 2.0);
    v[n] = std::sin(G.x(n + 1));
  }
  auto up = u;
  for (std::size_t n = 0; n < G.N; ++n) up[n] += delta * v[n];
  RngStream rng(3, 0);
  std::vector<double> inc(G.N);
  for (int j = 0; j < 1000; ++j) {
    noise.sample(dt, rng, inc);
    s.step_variation(v, u);
    s.step(u, inc, sigma, Model::Nonlinear);
    s.step(up, inc, sigma, Model::Nonlinear);
  }
  std::vector<double> fd(G.N);
  for (std::size_t n = 0; n < G.N; ++n) fd[n] = (up[n] - u[n]) / delta;
  std::vector<double> diff(G.N);
  for (std::size_t n = 0; n < G.N; ++n) diff[n] = fd[n] - v[n];
  CHECK(norm_dx(diff, G) <= 1e-3 * norm_dx(v, G));
}

TEST_CASE("strong order ratio under dt halving") {
  const Grid G = Grid::make(2 * kPi, 32);
  const Potential g = Potential::cos3plus1(G);
  const auto spec = random_spec(10, 10, 8);
  const NoiseField noise(spec, G);
  const double T = 1.0, sigma = 0.2, alpha = 1.25;
  const int fine_steps = 1600;
  RngStream rng(11, 0);
  std::vector<std::vector<double>> W(fine_steps, std::vector<double>(spec.M));
  for (auto& w : W) rng.normals(w);

  auto endpoint = [&](int factor) {
    const int steps = fine_steps / factor;
    const double dt = T / steps;
    SemiImplicitStepper s(g, dt);
    s.set_alpha(alpha);
    std::vector<double> u(G.N), inc(G.N), normals(spec.M);
    for (std::size_t n = 0; n < G.N; ++n) u[n] = 0.5 * std::sin(G.x(n + 1) / 2.0);
    for (int j = 0; j < steps; ++j) {
      std::fill(normals.begin(), normals.end(), 0.0);
      for (int f = 0; f < factor; ++f)
        for (std::size_t m = 0; m < spec.M; ++m) normals[m] += W[j * factor + f][m];
      for (auto& x : normals) x /= std::sqrt(double(factor));
      noise.synthesize(dt, normals, inc);
      s.step(u, inc, sigma, Model::Nonlinear);
    }
    return u;
  };
  const auto u8 = endpoint(8), u4 = endpoint(4), u2 = endpoint(2);
  auto dist = [&](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d(G.N);
    for (std::size_t n = 0; n < G.N; ++n) d[n] = a[n] - b[n];
    return norm_dx(d, G);
  };
  const double ratio = dist(u8, u4) / dist(u4, u2);
  CHECK(ratio >= 1.5);
  CHECK(ratio <= 2.5);
}

TEST_CASE("steady states") {
  const Grid G = Grid::make(kPi, 100);
  const Potential g = Potential::zero(G);
  const SpectralBasis b = spectral_basis(g, 2);
  const auto below = find_steady_states(g, b.lambda(1) - 0.1);
  REQUIRE(below.states.size() == 1);
  CHECK(norm_dx(below.states[0], G) <= 1e-10);

  const auto above = find_steady_states(g, 1.5);
  REQUIRE(above.states.size() == 3);
  int nonzero = 0;
  for (const auto& s : above.states) {
    const auto A = build_schrodinger(G, g, 1.5);
    auto F = A.apply(s);
    for (std::size_t n = 0; n < G.N; ++n) F[n] -= s[n] * s[n] * s[n];
    CHECK(norm_dx(F, G) <= 1e-10);
    if (norm_dx(s, G) > 1e-3) ++nonzero;
  }
  CHECK(nonzero == 2);
  CHECK_THROWS_AS(find_steady_states(g, b.lambda(2) + 0.1), Error);

  std::vector<double> lx, ly;
  for (double alpha : {1.05, 1.1, 1.15, 1.2, 1.25, 1.3, 1.35, 1.4}) {
    const auto ss = find_steady_states(g, alpha);
    double amp = 0.0;
    for (const auto& s : ss.states) amp = std::max(amp, norm_dx(s, G));
    lx.push_back(std::log(alpha - b.lambda(1)));
    ly.push_back(std::log(amp));
  }
  CHECK(stats::least_squares(lx, ly).slope == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("synchronization and order preservation") {
  const Grid G = Grid::make(2 * kPi, 64);
  const Potential g = Potential::cos3plus1(G);
  const SpectralBasis b = spectral_basis(g, 1);
  const auto spec = random_spec(10, 10, 2);
  SimConfig cfg{0.01, 10000, 0.05, 10, 0};
  const FieldState a{std::vector<double>(G.N, 0.0), 0.0};
  const FieldState c{scaled(b.vector(1), 0.1), 0.0};
  const auto drift = DriftSpec::constant(b.lambda(1) - 0.5);
  const auto res = synchronization_gap(a, c, g, drift, spec, cfg, RngStream(4, 0));
  CHECK(res.gap.front() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(res.gap.back() < 1e-6);
  CHECK(res.max_order_excess <= 1e-10);
  const auto swapped = synchronization_gap(c, a, g, drift, spec, cfg, RngStream(4, 0));
  CHECK(swapped.gap == res.gap);
  const auto same = synchronization_gap(a, a, g, drift, spec, cfg, RngStream(4, 0));
  for (double x : same.gap) CHECK(x == 0.0);
}

TEST_CASE("paper regimes: metastability above threshold, quiescence below") {
  const Grid G = Grid::make(2 * kPi, 200);
  const auto spec = random_spec(10, 10, 1);
  const NoiseField noise(spec, G);
  SimConfig cfg{0.1, 100000, 0.05, 10, 10000};

  {
    const Potential g = Potential::cos3plus1(G);
    RngStream rng(1, 0);
    const FieldState u0{std::vector<double>(G.N, 0.0), 0.0};
    const auto rec = integrate_sde(u0, g, DriftSpec::constant(1.25), spec, cfg, rng);
    std::size_t post = 0, far = 0;
    bool left = false;
    for (std::size_t i = 0; i < rec.size(); ++i) {
      left = left || norm_dx(rec.snapshot(i), G) >= 0.05;
      if (rec.steps[i] < cfg.burn_in) continue;
      ++post;
      if (norm_dx(rec.snapshot(i), G) > 0.2) ++far;
    }
    CHECK(left);
    CHECK(double(far) / double(post) > 0.5);
  }
  {
    // a separate noise realization per alpha, as in the published runs
    const Potential g = Potential::linear(G);
    const auto spec2 = random_spec(10, 10, 2);
    RngStream rng(1, 0);
    const FieldState u0 = initial_kick(NoiseField(spec2, G), cfg.dt, cfg.sigma, rng);
    const auto rec = integrate_sde(u0, g, DriftSpec::constant(0.65), spec2, cfg, rng);
    double sum = 0.0;
    std::size_t post = 0;
    for (std::size_t i = 0; i < rec.size(); ++i) {
      if (rec.steps[i] < cfg.burn_in) continue;
      sum += norm_dx(rec.snapshot(i), G);
      ++post;
    }
    CHECK(sum / post < 0.1);
  }
}
