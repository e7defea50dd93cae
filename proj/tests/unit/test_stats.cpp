#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "chafee/stats.hpp"

using namespace chafee::stats;

TEST_CASE("co-moment equals the time-average covariance") {
  const std::vector<double> x{1, 4, 2, 8, 5}, y{2, 1, 7, 3, 3};
  CoMoment c;
  double sx = 0, sy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    c.add(x[i], y[i]);
    sx += x[i];
    sy += y[i];
    sxy += x[i] * y[i];
  }
  const double n = x.size();
  CHECK(c.cov() == doctest::Approx(sxy / n - (sx / n) * (sy / n)).epsilon(1e-14));
  CoMoment k;
  for (int i = 0; i < 100; ++i) k.add(3.25, 3.25);
  CHECK(k.cov() == 0.0);
}

TEST_CASE("mean and standard error") {
  const std::vector<double> v{1, 2, 3, 4};
  const auto m = mean_stderr(v);
  CHECK(m.mean == 2.5);
  CHECK(m.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(m.sem == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
}

TEST_CASE("least squares recovers an exact line") {
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  const auto f = least_squares(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
}

TEST_CASE("spearman") {
  CHECK(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{10, 20, 25, 100}) == doctest::Approx(1.0));
  CHECK(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{4, 3, 2, 1}) == doctest::Approx(-1.0));
  // ties get average ranks: ranks y = (1.5, 1.5, 3, 4)
  const double r = spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{5, 5, 6, 7});
  const double rx[] = {1, 2, 3, 4}, ry[] = {1.5, 1.5, 3, 4};
  double mx = 2.5, my = 2.5, sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  CHECK(r == doctest::Approx(sxy / std::sqrt(sxx * syy)));
}

TEST_CASE("wilson interval") {
  // closed form for k = 5, n = 20, z = 1.96
  const double z = 1.959963984540054, n = 20, p = 0.25;
  const double centre = (p + z * z / (2 * n)) / (1 + z * z / n);
  const double half = z / (1 + z * z / n) * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n));
  const auto [lo, hi] = wilson_interval(5, 20);
  CHECK(lo == doctest::Approx(centre - half));
  CHECK(hi == doctest::Approx(centre + half));
  const auto [l0, h0] = wilson_interval(0, 10);
  CHECK(l0 == doctest::Approx(0.0));
  CHECK(h0 > 0.0);
}

TEST_CASE("jackknife of the mean equals the usual standard error") {
  const std::vector<double> v{2, 9, 4, 4, 7, 1};
  CHECK(jackknife_stderr_of_mean(v) == doctest::Approx(mean_stderr(v).sem).epsilon(1e-12));
}
