#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "chafee/simd.hpp"

using namespace chafee;

namespace {

std::vector<double> randn(std::size_t n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

double rel(double a, double b) { return std::fabs(a - b) / std::max(1.0, std::fabs(b)); }

}  // namespace

TEST_CASE("scalar table is the reference") {
  const auto& s = simd::scalar_kernels();
  CHECK(s.isa == simd::Isa::Scalar);
  const std::vector<double> x{1, 2, 3}, y{4, 5, 6};
  CHECK(s.dot(x.data(), y.data(), 3) == 32.0);
  std::vector<double> out(3);
  s.cubic_rhs(x.data(), y.data(), 0.5, 2.0, out.data(), 3);
  CHECK(out[0] == 1.0 - 0.5 + 8.0);
  CHECK(out[2] == 3.0 - 13.5 + 12.0);
  s.variation_rhs(y.data(), x.data(), 0.1, out.data(), 3);
  CHECK(out[1] == doctest::Approx(5.0 - 3.0 * 4.0 * 5.0 * 0.1));
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  const auto* v = simd::avx2_kernels();
  if (!v) {
    MESSAGE("AVX2 not available; equivalence not exercised");
    return;
  }
  const auto& s = simd::scalar_kernels();
  // odd lengths exercise the remainder loops
  for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 13u, 64u, 200u, 201u}) {
    CAPTURE(n);
    const auto x = randn(n, 1 + n), y = randn(n, 100 + n);
    CHECK(rel(v->dot(x.data(), y.data(), n), s.dot(x.data(), y.data(), n)) < 1e-13);

    auto ya = y, yb = y;
    v->axpy(0.37, x.data(), ya.data(), n);
    s.axpy(0.37, x.data(), yb.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(ya[i] == doctest::Approx(yb[i]).epsilon(1e-15));

    std::vector<double> oa(n), ob(n);
    v->cubic_rhs(x.data(), y.data(), 1e-3, 0.05, oa.data(), n);
    s.cubic_rhs(x.data(), y.data(), 1e-3, 0.05, ob.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(rel(oa[i], ob[i]) < 1e-15);

    v->variation_rhs(y.data(), x.data(), 1e-2, oa.data(), n);
    s.variation_rhs(y.data(), x.data(), 1e-2, ob.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(rel(oa[i], ob[i]) < 1e-15);

    for (std::size_t rows : {1u, 5u, 10u}) {
      const auto R = randn(rows * n, 7 * n + rows), c = randn(rows, 3 + rows);
      v->combine_rows(R.data(), rows, n, c.data(), oa.data());
      s.combine_rows(R.data(), rows, n, c.data(), ob.data());
      for (std::size_t i = 0; i < n; ++i) CHECK(rel(oa[i], ob[i]) < 1e-13);
      std::vector<double> pa(rows), pb(rows);
      v->project_rows(R.data(), rows, n, x.data(), pa.data());
      s.project_rows(R.data(), rows, n, x.data(), pb.data());
      for (std::size_t j = 0; j < rows; ++j) CHECK(rel(pa[j], pb[j]) < 1e-13);
    }

    CHECK(v->all_bounded(x.data(), n, 100.0) == s.all_bounded(x.data(), n, 100.0));
    auto z = x;
    z[n - 1] = NAN;
    CHECK_FALSE(v->all_bounded(z.data(), n, 100.0));
    CHECK_FALSE(s.all_bounded(z.data(), n, 100.0));
    z[n - 1] = -1e7;
    CHECK_FALSE(v->all_bounded(z.data(), n, 1e6));
    CHECK_FALSE(s.all_bounded(z.data(), n, 1e6));
  }
}

TEST_CASE("active table honours the environment override") {
  const auto& a = simd::active();
  if (const char* e = std::getenv("CHAFEE_ISA"); e && std::string(e) == "scalar") CHECK(a.isa == simd::Isa::Scalar);
  else if (simd::avx2_kernels()) CHECK(a.isa == simd::Isa::Avx2);
  else CHECK(a.isa == simd::Isa::Scalar);
}
