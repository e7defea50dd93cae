#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "chafee/error.hpp"
#include "chafee/linalg.hpp"

using namespace chafee;

TEST_CASE("symmetric tridiagonal solve matches a dense solve") {
  const std::size_t n = 50;
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> diag(n), off(n - 1), b(n);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    diag[i] = 4.0 + u(gen);
    A(i, i) = diag[i];
    b[i] = u(gen);
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    off[i] = u(gen);
    A(i, i + 1) = A(i + 1, i) = off[i];
  }
  linalg::TridiagonalFactor f(diag, off);
  auto x = b;
  f.solve_in_place(x);
  const Eigen::VectorXd ref = A.lu().solve(Eigen::Map<Eigen::VectorXd>(b.data(), n));
  for (std::size_t i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(ref(i)).epsilon(1e-12));
}

TEST_CASE("zero pivot is reported as a singular step") {
  const std::vector<double> diag{0.0, 1.0}, off{1.0};
  CHECK_THROWS_AS(linalg::TridiagonalFactor(diag, off), Error);
}

TEST_CASE("pivoted LU handles an indefinite system") {
  // [[0,1,0],[1,0,1],[0,1,0.5]] needs a row swap at the first step.
  const std::vector<double> sub{1.0, 1.0}, diag{0.0, 0.0, 0.5}, sup{1.0, 1.0};
  linalg::PivotedTridiagonalLU lu(sub, diag, sup);
  std::vector<double> x{1.0, 2.0, 3.0};
  lu.solve_in_place(x);
  Eigen::Matrix3d A;
  A << 0, 1, 0, 1, 0, 1, 0, 1, 0.5;
  const Eigen::Vector3d ref = A.lu().solve(Eigen::Vector3d(1, 2, 3));
  for (int i = 0; i < 3; ++i) CHECK(x[i] == doctest::Approx(ref(i)).epsilon(1e-13));
}

TEST_CASE("orthonormalize_rows returns the R diagonal of a QR") {
  const std::size_t n = 20, k = 4;
  std::mt19937_64 gen(11);
  std::normal_distribution<double> d;
  std::vector<double> rows(k * n);
  for (auto& x : rows) x = d(gen);
  Eigen::MatrixXd M(n, k);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < n; ++i) M(i, j) = rows[j * n + i];
  const double w = 0.25;
  const auto r = linalg::orthonormalize_rows(rows, k, n, w);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(M * std::sqrt(w));
  const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (std::size_t j = 0; j < k; ++j) CHECK(r[j] == doctest::Approx(std::fabs(R(j, j))).epsilon(1e-12));
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += w * rows[a * n + i] * rows[b * n + i];
      CHECK(s == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-12));
    }
}

TEST_CASE("collapsed bundle is degenerate") {
  std::vector<double> rows{1.0, 2.0, 2.0, 4.0};
  CHECK_THROWS_AS(linalg::orthonormalize_rows(rows, 2, 2, 1.0), Error);
}
