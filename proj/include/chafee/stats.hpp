#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace chafee::stats {

/// Running co-moment of a pair of series (Welford). cov() is the population
/// covariance mean(xy) - mean(x) mean(y), the time-average form used by the
/// estimators.
class CoMoment {
public:
  void add(double x, double y) noexcept {
    ++n_;
    const double dx = x - mean_x_;
    mean_x_ += dx / static_cast<double>(n_);
    mean_y_ += (y - mean_y_) / static_cast<double>(n_);
    c_ += dx * (y - mean_y_);
  }
  std::size_t count() const noexcept { return n_; }
  double mean_x() const noexcept { return mean_x_; }
  double mean_y() const noexcept { return mean_y_; }
  double cov() const noexcept { return n_ == 0 ? 0.0 : c_ / static_cast<double>(n_); }

private:
  std::size_t n_ = 0;
  double mean_x_ = 0.0, mean_y_ = 0.0, c_ = 0.0;
};

struct MeanStderr {
  double mean = 0.0;
  double sem = 0.0;
  double stddev = 0.0;
  std::size_t n = 0;
};

/// Sample mean, sample standard deviation and standard error of the mean.
MeanStderr mean_stderr(std::span<const double> xs);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

/// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> x, std::span<const double> y);

/// Wilson score interval for k successes out of n at normal quantile z.
std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054);

/// Leave-one-out jackknife standard error of the mean of f(x_i).
double jackknife_stderr_of_mean(std::span<const double> xs);

}  // namespace chafee::stats
