// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace rdsw {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Welford mean/variance accumulator; merge() is exact in the sense that the
/// merged state equals the state from streaming both inputs (up to rounding).
class RunningStats {
 public:
  void add(double v) noexcept {
    ++n_;
    const double d = v - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (v - mean_);
  }
  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased sample variance (0 when fewer than two samples).
  double variance() const noexcept {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }
  double stderr_of_mean() const noexcept {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = slope * x + intercept. r2 is clamped to [0, 1]
/// and reported as 1 when the data have no spread (a constant is fitted
/// exactly).
LineFit fit_line(std::span<const double> x, std::span<const double> y);

double normal_cdf(double z) noexcept;

/// Two-sided Kolmogorov-Smirnov distance between the empirical distribution
/// of `values` and the standard normal.
double ks_distance_to_normal(std::vector<double> values);

struct Interval {
  double low = 0.0;
  double high = 0.0;
  bool contains(double v) const noexcept { return low <= v && v <= high; }
};

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z);

/// z such that P(|N(0,1)| <= z) = level; supports 0.95 / 0.99 / 0.999 exactly
/// and falls back to a bisection on normal_cdf otherwise.
double two_sided_z(double level);

/// Geometric checkpoint ladder first, first*ratio, ... capped by last (which is
/// always included).
std::vector<std::size_t> geometric_checkpoints(std::size_t first, std::size_t last,
                                               double ratio);

double median(std::vector<double> values);

/// sin(u)/u, accurate near 0.
inline double sinc(double u) noexcept {
  if (std::fabs(u) < 1e-4) {
    const double u2 = u * u;
    return 1.0 - u2 / 6.0 + u2 * u2 / 120.0;
  }
  return std::sin(u) / u;
}

/// Reduce into [0, 1).
inline double wrap_unit(double x) noexcept {
  double r = x - std::floor(x);
  if (r >= 1.0) r = 0.0;  // x slightly below an integer rounds up
  return r;
}

}  // namespace rdsw
