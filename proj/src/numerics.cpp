// SPDX-License-Identifier: Apache-2.0
#include "rdsw/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rdsw/error.hpp"

namespace rdsw {

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorKind::invalid_argument, "fit_line: size mismatch");
  require(x.size() >= 2, ErrorKind::insufficient_data, "fit_line: need at least two points");
  const auto n = static_cast<double>(x.size());
  // Values shifted by the first point, so a constant series yields slope 0 exactly.
  const double x0 = x[0], y0 = y[0];
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] - x0;
    my += y[i] - y0;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = (x[i] - x0) - mx;
    const double dy = (y[i] - y0) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  require(sxx > 0.0, ErrorKind::insufficient_data, "fit_line: abscissae have no spread");
  LineFit fit;
  fit.points = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = (my + y0) - fit.slope * (mx + x0);
  if (syy <= 0.0) {
    fit.r2 = 1.0;
  } else {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - (fit.slope * x[i] + fit.intercept);
      ss_res += r * r;
    }
    fit.r2 = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  }
  return fit;
}

double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double ks_distance_to_normal(std::vector<double> values) {
  require(!values.empty(), ErrorKind::insufficient_data, "ks distance of empty sample");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = normal_cdf(values[i]);
    d = std::max(d, std::max(static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n));
  }
  return d;
}

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  require(trials > 0, ErrorKind::insufficient_data, "wilson interval with zero trials");
  const auto n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double two_sided_z(double level) {
  if (level == 0.95) return 1.959963984540054;
  if (level == 0.99) return 2.5758293035489004;
  if (level == 0.999) return 3.2905267314918945;
  require(level > 0.0 && level < 1.0, ErrorKind::invalid_argument, "confidence level outside (0,1)");
  const double target = 0.5 + level / 2.0;
  double lo = 0.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<std::size_t> geometric_checkpoints(std::size_t first, std::size_t last,
                                               double ratio) {
  require(first >= 1 && ratio > 1.0, ErrorKind::invalid_argument, "bad checkpoint ladder");
  std::vector<std::size_t> out;
  double v = static_cast<double>(first);
  while (static_cast<std::size_t>(v) < last) {
    const auto c = static_cast<std::size_t>(v);
    if (out.empty() || c > out.back()) out.push_back(c);
    v *= ratio;
  }
  if (out.empty() || out.back() != last) out.push_back(last);
  return out;
}

double median(std::vector<double> values) {
  require(!values.empty(), ErrorKind::insufficient_data, "median of empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

}  // namespace rdsw
