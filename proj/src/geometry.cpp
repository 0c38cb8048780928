// SPDX-License-Identifier: Apache-2.0
#include "rdsw/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rdsw/error.hpp"
#include "rdsw/numerics.hpp"

namespace rdsw {

const char* to_string(PhaseSpace space) noexcept {
  switch (space) {
    case PhaseSpace::circle: return "circle";
    case PhaseSpace::interval: return "interval";
    case PhaseSpace::projective: return "projective";
  }
  return "?";
}

PhaseSpace phase_space_from_string(const std::string& name) {
  if (name == "circle") return PhaseSpace::circle;
  if (name == "interval") return PhaseSpace::interval;
  if (name == "projective") return PhaseSpace::projective;
  fail(ErrorKind::invalid_argument, "unknown phase space '" + name + "'");
}

CirclePoint::CirclePoint(double coordinate) : x_(wrap_unit(coordinate)) {
  require(std::isfinite(coordinate), ErrorKind::invalid_argument, "circle coordinate not finite");
}

IntervalPoint::IntervalPoint(double coordinate) : x_(coordinate) {
  require(coordinate >= 0.0 && coordinate <= 1.0, ErrorKind::invalid_argument,
          "interval coordinate outside [0,1]");
}

ProjectivePoint::ProjectivePoint(std::vector<double> v) : v_(std::move(v)) {
  require(v_.size() >= 2 && v_.size() <= kMaxProjectiveDim, ErrorKind::invalid_argument,
          "projective dimension must be 2..8");
  double n2 = 0.0;
  for (double c : v_) n2 += c * c;
  require(n2 > 0.0 && std::isfinite(n2), ErrorKind::invalid_argument,
          "projective representative must be a nonzero finite vector");
  const double inv = 1.0 / std::sqrt(n2);
  for (double& c : v_) c *= inv;
  const auto first = std::find_if(v_.begin(), v_.end(), [](double c) { return c != 0.0; });
  if (*first < 0.0) {
    for (double& c : v_) c = -c;
  }
}

ProjectivePoint ProjectivePoint::basis(std::size_t dim, std::size_t axis) {
  std::vector<double> v(dim, 0.0);
  require(axis < dim, ErrorKind::invalid_argument, "basis axis out of range");
  v[axis] = 1.0;
  return ProjectivePoint(std::move(v));
}

PhaseSpace space_of(const PhasePoint& p) noexcept {
  switch (p.index()) {
    case 0: return PhaseSpace::circle;
    case 1: return PhaseSpace::interval;
    default: return PhaseSpace::projective;
  }
}

double circle_distance(double x, double y) noexcept {
  const double g = std::fabs(x - y);
  return std::min(g, 1.0 - g);
}

double circle_distance(CirclePoint x, CirclePoint y) noexcept {
  return circle_distance(x.coordinate(), y.coordinate());
}

double interval_distance(IntervalPoint x, IntervalPoint y) noexcept {
  return std::fabs(x.coordinate() - y.coordinate());
}

double wedge_norm(std::span<const double> x, std::span<const double> y) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double m = x[i] * y[j] - x[j] * y[i];
      s += m * m;
    }
  }
  return std::sqrt(s);
}

double projective_distance(const ProjectivePoint& x, const ProjectivePoint& y) noexcept {
  return std::min(1.0, wedge_norm(x.representative(), y.representative()));
}

double snowflake(double dist, double alpha) {
  require(alpha > 0.0 && alpha <= 1.0, ErrorKind::invalid_argument,
          "snowflake exponent must lie in (0,1]");
  require(dist >= 0.0, ErrorKind::invalid_argument, "snowflake of a negative distance");
  if (alpha == 1.0) return dist;
  return std::pow(dist, alpha);
}

double distance(const PhasePoint& x, const PhasePoint& y) {
  require(x.index() == y.index(), ErrorKind::phase_space_mismatch,
          "distance between points of different phase spaces");
  switch (x.index()) {
    case 0: return circle_distance(std::get<CirclePoint>(x), std::get<CirclePoint>(y));
    case 1: return interval_distance(std::get<IntervalPoint>(x), std::get<IntervalPoint>(y));
    default: {
      const auto& a = std::get<ProjectivePoint>(x);
      const auto& b = std::get<ProjectivePoint>(y);
      require(a.dim() == b.dim(), ErrorKind::phase_space_mismatch, "projective dimension mismatch");
      return projective_distance(a, b);
    }
  }
}

double distance(const PhasePoint& x, const PhasePoint& y, const MetricKind& metric) {
  require(space_of(x) == metric.base, ErrorKind::phase_space_mismatch,
          "metric base does not match the points");
  return snowflake(distance(x, y), metric.alpha);
}

double diameter(PhaseSpace space) noexcept {
  switch (space) {
    case PhaseSpace::circle: return 0.5;
    case PhaseSpace::interval: return 1.0;
    case PhaseSpace::projective: return 1.0;
  }
  return 1.0;
}

std::string describe(const PhasePoint& p) {
  std::ostringstream os;
  os.precision(17);
  switch (p.index()) {
    case 0: os << std::get<CirclePoint>(p).coordinate(); break;
    case 1: os << std::get<IntervalPoint>(p).coordinate(); break;
    default: {
      const auto& v = std::get<ProjectivePoint>(p);
      os << '[';
      for (std::size_t i = 0; i < v.dim(); ++i) os << (i ? "," : "") << v[i];
      os << ']';
    }
  }
  return os.str();
}

}  // namespace rdsw
