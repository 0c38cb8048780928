// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace rdsw {

enum class PhaseSpace { circle, interval, projective };

const char* to_string(PhaseSpace space) noexcept;
PhaseSpace phase_space_from_string(const std::string& name);

/// Point of the circle [0, 1); the coordinate is always reduced mod 1.
class CirclePoint {
 public:
  CirclePoint() = default;
  explicit CirclePoint(double coordinate);
  double coordinate() const noexcept { return x_; }
  friend bool operator==(CirclePoint, CirclePoint) = default;

 private:
  double x_ = 0.0;
};

/// Point of [0, 1].
class IntervalPoint {
 public:
  IntervalPoint() = default;
  explicit IntervalPoint(double coordinate);
  double coordinate() const noexcept { return x_; }
  friend bool operator==(IntervalPoint, IntervalPoint) = default;

 private:
  double x_ = 0.0;
};

inline constexpr std::size_t kMaxProjectiveDim = 8;

/// Direction in R^d, 2 <= d <= 8, stored as a unit vector whose first nonzero
/// component is positive, so v and -v produce identical representatives.
class ProjectivePoint {
 public:
  ProjectivePoint() = default;
  explicit ProjectivePoint(std::vector<double> v);
  static ProjectivePoint basis(std::size_t dim, std::size_t axis);

  std::size_t dim() const noexcept { return v_.size(); }
  std::span<const double> representative() const noexcept { return v_; }
  double operator[](std::size_t i) const noexcept { return v_[i]; }
  friend bool operator==(const ProjectivePoint&, const ProjectivePoint&) = default;

 private:
  std::vector<double> v_;
};

using PhasePoint = std::variant<CirclePoint, IntervalPoint, ProjectivePoint>;

PhaseSpace space_of(const PhasePoint& p) noexcept;

/// Snowflake exponent on top of a base metric.
struct MetricKind {
  PhaseSpace base = PhaseSpace::circle;
  double alpha = 1.0;
};

/// min(|x - y|, 1 - |x - y|).
double circle_distance(CirclePoint x, CirclePoint y) noexcept;
double circle_distance(double x, double y) noexcept;
double interval_distance(IntervalPoint x, IntervalPoint y) noexcept;
/// Norm of the wedge product of the two unit representatives.
double projective_distance(const ProjectivePoint& x, const ProjectivePoint& y) noexcept;
double wedge_norm(std::span<const double> x, std::span<const double> y) noexcept;
/// dist^alpha; alpha must lie in (0, 1].
double snowflake(double dist, double alpha);

/// Base metric between two points of the same phase space.
double distance(const PhasePoint& x, const PhasePoint& y);
double distance(const PhasePoint& x, const PhasePoint& y, const MetricKind& metric);
/// Diameter of the space under its base metric.
double diameter(PhaseSpace space) noexcept;

std::string describe(const PhasePoint& p);

}  // namespace rdsw
