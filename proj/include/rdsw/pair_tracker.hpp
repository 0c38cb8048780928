// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rdsw/geometry.hpp"
#include "rdsw/linalg.hpp"
#include "rdsw/maps.hpp"
#include "rdsw/numerics.hpp"
#include "rdsw/systems.hpp"

namespace rdsw {

/// Offsets below this magnitude are frozen and flagged as censored.
inline constexpr double kCensorFloor = 1e-300;

/// Numerical view of a system used by the paired-orbit trackers.
///
/// Circle and interval systems are used as they are. Projective systems with
/// d = 2 are rewritten in the circle chart x = angle / pi, where the projective
/// distance is sin(pi * circle distance). Projective systems with d >= 3 keep
/// their matrices.
class SystemView {
 public:
  enum class Mode { scalar, chart, projective };

  explicit SystemView(const SystemSpec& sys);

  Mode mode() const noexcept { return mode_; }
  /// Circle or interval for scalar/chart views.
  PhaseSpace scalar_space() const noexcept { return scalar_space_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return probs_.size(); }
  const std::vector<double>& probs() const noexcept { return probs_; }
  const MapSpec& scalar_map(int i) const noexcept { return maps_[static_cast<std::size_t>(i)]; }
  const Matrix& matrix(int i) const noexcept { return matrices_[static_cast<std::size_t>(i)]; }

  /// Scalar coordinate of a point (chart coordinate for d = 2 projective).
  double to_scalar(const PhasePoint& p) const;
  /// Distance in the original metric between two scalar coordinates.
  double scalar_distance(double x, double y) const noexcept;
  /// Original-metric distance of two points whose scalar gap is |delta|
  /// (after re-centering |delta| <= 1/2 on the circle).
  double distance_from_gap(double abs_delta) const noexcept;

 private:
  Mode mode_ = Mode::scalar;
  PhaseSpace scalar_space_ = PhaseSpace::circle;
  std::size_t dim_ = 1;
  std::vector<double> probs_;
  std::vector<MapSpec> maps_;
  std::vector<Matrix> matrices_;
};

/// Chart coordinate in [0, 1) of a direction in R^2.
double chart_coordinate(const ProjectivePoint& p);
ProjectivePoint chart_point(double x);

/// Lift arc [a, a + delta] of a one-dimensional system carried forward by
/// monotone maps. The image of the arc under f is the arc between the endpoint
/// images; delta is updated with the cancellation-free difference ratio, so
/// the arc may shrink far below the spacing of doubles near a.
class ArcTracker {
 public:
  ArcTracker() = default;
  ArcTracker(PhaseSpace space, double base, double delta)
      : space_(space), base_(base), delta_(delta) {}

  void step(const MapSpec& m) {
    if (!censored_) {
      const double r = m.difference_ratio(base_, delta_);
      log_ratio_.add(std::log(std::fabs(r)));
      delta_ *= r;
      if (std::fabs(delta_) < kCensorFloor) censored_ = true;
    }
    base_ = m.apply(base_);
  }

  double base() const noexcept { return base_; }
  double delta() const noexcept { return delta_; }
  /// log(|delta_n| / |delta_0|), compensated sum of step log-ratios.
  double log_ratio() const noexcept { return log_ratio_.value(); }
  bool censored() const noexcept { return censored_; }
  PhaseSpace space() const noexcept { return space_; }

  /// Replaces the tracked arc by its complement on the circle.
  void recenter() {
    const double sign = delta_ > 0.0 ? 1.0 : -1.0;
    const double next = sign - delta_;
    log_ratio_.add(std::log(std::fabs(next) / std::fabs(delta_)));
    base_ = wrap_unit(base_ + delta_);
    delta_ = next;
  }

 private:
  PhaseSpace space_ = PhaseSpace::circle;
  double base_ = 0.0;
  double delta_ = 0.0;
  CompensatedSum log_ratio_;
  bool censored_ = false;
};

/// Two orbits driven by the same word. The state depends only on the
/// unordered pair {x, y}, so tracking (x, y) and (y, x) is bit-identical.
class PairTracker {
 public:
  PairTracker(const SystemView& view, const PhasePoint& x, const PhasePoint& y);

  void step(int symbol);
  double distance() const noexcept;
  /// log(d_n / d_0). Exact chain-rule sum for scalar views.
  double log_ratio() const noexcept;
  bool censored() const noexcept;
  double initial_distance() const noexcept { return d0_; }

 private:
  void projective_normalize();

  const SystemView* view_ = nullptr;
  double d0_ = 0.0;
  ArcTracker arc_;
  // projective (d >= 3): direct mode keeps two unit vectors p, q; tangent mode
  // keeps the unit centre c = p and the tangent t with q ~ c + t, t orthogonal to c.
  bool tangent_mode_ = false;
  std::vector<double> p_, q_, work_, scratch_;
  double proj_distance_ = 0.0;
};

/// Stable projective distance between [c + s] and [c + t] for a unit c and
/// tangents s, t orthogonal to c.
double tangent_pair_distance(std::span<const double> c, std::span<const double> s,
                             std::span<const double> t);

/// Pushes a tangent t through A given the unit image centre c_new = A c / |A c|
/// and scale = |A c|; t is replaced by the image tangent (orthogonal to
/// c_new). Returns false when the tangent point leaves the affine chart around
/// c_new, i.e. the image point is (numerically) orthogonal to the centre.
bool push_tangent(const Matrix& a, std::span<const double> c_new, double scale,
                  std::span<double> t, std::span<double> scratch);

}  // namespace rdsw
