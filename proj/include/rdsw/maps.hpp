// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <memory>
#include <span>
#include <optional>
#include <string>
#include <vector>

#include "rdsw/geometry.hpp"
#include "rdsw/linalg.hpp"

namespace rdsw {

enum class MapFamily {
  affine_interval,     // x -> a x + b on [0, 1]
  rotation,            // x -> x + c mod 1
  moebius_circle,      // projective action of a 2x2 matrix, circle = P^1 via x = angle / pi
  perturbed_rotation,  // x -> x + c + amp/(2 pi k) sin(2 pi k (x - s)) mod 1
  tabulated_monotone,  // monotone cubic Hermite lift through cyclic knots
  projective_linear,   // v -> A v / |A v| on P^{d-1}
};

const char* to_string(MapFamily family) noexcept;

/// Knot table of a degree-one circle lift. Knot abscissae lie in [0, 1) and
/// increase strictly; values increase strictly with values.back() <
/// values.front() + 1. Slopes are either supplied (enabling derivative
/// queries) or produced by the Fritsch-Butland monotone rule.
struct KnotTable {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> slopes;  // empty: derivatives unavailable
};

/// One map of an iterated function system. Immutable value; cheap to copy
/// (table and matrix data are shared).
class MapSpec {
 public:
  static MapSpec affine(double a, double b);
  static MapSpec rotation(double c);
  /// det(m) > 0 required (orientation preserving).
  static MapSpec moebius(const Matrix& m);
  /// Circle chart of a 2x2 projective map; det(m) may be negative, in which
  /// case the chart reverses orientation.
  static MapSpec moebius_chart(const Matrix& m);
  static MapSpec perturbed_rotation(double c, double amp, int harmonic = 1, double shift = 0.0);
  static MapSpec tabulated(KnotTable knots);
  static MapSpec projective(const Matrix& m);

  MapFamily family() const noexcept { return family_; }
  PhaseSpace space() const noexcept;
  bool has_derivative() const noexcept;
  bool orientation_preserving() const noexcept;

  // --- one-dimensional maps (circle / interval) -------------------------
  /// Image reduced into the phase space.
  double apply(double x) const;
  /// |f'(x)|.
  double derivative(double x) const;
  /// (F(x + delta) - F(x)) / delta for the lift F, evaluated without
  /// cancellation; equals f'(x) when delta == 0. Signed (negative for
  /// orientation-reversing maps).
  double difference_ratio(double x, double delta) const;

  // --- projective maps ---------------------------------------------------
  ProjectivePoint apply(const ProjectivePoint& p) const;
  /// Unnormalized action on a raw vector.
  void apply_linear(std::span<const double> v, std::span<double> out) const;
  const Matrix& matrix() const;
  std::size_t dim() const noexcept;

  /// Parameters for serialization / display.
  std::string describe() const;
  double param(int i) const noexcept { return p_[static_cast<std::size_t>(i)]; }
  int harmonic() const noexcept { return harmonic_; }
  const KnotTable& knots() const;

 private:
  struct Table;

  MapFamily family_ = MapFamily::rotation;
  std::array<double, 4> p_{};  // affine: a,b; rotation: c; perturbed: c,amp,shift; moebius: det
  int harmonic_ = 1;
  std::shared_ptr<const Matrix> matrix_;
  std::shared_ptr<const Table> table_;
};

}  // namespace rdsw
