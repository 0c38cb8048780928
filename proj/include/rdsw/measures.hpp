// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "rdsw/geometry.hpp"
#include "rdsw/systems.hpp"

namespace rdsw {

/// Weighted atoms on one phase space; weights are nonnegative and sum to 1
/// within 1e-10.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;
  EmpiricalMeasure(PhaseSpace space, std::vector<PhasePoint> points, std::vector<double> weights);
  /// Equal weights 1/n.
  static EmpiricalMeasure uniform_weights(PhaseSpace space, std::vector<PhasePoint> points);
  static EmpiricalMeasure dirac(const PhasePoint& p);
  /// Midpoints of k equal cells of [0,1) with weights 1/k.
  static EmpiricalMeasure grid(PhaseSpace space, std::size_t k);

  PhaseSpace space() const noexcept { return space_; }
  std::size_t size() const noexcept { return points_.size(); }
  const std::vector<PhasePoint>& points() const noexcept { return points_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double total_mass() const noexcept;
  /// Coordinates of a circle or interval measure.
  std::vector<double> coordinates() const;

  /// Weighted concatenation: result = w * this + (1 - w) * other.
  EmpiricalMeasure merge(const EmpiricalMeasure& other, double w) const;

 private:
  PhaseSpace space_ = PhaseSpace::circle;
  std::vector<PhasePoint> points_;
  std::vector<double> weights_;
};

/// sum_i p_i (f_i)_* m, exactly: atom count multiplies by N.
EmpiricalMeasure markov_push(const SystemSpec& sys, const EmpiricalMeasure& m);

/// Systematic resampling to `budget` equal-weight atoms.
EmpiricalMeasure resample(const EmpiricalMeasure& m, std::size_t budget, std::uint64_t seed);

/// Occupation measure of one orbit after burn_in steps: samples atoms of
/// weight 1/samples. The start is uniform from stream kInitial; symbols come
/// from stream kStationary.
EmpiricalMeasure estimate_stationary(const SystemSpec& sys, std::size_t burn_in,
                                     std::size_t samples, std::uint64_t seed);

/// Sharded occupation measure: `shards` independent orbits (streams
/// kStationary + s) of samples / shards points each, concatenated in shard
/// order. Deterministic given (seed, shards) for any thread count.
EmpiricalMeasure estimate_stationary_sharded(const SystemSpec& sys, std::size_t burn_in,
                                             std::size_t samples, std::uint64_t seed,
                                             std::size_t shards, int threads = 1);

/// Exact W1 for circle and interval measures: L1 distance between CDFs
/// (interval) and its minimum over rotations of the CDF offset (circle).
double wasserstein1(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

/// Exact W1 against Lebesgue measure on [0,1] or the circle.
double wasserstein1_to_uniform(const EmpiricalMeasure& m);

enum class AtomVerdict { dirac_at_common_fixed_point, nonatomic_consistent, inconclusive };
const char* to_string(AtomVerdict v) noexcept;

struct AtomDiagnostic {
  AtomVerdict verdict = AtomVerdict::inconclusive;
  bool common_fixed_point_found = false;
  double fixed_point = 0.0;
  double mass_near_fixed_point = 0.0;
  double max_ball_mass = 0.0;  // largest mass in a ball of radius 1e-3
  double threshold = 0.0;      // 5 * (uniform ball mass + 3 binomial sigma)
};

inline constexpr double kAtomRadius = 1e-3;
inline constexpr double kDiracMass = 0.99;
inline constexpr std::size_t kAtomMinSamples = 1000;

/// Dirac-or-nonatomic dichotomy probe for circle and interval systems.
/// Refuses (hypothesis_failed) when a map is not injective on a 2048 grid.
AtomDiagnostic atom_diagnostic(const SystemSpec& sys, const EmpiricalMeasure& m);

/// CSV "point,weight" with 17 significant digits.
void write_measure_csv(std::ostream& os, const EmpiricalMeasure& m);

}  // namespace rdsw
