// SPDX-License-Identifier: Apache-2.0
// Hand-rolled generators for the property tests. Every generator draws from a
// StreamRng so failures replay from the printed case index.
#pragma once

#include <vector>

#include "rdsw/gallery.hpp"
#include "rdsw/rng.hpp"
#include "rdsw/systems.hpp"

namespace rdsw::testgen {

inline constexpr std::uint64_t kSeed = 0x7e57;

inline StreamRng rng_for(std::uint64_t case_index) {
  return StreamRng(kSeed, streams::kAux + case_index);
}

inline std::vector<double> probs(StreamRng& rng, std::size_t n) {
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& v : p) total += (v = 0.1 + rng.uniform());
  for (auto& v : p) v /= total;
  // Exact renormalization keeps the sum inside the validation tolerance.
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) s += p[i];
  p.back() = 1.0 - s;
  return p;
}

/// Increasing affine contractions of [0, 1] with slopes in [0.1, 0.9].
inline SystemSpec affine_ifs(StreamRng& rng) {
  const std::size_t n = 2 + rng.below(3);
  std::vector<MapSpec> maps;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 0.1 + 0.8 * rng.uniform();
    const double b = (1.0 - a) * rng.uniform();
    maps.push_back(MapSpec::affine(a, b));
  }
  return SystemSpec(std::move(maps), probs(rng, n), "random_affine");
}

/// Circle diffeomorphisms x + c + amp/(2 pi k) sin(2 pi k (x - s)), |amp| < 0.9.
inline SystemSpec circle_ifs(StreamRng& rng) {
  const std::size_t n = 2 + rng.below(2);
  std::vector<MapSpec> maps;
  for (std::size_t i = 0; i < n; ++i) {
    maps.push_back(MapSpec::perturbed_rotation(rng.uniform(), 0.9 * (2.0 * rng.uniform() - 1.0),
                                               1 + static_cast<int>(rng.below(3)), rng.uniform()));
  }
  return SystemSpec(std::move(maps), probs(rng, n), "random_circle");
}

inline std::vector<double> unit_vector(StreamRng& rng, std::size_t d) {
  std::vector<double> v(d);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace rdsw::testgen
