// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "rdsw/cocycles.hpp"
#include "rdsw/systems.hpp"

namespace rdsw::gallery {

/// {x/2, (x+1)/2} on [0,1], p = (1/2, 1/2). Stationary measure Lebesgue,
/// gamma = -log 2.
SystemSpec binary_affine();
/// {x/2, x/4 + 3/4} on [0,1], p = (1/2, 1/2); gamma = -(3/2) log 2.
SystemSpec slope_pair();
/// Three circle diffeomorphisms: f1 fixes {0, 1/4, 1/2, 3/4} with f1'(0) > 1
/// and f1'(1/4) < 1, f2 = f1(. - 1/8) + 1/8, f3 = x + 1/2; p = (1/3, 1/3, 1/3).
/// [1/4, 3/8] u [3/4, 7/8] is forward invariant and pairs across it stay
/// at distance >= 3/8.
SystemSpec anton();
/// Two irrational rotations (sqrt 2 - 1 and (sqrt 5 - 1) / 2); Lebesgue is
/// invariant for both, so no synchronization.
SystemSpec two_rotations();
/// Two hyperbolic Moebius circle maps, diag(2, 1/2) and its conjugate by the
/// rotation R(pi/4), in the chart x = angle / pi; p = (1/2, 1/2).
SystemSpec moebius_pair();

/// {diag(2, 1/2), R(pi/4)}, p = (1/2, 1/2).
CocycleSpec diag_rot();
/// {diag(2, 1/2)}.
CocycleSpec single_hyperbolic();
/// {R(1)}.
CocycleSpec rotation_only();

SystemSpec system(const std::string& id);
CocycleSpec cocycle(const std::string& id);
bool has_system(const std::string& id);
bool has_cocycle(const std::string& id);

struct Entry {
  std::string id;
  std::string kind;   // "system" or "cocycle"
  std::string space;
  std::string facts;  // known exact quantities and their provenance
};

std::vector<Entry> list();

}  // namespace rdsw::gallery
