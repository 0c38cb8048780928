// SPDX-License-Identifier: Apache-2.0
#include "rdsw/gallery.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rdsw/error.hpp"

namespace rdsw::gallery {

namespace {
constexpr double kPi = std::numbers::pi;

Matrix hyperbolic() { return Matrix(2, 2, {2.0, 0.0, 0.0, 0.5}); }

Matrix conjugated_hyperbolic() {
  const Matrix r = Matrix::rotation(kPi / 4.0);
  return r * hyperbolic() * inverse(r);
}
}  // namespace

SystemSpec binary_affine() {
  return SystemSpec({MapSpec::affine(0.5, 0.0), MapSpec::affine(0.5, 0.5)}, {0.5, 0.5},
                    "binary_affine");
}

SystemSpec slope_pair() {
  return SystemSpec({MapSpec::affine(0.5, 0.0), MapSpec::affine(0.25, 0.75)}, {0.5, 0.5},
                    "slope_pair");
}

SystemSpec anton() {
  // f(x) = x + (0.6 / 4 pi) sin(4 pi (x - s)); derivative 1 + 0.6 cos(4 pi (x - s)).
  const double third = 1.0 / 3.0;
  SystemSpec sys({MapSpec::perturbed_rotation(0.0, 0.6, 2, 0.0),
                  MapSpec::perturbed_rotation(0.0, 0.6, 2, 0.125), MapSpec::rotation(0.5)},
                 {third, third, 1.0 - 2.0 * third}, "anton");
  const MapSpec& f1 = sys.map(0);
  const MapSpec& f2 = sys.map(1);
  for (double p : {0.0, 0.25, 0.5, 0.75}) {
    require(circle_distance(f1.apply(p), p) < 1e-15, ErrorKind::hypothesis_failed,
            "anton: f1 fixed point check failed");
    require(circle_distance(f2.apply(p + 0.125), p + 0.125) < 1e-15,
            ErrorKind::hypothesis_failed, "anton: f2 fixed point check failed");
  }
  const double expanding = std::min({f1.derivative(0.0), f1.derivative(0.5),
                                      f2.derivative(0.125), f2.derivative(0.625)});
  const double contracting = std::max({f1.derivative(0.25), f1.derivative(0.75),
                                       f2.derivative(0.375), f2.derivative(0.875)});
  require(expanding > 1.0 && contracting < 1.0, ErrorKind::hypothesis_failed,
          "anton: derivative conditions at the fixed points failed");
  return sys;
}

SystemSpec two_rotations() {
  return SystemSpec({MapSpec::rotation(std::numbers::sqrt2 - 1.0),
                     MapSpec::rotation((std::sqrt(5.0) - 1.0) / 2.0)},
                    {0.5, 0.5}, "two_rotations");
}

SystemSpec moebius_pair() {
  return SystemSpec({MapSpec::moebius(hyperbolic()), MapSpec::moebius(conjugated_hyperbolic())},
                    {0.5, 0.5}, "moebius_pair");
}

CocycleSpec diag_rot() {
  return CocycleSpec({hyperbolic(), Matrix::rotation(kPi / 4.0)}, {0.5, 0.5}, "diag_rot");
}

CocycleSpec single_hyperbolic() { return CocycleSpec({hyperbolic()}, {1.0}, "single_hyperbolic"); }

CocycleSpec rotation_only() {
  return CocycleSpec({Matrix::rotation(1.0)}, {1.0}, "rotation_only");
}

bool has_system(const std::string& id) {
  return id == "binary_affine" || id == "slope_pair" || id == "anton" ||
         id == "two_rotations" || id == "moebius_pair";
}

bool has_cocycle(const std::string& id) {
  return id == "diag_rot" || id == "single_hyperbolic" || id == "rotation_only";
}

SystemSpec system(const std::string& id) {
  if (id == "binary_affine") return binary_affine();
  if (id == "slope_pair") return slope_pair();
  if (id == "anton") return anton();
  if (id == "two_rotations") return two_rotations();
  if (id == "moebius_pair") return moebius_pair();
  fail(ErrorKind::invalid_argument, "unknown gallery system '" + id + "'");
}

CocycleSpec cocycle(const std::string& id) {
  if (id == "diag_rot") return diag_rot();
  if (id == "single_hyperbolic") return single_hyperbolic();
  if (id == "rotation_only") return rotation_only();
  fail(ErrorKind::invalid_argument, "unknown gallery cocycle '" + id + "'");
}

std::vector<Entry> list() {
  return {
      {"binary_affine", "system", "interval",
       "gamma = -log 2 (constant slopes); stationary measure = Lebesgue; sync rate log(1/2) "
       "exactly on every word; sigma^2(coordinate) = 1/4 (autocovariance sum)"},
      {"slope_pair", "system", "interval",
       "gamma = -(3/2) log 2 (p0 log 1/2 + p1 log 1/4); distance ratio equals the derivative "
       "product (affine chain rule)"},
      {"anton", "system", "circle",
       "non-proximal; (LC) holds; realizes the Anton example: f1 fixes {0,1/4,1/2,3/4}, "
       "f2 = f1(x-1/8)+1/8, f3 = x+1/2; pairs in [1/4,3/8]x[3/4,7/8] stay >= 3/8 apart; "
       "realization x + (0.6/4pi) sin(4pi x) is one admissible choice"},
      {"two_rotations", "system", "circle",
       "gamma = 0; Lebesgue is a common invariant measure, so hypothesis (H) fails and "
       "there is no synchronization"},
      {"moebius_pair", "system", "circle",
       "smooth (real-analytic) hyperbolic Moebius maps without common fixed point; "
       "synchronizing; tempered distortion"},
      {"diag_rot", "cocycle", "projective",
       "{diag(2,1/2), R(pi/4)}: strongly irreducible by construction; simple top exponent "
       "chi_top in (0, log 2); sum rule chi_1 + chi_2 = 0"},
      {"single_hyperbolic", "cocycle", "projective",
       "{diag(2,1/2)}: chi = (-log 2, log 2) exactly; e1 attracting direction (not strongly "
       "irreducible)"},
      {"rotation_only", "cocycle", "projective",
       "{R(1)}: chi = (0, 0); top gap 0, local contraction refused"},
  };
}

}  // namespace rdsw::gallery
