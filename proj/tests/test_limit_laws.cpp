// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "rdsw/error.hpp"
#include "rdsw/gallery.hpp"
#include "rdsw/limit_laws.hpp"
#include "rdsw/numerics.hpp"

using namespace rdsw;

namespace {

// Stationary uniform X with Cov(X_0, X_k) = 2^-k / 12 gives
// sigma^2 = 1/12 + 2 sum_{k>=1} 2^-k / 12 = 1/4.
double binary_coordinate_sigma2() {
  double s = 1.0 / 12.0;
  for (int k = 1; k < 60; ++k) s += 2.0 * std::ldexp(1.0 / 12.0, -k);
  return s;
}

}  // namespace

TEST_CASE("observables") {
  CHECK(Observable::coordinate()(0.3) == 0.3);
  CHECK(Observable::cos2pi()(0.5) == doctest::Approx(-1.0));
  CHECK(Observable::constant(2.0)(0.7) == 2.0);
  CHECK(Observable::symbol()(0.7, 1) == 1.0);
  CHECK(Observable::coordinate().affine(2.0, 1.0)(0.25) == 1.5);
  CHECK(Observable::constant(2.0).is_constant());
  CHECK(observable_from_string("cos2pi").kind() == Observable::Kind::cos2pi);
  CHECK_THROWS_AS(observable_from_string("nope"), Error);
  const auto tab = Observable::tabulated({0.0, 0.5}, {0.0, 1.0});
  CHECK(tab(0.25) == doctest::Approx(0.5));
  CHECK(tab(0.75) == doctest::Approx(0.5));
  CHECK(holder_spot_check(Observable::cos2pi().with_holder(1.0, 2.0 * 3.14159266), PhaseSpace::circle).ok);
  CHECK_FALSE(holder_spot_check(Observable::cos2pi().with_holder(1.0, 1.0), PhaseSpace::circle).ok);
}

TEST_CASE("SLLN") {
  const auto sys = gallery::binary_affine();
  const auto c = slln_check(sys, Observable::constant(3.0), 0.2, 1000, 1, 2, 10000);
  for (const auto& p : c.points) CHECK(p.gap == 0.0);

  const auto r = slln_check(sys, Observable::coordinate(), 0.0, 200000, 1, 2, 200000);
  CHECK(r.nu_hat == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::fabs(r.points.back().average - 0.5) < 0.01);
  CHECK(r.pass);

  const SystemSpec half({MapSpec::affine(0.5, 0.0)}, {1.0});
  const auto h = slln_check(half, Observable::coordinate(), 1.0, 100000, 1, 2, 10000);
  CHECK(h.points.back().average < 1e-4);
}

TEST_CASE("sigma^2 oracles") {
  const auto sys = gallery::binary_affine();
  CHECK(binary_coordinate_sigma2() == doctest::Approx(0.25).epsilon(1e-15));
  const auto est = estimate_sigma2(sys, Observable::coordinate(), 4000, 1000, 3, 2);
  CHECK(est.sigma2 == doctest::Approx(binary_coordinate_sigma2()).epsilon(0.1));
  CHECK(est.nu_hat == doctest::Approx(0.5).epsilon(0.01));
  CHECK(est.batch_sigma2 == doctest::Approx(binary_coordinate_sigma2()).epsilon(0.1));

  // Bernoulli(1/2) symbol indicator: i.i.d. with variance 1/4.
  const auto sym = estimate_sigma2(sys, Observable::symbol(), 4000, 1000, 3, 2);
  CHECK(sym.sigma2 == doctest::Approx(0.25).epsilon(0.1));

  const auto zero = estimate_sigma2(sys, Observable::constant(1.0), 1000, 30, 3);
  CHECK(zero.sigma2 == 0.0);
  CHECK_THROWS_AS(estimate_sigma2(sys, Observable::coordinate(), 100, 29, 3), Error);

  const SystemSpec half({MapSpec::affine(0.5, 0.0)}, {1.0});
  CHECK(estimate_sigma2(half, Observable::coordinate(), 1000, 30, 3).sigma2 < 1e-12);
}

TEST_CASE("quenched CLT") {
  const auto sys = gallery::binary_affine();
  const auto r = clt_test(sys, Observable::coordinate(), 0.0, 2000, 2000, 5, 2, 0.5, 0.25);
  CHECK(r.pass);
  CHECK(r.threshold == doctest::Approx(1.63 / std::sqrt(2000.0) + 0.01));
  RunningStats s;
  for (double z : r.normalized) s.add(z);
  CHECK(std::fabs(s.mean()) < 0.1);
  CHECK(s.variance() == doctest::Approx(1.0).epsilon(0.1));
  // A wrong variance must be caught.
  CHECK_FALSE(clt_test(sys, Observable::coordinate(), 0.0, 2000, 2000, 5, 2, 0.5, 1.0).pass);

  const auto d = clt_test(sys, Observable::constant(2.0), 0.0, 100, 50, 5);
  CHECK(d.degenerate);
  CHECK(d.pass);

  const auto a = clt_test(sys, Observable::coordinate(), 0.25, 500, 200, 9, 1, 0.5, 0.25);
  const auto b = clt_test(sys, Observable::coordinate(), 0.25, 500, 200, 9, 4, 0.5, 0.25);
  CHECK(a.normalized == b.normalized);
}

TEST_CASE("LIL statistic") {
  const auto sys = gallery::binary_affine();
  const auto c = lil_statistic(sys, Observable::constant(1.0), 0.0, 10000, 16, 1);
  for (double s : c.statistics) CHECK(s == 0.0);
  CHECK(c.pass);
  CHECK_THROWS_AS(lil_statistic(sys, Observable::coordinate(), 0.0, 9999, 16, 1), Error);
  const auto r = lil_statistic(sys, Observable::symbol(), 0.0, 100000, 64, 2, 2, 0.5, 0.25);
  CHECK(r.median > 0.3);
  CHECK(r.median < 1.5);
}
