// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "generators.hpp"
#include "rdsw/cocycles.hpp"
#include "rdsw/error.hpp"
#include "rdsw/gallery.hpp"

using namespace rdsw;

namespace {
const double kLog2 = std::numbers::ln2;
// 10^7-step run, two seeds agreeing to 4e-5.
constexpr double kDiagRotChiTop = 0.1708;
}  // namespace

TEST_CASE("product stream singular values") {
  const CocycleSpec diag({Matrix(2, 2, {2.0, 0.0, 0.0, 0.5})}, {1.0});
  ProductStream p(diag);
  for (int k = 0; k < 10; ++k) p.step(0);
  const auto ls = p.log_singular_values();
  CHECK(ls[0] == doctest::Approx(-10.0 * kLog2).epsilon(1e-14));
  CHECK(ls[1] == doctest::Approx(10.0 * kLog2).epsilon(1e-14));

  const CocycleSpec id({Matrix::identity(3), Matrix::identity(3)}, {0.5, 0.5});
  ProductStream q(id);
  for (int k = 0; k < 40; ++k) q.step(k % 2);
  for (double v : q.log_singular_values()) CHECK(v == 0.0);

  const CocycleSpec upper({Matrix(2, 2, {2.0, 1.0, 0.0, 0.5})}, {1.0});
  ProductStream u(upper);
  for (int k = 0; k < 20; ++k) u.step(0);
  CHECK(u.log_singular_values()[1] / 20.0 == doctest::Approx(kLog2).epsilon(0.01));
}

TEST_CASE("spectra with closed forms") {
  const auto d = estimate_spectrum(gallery::single_hyperbolic(), 10000, 2, 1);
  CHECK(d.chis[0] == doctest::Approx(-kLog2).epsilon(1e-12));
  CHECK(d.chis[1] == doctest::Approx(kLog2).epsilon(1e-12));
  CHECK(d.gap_positive);
  CHECK(d.q_lc == doctest::Approx(0.5).epsilon(1e-12));
  const auto r = estimate_spectrum(gallery::rotation_only(), 10000, 2, 1);
  CHECK(std::fabs(r.chis[0]) < 1e-12);
  CHECK(std::fabs(r.chis[1]) < 1e-12);
  CHECK_FALSE(r.gap_positive);
  CHECK_THROWS_AS(estimate_spectrum(gallery::rotation_only(), 999, 2, 1), Error);
}

TEST_CASE("diag_rot top exponent matches the long-run golden value") {
  const auto s = estimate_spectrum(gallery::diag_rot(), 100000, 16, 5, 2);
  CHECK(s.chis[1] > 0.0);
  CHECK(s.chis[1] < kLog2);
  CHECK(s.chis[1] == doctest::Approx(kDiagRotChiTop).epsilon(0.005 / kDiagRotChiTop));
  CHECK(s.gap_positive);
  // Sum rule: the dets are 1, so the exponents cancel.
  CHECK(std::fabs(s.chis[0] + s.chis[1] - gallery::diag_rot().mean_log_det()) < 1e-9);
}

TEST_CASE("property: sum rule on random cocycles") {
  for (std::uint64_t t = 0; t < 10; ++t) {
    auto rng = testgen::rng_for(6000 + t);
    const std::size_t d = 2 + rng.below(3);
    std::vector<Matrix> ms;
    for (int i = 0; i < 2; ++i) {
      std::vector<double> e(d * d);
      for (auto& v : e) v = rng.normal();
      for (std::size_t j = 0; j < d; ++j) e[j * d + j] += 3.0;
      ms.emplace_back(d, d, e);
    }
    const CocycleSpec c(ms, {0.5, 0.5});
    const auto s = estimate_spectrum(c, 2000, 8, t);
    double sum = 0.0, err = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      sum += s.chis[k];
      err += s.stderrs[k];
    }
    CHECK(std::fabs(sum - c.mean_log_det()) <= 3.0 * err + 1e-9);
    for (std::size_t k = 1; k < d; ++k) CHECK(s.chis[k - 1] <= s.chis[k]);
  }
}

TEST_CASE("projective action") {
  const auto sys = projective_system(gallery::single_hyperbolic());
  const auto e1 = ProjectivePoint::basis(2, 0);
  CHECK(sys.map(0).apply(e1) == e1);
  const auto v = sys.map(0).apply(ProjectivePoint({1.0, 1.0}));
  CHECK(v[0] == doctest::Approx(2.0 / std::hypot(2.0, 0.5)));
  CHECK(v[1] == doctest::Approx(0.5 / std::hypot(2.0, 0.5)));
  const auto rot = MapSpec::projective(Matrix::rotation(std::numbers::pi / 2.0));
  const auto w = rot.apply(e1);
  CHECK(std::fabs(w[0]) < 1e-15);
  CHECK(w[1] == doctest::Approx(1.0));
  // Distances do not see the representative's sign.
  const auto a = sys.map(0).apply(ProjectivePoint({0.6, -0.8}));
  const auto b = sys.map(0).apply(ProjectivePoint({-0.6, 0.8}));
  CHECK(projective_distance(a, e1) == projective_distance(b, e1));
}

TEST_CASE("local contraction rate") {
  const auto single = verify_lc_rate(gallery::single_hyperbolic(), ProjectivePoint::basis(2, 0),
                                     1e-3, 200, 100, 1);
  CHECK(single.fraction == 1.0);
  CHECK_THROWS_AS(verify_lc_rate(gallery::rotation_only(), ProjectivePoint::basis(2, 0), 1e-3, 200,
                                 100, 1),
                  Error);
  const auto base = verify_lc_rate(gallery::diag_rot(), ProjectivePoint::basis(2, 0), 1e-3, 200,
                                   400, 2);
  CHECK(base.fraction >= 0.9);
  double prev = 1.0;
  for (double q : {0.98, 0.95, 0.9}) {
    const auto r = verify_lc_rate(gallery::diag_rot(), ProjectivePoint::basis(2, 0), 1e-3, 200,
                                  400, 2, 1, q);
    CHECK(r.fraction <= prev);
    prev = r.fraction;
  }
}
