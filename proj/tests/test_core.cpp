// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "generators.hpp"
#include "rdsw/error.hpp"
#include "rdsw/geometry.hpp"
#include "rdsw/linalg.hpp"
#include "rdsw/maps.hpp"
#include "rdsw/numerics.hpp"
#include "rdsw/parallel.hpp"
#include "rdsw/rng.hpp"
#include "rdsw/systems.hpp"

using namespace rdsw;

TEST_CASE("philox4x32-10 known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("stream rng: replayable, stream-separated, uniform moments") {
  StreamRng a(7, 3), b(7, 3), c(7, 4);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    differs = differs || va != c.next_u64();
  }
  CHECK(differs);

  StreamRng u(1, streams::kAux);
  RunningStats s, n;
  for (int i = 0; i < 200000; ++i) {
    const double x = u.uniform();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    s.add(x);
    n.add(u.normal());
  }
  CHECK(s.mean() == doctest::Approx(0.5).epsilon(0.005));
  CHECK(s.variance() == doctest::Approx(1.0 / 12.0).epsilon(0.01));
  CHECK(std::fabs(n.mean()) < 0.01);
  CHECK(n.variance() == doctest::Approx(1.0).epsilon(0.01));

  StreamRng k(2, 0);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = k.below(5);
    REQUIRE(v < 5);
    seen.insert(v);
  }
  CHECK(seen.size() == 5);
}

TEST_CASE("numerics helpers") {
  CompensatedSum cs;
  for (int i = 0; i < 10; ++i) cs.add(0.1);
  cs.add(1e16);
  cs.add(-1e16);
  CHECK(cs.value() == doctest::Approx(1.0).epsilon(1e-15));

  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  const auto fit = fit_line(x, y);
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.r2 == doctest::Approx(1.0));

  CHECK(two_sided_z(0.99) == doctest::Approx(2.5758293035489).epsilon(1e-10));
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  const auto w = wilson_interval(50, 100, two_sided_z(0.95));
  CHECK(w.low == doctest::Approx(0.4038315).epsilon(1e-5));
  CHECK(w.high == doctest::Approx(0.5961685).epsilon(1e-5));
  const auto ladder = geometric_checkpoints(16, 1000, 2.0);
  CHECK(ladder.front() == 16);
  CHECK(ladder.back() == 1000);
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(wrap_unit(-0.25) == 0.75);
  CHECK(wrap_unit(-1e-18) == 0.0);
}

TEST_CASE("parallel_for result independent of thread count") {
  for (int threads : {1, 2, 8}) {
    std::vector<double> out(1000);
    parallel_for(out.size(), threads, [&](std::size_t i) { out[i] = std::sqrt(double(i)); });
    CHECK(out[999] == std::sqrt(999.0));
  }
}

TEST_CASE("geometry: metrics") {
  CHECK(circle_distance(0.1, 0.9) == doctest::Approx(0.2));
  CHECK(circle_distance(CirclePoint(1.25), CirclePoint(0.75)) == doctest::Approx(0.5));
  CHECK(interval_distance(IntervalPoint(0.1), IntervalPoint(0.9)) == doctest::Approx(0.8));
  const auto e1 = ProjectivePoint::basis(2, 0), e2 = ProjectivePoint::basis(2, 1);
  CHECK(projective_distance(e1, e2) == doctest::Approx(1.0));
  CHECK(ProjectivePoint({-1.0, 0.0}) == e1);
  CHECK(snowflake(0.25, 0.5) == doctest::Approx(0.5));
  CHECK_THROWS_AS(IntervalPoint(1.5), Error);
}

TEST_CASE("property: projective distance ignores representative signs") {
  for (std::uint64_t t = 0; t < 200; ++t) {
    auto rng = testgen::rng_for(t);
    const std::size_t d = 2 + rng.below(7);
    auto u = testgen::unit_vector(rng, d), v = testgen::unit_vector(rng, d);
    const double base = projective_distance(ProjectivePoint(u), ProjectivePoint(v));
    for (auto& c : u) c = -c;
    CHECK(projective_distance(ProjectivePoint(u), ProjectivePoint(v)) == base);
    CHECK(base >= 0.0);
    CHECK(base <= 1.0 + 1e-15);
  }
}

TEST_CASE("property: circle metric symmetry and triangle inequality") {
  auto rng = testgen::rng_for(1000);
  for (int t = 0; t < 2000; ++t) {
    const double x = rng.uniform(), y = rng.uniform(), z = rng.uniform();
    CHECK(circle_distance(x, y) == circle_distance(y, x));
    CHECK(circle_distance(x, z) <= circle_distance(x, y) + circle_distance(y, z) + 1e-15);
    CHECK(circle_distance(x, y) <= 0.5);
  }
}

TEST_CASE("maps: closed forms") {
  const auto f = MapSpec::affine(0.5, 0.25);
  CHECK(f.apply(0.5) == 0.5);
  CHECK(f.derivative(0.1) == 0.5);
  const auto r = MapSpec::rotation(0.75);
  CHECK(r.apply(0.5) == 0.25);
  CHECK(r.derivative(0.3) == 1.0);
  const auto p = MapSpec::perturbed_rotation(0.0, 0.6, 2, 0.0);
  CHECK(p.apply(0.25) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(p.derivative(0.0) == doctest::Approx(1.6));
  CHECK_THROWS_AS(MapSpec::perturbed_rotation(0.0, 1.0), Error);
  CHECK_THROWS_AS(MapSpec::affine(0.0, 0.5), Error);
}

TEST_CASE("property: difference ratio is the secant of the lift") {
  for (std::uint64_t t = 0; t < 50; ++t) {
    auto rng = testgen::rng_for(2000 + t);
    const auto sys = testgen::circle_ifs(rng);
    for (const auto& m : sys.maps()) {
      const double x = rng.uniform();
      const double delta = 1e-3 * (rng.uniform() + 0.01);
      const double secant = m.difference_ratio(x, delta);
      const double naive = circle_distance(m.apply(x + delta), m.apply(x)) / delta;
      CHECK(secant == doctest::Approx(naive).epsilon(1e-6));
      CHECK(m.difference_ratio(x, 0.0) == doctest::Approx(m.derivative(x)).epsilon(1e-14));
    }
  }
}

TEST_CASE("systems: validation") {
  CHECK_THROWS_WITH_AS(
      SystemSpec({MapSpec::affine(0.5, 0.0), MapSpec::affine(0.5, 0.5)}, {0.5, 0.4}),
      doctest::Contains("probs must sum to 1"), Error);
  CHECK_THROWS_AS(SystemSpec({MapSpec::affine(0.5, 0.0), MapSpec::rotation(0.1)}, {0.5, 0.5}),
                  Error);
  CHECK_THROWS_AS(SystemSpec({}, {}), Error);
}

TEST_CASE("word streams replay and follow the law") {
  WordStream a(5, streams::kReplica, {0.25, 0.75}), b(5, streams::kReplica, {0.25, 0.75});
  std::size_t ones = 0;
  for (int i = 0; i < 100000; ++i) {
    const int s = a.next();
    REQUIRE(s == b.next());
    ones += s == 1;
  }
  CHECK(ones / 100000.0 == doctest::Approx(0.75).epsilon(0.01));
  auto fixed = WordStream::fixed({1, 0});
  CHECK(fixed.next() == 1);
  CHECK(fixed.next() == 0);
  CHECK_THROWS_AS(fixed.next(), Error);
}

TEST_CASE("enumeration weights sum to one in lexicographic order") {
  const auto sys = SystemSpec({MapSpec::affine(0.5, 0.0), MapSpec::affine(0.5, 0.5),
                               MapSpec::affine(0.25, 0.0)},
                              {0.2, 0.3, 0.5});
  CompensatedSum total;
  std::vector<int> first;
  std::size_t count = 0;
  enumerate_words(sys, 4, [&](std::span<const int> w, double weight) {
    if (count++ == 0) first.assign(w.begin(), w.end());
    total.add(weight);
  });
  CHECK(count == 81);
  CHECK(first == std::vector<int>{0, 0, 0, 0});
  CHECK(total.value() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(require_word_budget(2, 30, 1ULL << 24), Error);
}

TEST_CASE("iterate composes in word order") {
  const auto sys = SystemSpec({MapSpec::affine(0.5, 0.0), MapSpec::affine(0.5, 0.5)}, {0.5, 0.5});
  auto word = WordStream::fixed({1, 0, 1});
  const auto rec = iterate(sys, IntervalPoint(0.0), word, 3);
  REQUIRE(rec.points.size() == 4);
  CHECK(std::get<IntervalPoint>(rec.points[1]).coordinate() == 0.5);
  CHECK(std::get<IntervalPoint>(rec.points[2]).coordinate() == 0.25);
  CHECK(std::get<IntervalPoint>(rec.points[3]).coordinate() == 0.625);
  CHECK(rec.log_deriv_partial.back() == doctest::Approx(-3.0 * std::numbers::ln2));
}

TEST_CASE("linalg: determinant and rotation") {
  const Matrix m(2, 2, {2.0, 1.0, 0.0, 0.5});
  CHECK(determinant(m) == doctest::Approx(1.0));
  const auto r = Matrix::rotation(std::numbers::pi / 2.0);
  CHECK(determinant(r) == doctest::Approx(1.0));
}
