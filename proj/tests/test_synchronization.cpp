// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "generators.hpp"
#include "rdsw/error.hpp"
#include "rdsw/gallery.hpp"
#include "rdsw/synchronization.hpp"

using namespace rdsw;

TEST_CASE("binary system halves distances exactly on every word") {
  const auto sys = gallery::binary_affine();
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    WordStream w(seed, streams::kReplica, sys.probs());
    const auto t = paired_orbit(sys, IntervalPoint(0.1), IntervalPoint(0.9), w, 30);
    for (std::size_t k = 0; k < t.distances.size(); ++k) {
      CHECK(t.distances[k] == std::ldexp(0.8, -static_cast<int>(k)));
    }
  }
  WordStream w(1, streams::kReplica, sys.probs());
  const auto same = paired_orbit(sys, IntervalPoint(0.3), IntervalPoint(0.3), w, 10);
  CHECK(std::all_of(same.distances.begin(), same.distances.end(), [](double d) { return d == 0.0; }));
}

TEST_CASE("skew_step agrees with iterate") {
  for (std::uint64_t t = 0; t < 100; ++t) {
    auto rng = testgen::rng_for(4000 + t);
    const auto sys = gallery::anton();
    const double x0 = rng.uniform();
    WordStream w(t, streams::kReplica, sys.probs());
    const auto rec = iterate(sys, CirclePoint(x0), w, 20);
    SkewState s{WordStream(t, streams::kReplica, sys.probs()), CirclePoint(x0)};
    for (int k = 0; k < 20; ++k) s = skew_step(sys, std::move(s));
    CHECK(std::get<CirclePoint>(s.x) == std::get<CirclePoint>(rec.points.back()));
  }
}

TEST_CASE("sync rate fits") {
  const auto sys = gallery::binary_affine();
  WordStream w(3, streams::kReplica, sys.probs());
  const auto fit = fit_sync_rate(paired_orbit(sys, IntervalPoint(0.1), IntervalPoint(0.9), w, 40));
  CHECK(fit.rate == doctest::Approx(-std::numbers::ln2).epsilon(1e-12));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));

  const auto rot = gallery::two_rotations();
  WordStream wr(3, streams::kReplica, rot.probs());
  CHECK(fit_sync_rate(paired_orbit(rot, CirclePoint(0.1), CirclePoint(0.4), wr, 100)).rate ==
        doctest::Approx(0.0).epsilon(1e-12));

  const auto anton = gallery::anton();
  WordStream wa(3, streams::kReplica, anton.probs());
  const auto ta = paired_orbit(anton, CirclePoint(0.3), CirclePoint(0.8), wa, 10000);
  CHECK(std::fabs(fit_sync_rate(ta).rate) < 0.01);
  CHECK(*std::min_element(ta.distances.begin(), ta.distances.end()) >= 0.375);

  WordStream ws(3, streams::kReplica, sys.probs());
  CHECK_THROWS_AS(fit_sync_rate(paired_orbit(sys, IntervalPoint(0.1), IntervalPoint(0.9), ws, 4)),
                  Error);
}

TEST_CASE("property: affine sync rate equals the mean log slope along the word") {
  for (std::uint64_t t = 0; t < 40; ++t) {
    auto rng = testgen::rng_for(4100 + t);
    const auto sys = testgen::affine_ifs(rng);
    std::vector<int> symbols(30);
    for (auto& v : symbols) v = static_cast<int>(rng.below(sys.size()));
    auto word = WordStream::fixed(symbols);
    const auto tr = paired_orbit(sys, IntervalPoint(0.0), IntervalPoint(1.0), word, 30);
    double log_prod = 0.0;
    for (int s : symbols) log_prod += std::log(sys.map(static_cast<std::size_t>(s)).derivative(0.5));
    CHECK(std::log(tr.distances.back()) == doctest::Approx(log_prod).epsilon(1e-10));
  }
}

TEST_CASE("average sync sums") {
  const auto sys = gallery::binary_affine();
  const auto a = average_sync_sum(sys, IntervalPoint(0.2), IntervalPoint(0.7), 1.0, 60, 100, 1);
  CHECK(a.partial_sums.back() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.bounded);
  const auto z = average_sync_sum(sys, IntervalPoint(0.2), IntervalPoint(0.2), 1.0, 10, 100, 1);
  CHECK(z.partial_sums.back() == 0.0);
  const auto anton = average_sync_sum(gallery::anton(), CirclePoint(0.3), CirclePoint(0.8), 1.0,
                                      200, 100, 1);
  CHECK_FALSE(anton.bounded);
  CHECK(anton.partial_sums.back() >= 0.375 * 201);
  CHECK_THROWS_AS(average_sync_sum(sys, IntervalPoint(0.2), IntervalPoint(0.7), 1.0, 10, 99, 1),
                  Error);
}

TEST_CASE("local contraction probe") {
  const SystemSpec half({MapSpec::affine(0.5, 0.0)}, {1.0});
  CHECK(local_contraction_probe(half, IntervalPoint(0.4), 1e-3, 50, 64, 0.6, 1).fraction == 1.0);
  CHECK(local_contraction_probe(gallery::binary_affine(), IntervalPoint(0.4), 1e-3, 50, 64, 0.6, 1)
            .fraction == 1.0);
  // Isometries keep the diameter 2e-3, which exceeds 0.9^k once k > 59.
  CHECK(local_contraction_probe(gallery::two_rotations(), CirclePoint(0.4), 1e-3, 200, 64, 0.9, 1)
            .fraction == 0.0);
  // Shrinking the ball can only help.
  const auto anton = gallery::anton();
  double prev = 0.0;
  for (double r : {1e-2, 1e-3, 1e-4}) {
    const double f = local_contraction_probe(anton, CirclePoint(0.1), r, 300, 256, 0.99, 2).fraction;
    CHECK(f >= prev);
    prev = f;
  }
}

TEST_CASE("contraction on average search") {
  const auto sys = gallery::binary_affine();
  const auto s = contraction_on_average_search(sys, {1.0, 0.5}, 30, 1, 5);
  REQUIRE(s.table.size() == 2);
  CHECK(s.table[0].lambda_hat == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.table[1].lambda_hat == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(s.table[0].exact);
  CHECK(s.certified);
  const auto r = contraction_on_average_search(gallery::two_rotations(), {1.0, 0.5}, 30, 1, 5);
  CHECK(r.best_lambda == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_FALSE(r.certified);
}

TEST_CASE("proximality probe") {
  const auto bin = gallery::binary_affine();
  const auto v = proximality_probe(bin, {{IntervalPoint(0.1), IntervalPoint(0.9)},
                                         {IntervalPoint(0.4), IntervalPoint(0.4)}},
                                   100, 8, 1e-6, 1);
  CHECK(v[0].proximal);
  CHECK(v[1].proximal);
  const auto a = proximality_probe(gallery::anton(), {{CirclePoint(0.3), CirclePoint(0.8)}}, 10000,
                                   8, 0.3, 1);
  CHECK_FALSE(a[0].proximal);
  CHECK(a[0].min_distance >= 0.375);
}
