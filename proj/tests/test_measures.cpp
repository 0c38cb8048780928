// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "generators.hpp"
#include "rdsw/error.hpp"
#include "rdsw/gallery.hpp"
#include "rdsw/limit_laws.hpp"
#include "rdsw/measures.hpp"
#include "rdsw/numerics.hpp"

using namespace rdsw;

namespace {

// Independent oracle: W1 between two interval measures by integrating the CDF
// difference on a fine grid.
double w1_grid_oracle(const EmpiricalMeasure& a, const EmpiricalMeasure& b, std::size_t grid) {
  auto cdf = [](const EmpiricalMeasure& m, double t) {
    double c = 0.0;
    const auto xs = m.coordinates();
    for (std::size_t i = 0; i < xs.size(); ++i) c += xs[i] <= t ? m.weights()[i] : 0.0;
    return c;
  };
  double total = 0.0;
  for (std::size_t g = 0; g < grid; ++g) {
    const double t = (g + 0.5) / static_cast<double>(grid);
    total += std::fabs(cdf(a, t) - cdf(b, t));
  }
  return total / static_cast<double>(grid);
}

EmpiricalMeasure random_interval_measure(StreamRng& rng, std::size_t n) {
  std::vector<PhasePoint> pts;
  for (std::size_t i = 0; i < n; ++i) pts.emplace_back(IntervalPoint(rng.uniform()));
  return EmpiricalMeasure::uniform_weights(PhaseSpace::interval, std::move(pts));
}

}  // namespace

TEST_CASE("markov_push of a Dirac under the binary system") {
  const auto m = markov_push(gallery::binary_affine(), EmpiricalMeasure::dirac(IntervalPoint(0.0)));
  REQUIRE(m.size() == 2);
  CHECK(m.coordinates() == std::vector<double>{0.0, 0.5});
  CHECK(m.weights() == std::vector<double>{0.5, 0.5});
}

TEST_CASE("markov_push under a single rotation rotates the measure") {
  const SystemSpec rot({MapSpec::rotation(0.25)}, {1.0});
  const auto m = markov_push(rot, EmpiricalMeasure::grid(PhaseSpace::circle, 4));
  auto xs = m.coordinates();
  std::sort(xs.begin(), xs.end());
  CHECK(xs == std::vector<double>{0.125, 0.375, 0.625, 0.875});
}

TEST_CASE("pushed dyadic grid stays within 2^-10 of Lebesgue") {
  const auto m = markov_push(gallery::binary_affine(), EmpiricalMeasure::grid(PhaseSpace::interval, 1024));
  CHECK(wasserstein1_to_uniform(m) <= 1.0 / 1024.0);
}

TEST_CASE("wasserstein1 closed forms") {
  const auto a = EmpiricalMeasure::dirac(CirclePoint(0.1));
  const auto b = EmpiricalMeasure::dirac(CirclePoint(0.9));
  CHECK(wasserstein1(a, b) == doctest::Approx(0.2));
  CHECK(wasserstein1(a, a) == 0.0);
  const auto g = EmpiricalMeasure::grid(PhaseSpace::interval, 1000);
  CHECK(wasserstein1(EmpiricalMeasure::dirac(IntervalPoint(0.0)), g) == doctest::Approx(0.5));
  CHECK(wasserstein1_to_uniform(g) == doctest::Approx(1.0 / 4000.0));
  // Circle: a Dirac sits at mean distance 1/4 from Lebesgue.
  const auto c = EmpiricalMeasure::grid(PhaseSpace::circle, 1000);
  CHECK(wasserstein1_to_uniform(c) == doctest::Approx(1.0 / 4000.0).epsilon(1e-6));
  CHECK(wasserstein1_to_uniform(EmpiricalMeasure::dirac(CirclePoint(0.3))) ==
        doctest::Approx(0.25).epsilon(1e-9));
  CHECK_THROWS_AS(wasserstein1(a, EmpiricalMeasure::dirac(IntervalPoint(0.1))), Error);
}

TEST_CASE("property: interval W1 matches the grid oracle and is a metric") {
  for (std::uint64_t t = 0; t < 20; ++t) {
    auto rng = testgen::rng_for(3000 + t);
    const auto a = random_interval_measure(rng, 1 + rng.below(20));
    const auto b = random_interval_measure(rng, 1 + rng.below(20));
    const auto c = random_interval_measure(rng, 1 + rng.below(20));
    CHECK(wasserstein1(a, b) == doctest::Approx(w1_grid_oracle(a, b, 20000)).epsilon(2e-3));
    CHECK(wasserstein1(a, b) == doctest::Approx(wasserstein1(b, a)).epsilon(1e-12));
    CHECK(wasserstein1(a, c) <= wasserstein1(a, b) + wasserstein1(b, c) + 1e-12);
  }
}

TEST_CASE("property: circle W1 is rotation invariant") {
  for (std::uint64_t t = 0; t < 20; ++t) {
    auto rng = testgen::rng_for(3100 + t);
    std::vector<PhasePoint> pa, pb, ra, rb;
    const double shift = rng.uniform();
    for (int i = 0; i < 7; ++i) {
      const double x = rng.uniform(), y = rng.uniform();
      pa.emplace_back(CirclePoint(x));
      pb.emplace_back(CirclePoint(y));
      ra.emplace_back(CirclePoint(x + shift));
      rb.emplace_back(CirclePoint(y + shift));
    }
    const auto a = EmpiricalMeasure::uniform_weights(PhaseSpace::circle, pa);
    const auto b = EmpiricalMeasure::uniform_weights(PhaseSpace::circle, pb);
    const auto a2 = EmpiricalMeasure::uniform_weights(PhaseSpace::circle, ra);
    const auto b2 = EmpiricalMeasure::uniform_weights(PhaseSpace::circle, rb);
    CHECK(wasserstein1(a, b) == doctest::Approx(wasserstein1(a2, b2)).epsilon(1e-9));
    CHECK(wasserstein1(a, b) <= 0.5);
  }
}

TEST_CASE("property: markov_push preserves mass for random affine systems") {
  for (std::uint64_t t = 0; t < 50; ++t) {
    auto rng = testgen::rng_for(3200 + t);
    const auto sys = testgen::affine_ifs(rng);
    auto m = EmpiricalMeasure::grid(PhaseSpace::interval, 8);
    m = markov_push(sys, markov_push(sys, m));
    CHECK(m.size() == 8 * sys.size() * sys.size());
    CHECK(m.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("stationary estimate: binary system is Lebesgue, contraction is a Dirac") {
  const auto m = estimate_stationary(gallery::binary_affine(), 1000, 200000, 3);
  CHECK(wasserstein1_to_uniform(m) < 0.01);
  const SystemSpec half({MapSpec::affine(0.5, 0.0)}, {1.0});
  const auto d = estimate_stationary(half, 1000, 1000, 3);
  CHECK(wasserstein1(d, EmpiricalMeasure::dirac(IntervalPoint(0.0))) <= 1e-12);
}

TEST_CASE("stationary estimate is replayable and sharding is thread independent") {
  const auto sys = gallery::anton();
  const auto a = estimate_stationary(sys, 100, 5000, 9);
  const auto b = estimate_stationary(sys, 100, 5000, 9);
  CHECK(a.coordinates() == b.coordinates());
  const auto s1 = estimate_stationary_sharded(sys, 100, 8000, 9, 4, 1);
  const auto s4 = estimate_stationary_sharded(sys, 100, 8000, 9, 4, 4);
  CHECK(s1.coordinates() == s4.coordinates());
}

TEST_CASE("stationary_mean agrees with the mean of the occupation measure") {
  const auto sys = gallery::moebius_pair();
  const auto m = estimate_stationary(sys, 1000, 50000, 17);
  const auto xs = m.coordinates();
  CompensatedSum s;
  for (double x : xs) s.add(x);
  CHECK(stationary_mean(sys, Observable::coordinate(), 50000, 17) ==
        doctest::Approx(s.value() / static_cast<double>(xs.size())).epsilon(1e-12));
}

TEST_CASE("resample keeps equal weights and tracks the source") {
  const auto m = estimate_stationary(gallery::binary_affine(), 100, 20000, 4);
  const auto r = resample(m, 1000, 5);
  CHECK(r.size() == 1000);
  CHECK(r.total_mass() == doctest::Approx(1.0));
  // Resampling error scales like budget^-1/2.
  CHECK(wasserstein1(m, r) < 0.05);
  CHECK(resample(m, 1000, 5).coordinates() == r.coordinates());
}

TEST_CASE("atom diagnostic") {
  const SystemSpec fixed({MapSpec::affine(0.5, 0.0), MapSpec::affine(1.0 / 3.0, 0.0)}, {0.5, 0.5});
  const auto d = atom_diagnostic(fixed, estimate_stationary(fixed, 1000, 5000, 1));
  CHECK(d.verdict == AtomVerdict::dirac_at_common_fixed_point);
  CHECK(d.fixed_point == doctest::Approx(0.0).epsilon(1e-9));

  const auto sys = gallery::binary_affine();
  CHECK(atom_diagnostic(sys, estimate_stationary(sys, 1000, 100000, 2)).verdict ==
        AtomVerdict::nonatomic_consistent);
  CHECK(atom_diagnostic(sys, estimate_stationary(sys, 1000, 10, 2)).verdict ==
        AtomVerdict::inconclusive);
}

TEST_CASE("measure CSV layout") {
  std::ostringstream os;
  write_measure_csv(os, EmpiricalMeasure::dirac(IntervalPoint(0.25)));
  CHECK(os.str() == "point,weight\n0.25,1\n");
  std::ostringstream pj;
  write_measure_csv(pj, EmpiricalMeasure::dirac(ProjectivePoint({0.0, 1.0})));
  CHECK(pj.str().rfind("v0,v1,weight\n", 0) == 0);
}
