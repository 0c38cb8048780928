// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "generators.hpp"
#include "rdsw/error.hpp"
#include "rdsw/gallery.hpp"
#include "rdsw/lyapunov.hpp"

using namespace rdsw;

namespace {

const double kLog2 = std::numbers::ln2;

// For the slope pair the word exponent is -(2n - k) log 2 / n with k the count
// of symbol 0, so P(|exponent - gamma| > eps) is a Binomial(n, 1/2) tail.
double slope_pair_tail(int n, double eps) {
  const double gamma = -1.5 * kLog2;
  double p = 0.0, binom = 1.0;
  for (int k = 0; k <= n; ++k) {
    if (k > 0) binom = binom * (n - k + 1) / k;
    if (std::fabs(-(2.0 * n - k) * kLog2 / n - gamma) > eps) p += std::ldexp(binom, -n);
  }
  return p;
}

}  // namespace

TEST_CASE("gamma closed forms") {
  const auto b = estimate_gamma(gallery::binary_affine(), 1000, 30, 0.3, 1);
  CHECK(b.gamma == -kLog2);
  CHECK(b.stderr_ == 0.0);
  CHECK(estimate_gamma(gallery::two_rotations(), 1000, 30, 0.3, 1).gamma == 0.0);
  const auto s = estimate_gamma(gallery::slope_pair(), 20000, 30, 0.3, 1, 2);
  CHECK(s.gamma == doctest::Approx(-1.5 * kLog2).epsilon(0.01));
  CHECK(s.consistent);
  CHECK_THROWS_AS(estimate_gamma(gallery::binary_affine(), 100, 29, 0.3, 1), Error);
}

TEST_CASE("gamma for random affine systems matches sum p_i log a_i") {
  for (std::uint64_t t = 0; t < 10; ++t) {
    auto rng = testgen::rng_for(5000 + t);
    const auto sys = testgen::affine_ifs(rng);
    double oracle = 0.0;
    for (std::size_t i = 0; i < sys.size(); ++i) {
      oracle += sys.probs()[i] * std::log(sys.map(i).derivative(0.5));
    }
    const auto g = estimate_gamma(sys, 5000, 30, 0.5, t);
    CHECK(g.gamma == doctest::Approx(oracle).epsilon(0.02));
    CHECK(g.one_step == doctest::Approx(oracle).epsilon(1e-9));
  }
}

TEST_CASE("LD exact enumeration equals the binomial tail bit for bit") {
  const auto sys = gallery::slope_pair();
  const double gamma = -1.5 * kLog2;
  const double eps = 0.2 * kLog2;
  const auto c = ld_curve(sys, 0.3, gamma, {eps}, {16}, 1);
  CHECK(c.exact[0]);
  CHECK(c.probs[0][0] == slope_pair_tail(16, eps));
  const auto grid = default_epsilons(gamma);
  const auto all = ld_curve(sys, 0.3, gamma, grid, {8, 12, 16}, 1);
  for (std::size_t e = 0; e < grid.size(); ++e) {
    for (std::size_t h = 0; h < 3; ++h) {
      CHECK(all.probs[e][h] == doctest::Approx(slope_pair_tail(static_cast<int>(all.horizons[h]), grid[e])).epsilon(1e-13));
    }
  }
}

TEST_CASE("LD Monte Carlo path covers the exact value and replays") {
  const auto sys = gallery::slope_pair();
  const double gamma = -1.5 * kLog2;
  LDOptions mc;
  mc.force_monte_carlo = true;
  mc.replicas = 20000;
  const auto a = ld_curve(sys, 0.3, gamma, {0.1, 0.3}, {12}, 7, mc);
  CHECK_FALSE(a.exact[0]);
  for (std::size_t e = 0; e < 2; ++e) {
    const double truth = slope_pair_tail(12, a.epsilons[e]);
    CHECK(a.ci_low[e][0] <= truth);
    CHECK(truth <= a.ci_high[e][0]);
  }
  mc.threads = 4;
  const auto b = ld_curve(sys, 0.3, gamma, {0.1, 0.3}, {12}, 7, mc);
  CHECK(a.probs == b.probs);
}

TEST_CASE("degenerate LD curves vanish") {
  const auto bin = ld_curve(gallery::binary_affine(), 0.3, -kLog2, default_epsilons(-kLog2), {8, 16}, 1);
  for (const auto& row : bin.probs) {
    for (double p : row) CHECK(p == 0.0);
  }
  const auto rot = ld_curve(gallery::two_rotations(), 0.3, 0.0, default_epsilons(0.0), {8}, 1);
  for (const auto& row : rot.probs) CHECK(row[0] == 0.0);
  const auto sync = sync_ld_curve(gallery::binary_affine(), IntervalPoint(0.1), IntervalPoint(0.9),
                                  -kLog2, {0.01}, {10, 20}, 1);
  CHECK(sync.probs[0][0] == 0.0);
  CHECK(sync.mean_log_ratio[1] == doctest::Approx(-kLog2).epsilon(1e-12));
  CHECK_THROWS_AS(sync_ld_curve(gallery::binary_affine(), IntervalPoint(0.1), IntervalPoint(0.1),
                                -kLog2, {0.01}, {10}, 1),
                  Error);
}

TEST_CASE("affine chain rule: sync and derivative curves agree exactly") {
  const auto sys = gallery::slope_pair();
  const double gamma = -1.5 * kLog2;
  const auto eps = default_epsilons(gamma);
  const auto a = ld_curve(sys, 0.5, gamma, eps, {10, 14}, 3);
  const auto b = sync_ld_curve(sys, IntervalPoint(0.05), IntervalPoint(0.95), gamma, eps, {10, 14}, 3);
  CHECK(a.probs == b.probs);
}

TEST_CASE("rate fit recovers a synthetic quadratic rate") {
  LDCurve c;
  c.epsilons = {0.1, 0.2, 0.3, 0.4};
  c.horizons = {10, 20, 40};
  c.usable.assign(3, true);
  c.exact.assign(3, true);
  const double h = 2.5;
  for (double e : c.epsilons) {
    std::vector<double> row;
    for (auto n : c.horizons) row.push_back(0.3 * std::exp(-static_cast<double>(n) * h * e * e));
    c.probs.push_back(row);
  }
  fit_ld_rates(c);
  CHECK(c.h_hat == doctest::Approx(h).epsilon(1e-9));
  CHECK(c.r2 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(c.rate_points == 4);
}

TEST_CASE("default epsilon grid") {
  const auto g = default_epsilons(-2.0);
  REQUIRE(g.size() == 10);
  CHECK(g.front() == doctest::Approx(0.1));
  CHECK(g.back() == doctest::Approx(1.0));
  CHECK(default_epsilons(0.0).back() == doctest::Approx(0.5));
}

TEST_CASE("distortion") {
  const std::vector<double> ladder{1e-4, 1e-3, 1e-2, 1e-1};
  for (const char* id : {"binary_affine", "slope_pair", "two_rotations"}) {
    const auto r = distortion_report(gallery::system(id), 0.2, 0.7, 200, 16, ladder, 1);
    for (double v : r.max_max_ratio) CHECK(v == 1.0);
    for (double w : r.omega) CHECK(w == 0.0);
    CHECK(r.tempered);
  }
  const auto m = distortion_report(gallery::moebius_pair(), 0.1, 0.6, 1000, 32, ladder, 2, 2);
  CHECK(m.tempered);
  for (std::size_t i = 1; i < m.omega.size(); ++i) CHECK(m.omega[i] >= m.omega[i - 1]);
  CHECK(m.omega.front() < 0.01 * m.omega.back());
}

TEST_CASE("modulus of continuity agrees with a finer grid") {
  const auto sys = gallery::moebius_pair();
  for (double d : {1e-3, 1e-2, 1e-1}) {
    CHECK(modulus_of_continuity(sys, d, 4096) ==
          doctest::Approx(modulus_of_continuity(sys, d, 8192)).epsilon(0.01));
  }
}
