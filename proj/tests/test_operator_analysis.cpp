// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "rdsw/error.hpp"
#include "rdsw/gallery.hpp"
#include "rdsw/lyapunov.hpp"
#include "rdsw/operator_analysis.hpp"

using namespace rdsw;

namespace {
// Anton system at k = 2^10; k = 2^9 and 2^11 agree to 1e-5.
constexpr double kAntonGap = 0.2243;
}  // namespace

TEST_CASE("binary Ulam matrix at k = 4") {
  const auto op = build_transfer_ulam(gallery::binary_affine(), 4);
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 4; ++b) {
      const double expected = (b == a / 2 || b == 2 + a / 2) ? 0.5 : 0.0;
      CHECK(op.entry(a, b) == expected);
    }
  }
  CHECK_FALSE(op.quadrature_fallback());
}

TEST_CASE("rotations and the identity give permutation matrices") {
  const auto rot = build_transfer_ulam(SystemSpec({MapSpec::rotation(0.25)}, {1.0}), 4);
  for (std::size_t a = 0; a < 4; ++a) CHECK(rot.entry(a, (a + 1) % 4) == 1.0);
  const auto id = build_transfer_ulam(SystemSpec({MapSpec::affine(1.0, 0.0)}, {1.0}), 8);
  for (std::size_t a = 0; a < 8; ++a) CHECK(id.entry(a, a) == 1.0);
  CHECK(id.nonzeros() == 8);
  CHECK_THROWS_AS(build_transfer_ulam(gallery::binary_affine(), 12), Error);
}

TEST_CASE("row sums are one for every gallery system") {
  for (const char* id : {"binary_affine", "slope_pair", "anton", "two_rotations", "moebius_pair"}) {
    CHECK(build_transfer_ulam(gallery::system(id), 256).row_sum_error() < 1e-12);
    CHECK(build_laplace_markov(gallery::system(id), 64).row_sum_error() < 1e-12);
  }
}

TEST_CASE("leading eigenvectors") {
  const auto bin = leading_eigen(build_transfer_ulam(gallery::binary_affine(), 256));
  CHECK(bin.converged);
  CHECK(bin.eigenvalue == doctest::Approx(1.0).epsilon(1e-12));
  for (double v : bin.vector) CHECK(std::fabs(v * 256.0 - 1.0) < 1e-10);

  const auto rot = leading_eigen(build_transfer_ulam(SystemSpec({MapSpec::rotation(0.25)}, {1.0}), 16));
  for (double v : rot.vector) CHECK(v == doctest::Approx(1.0 / 16.0).epsilon(1e-12));

  const std::size_t k = 128;
  const auto con = leading_eigen(build_transfer_ulam(SystemSpec({MapSpec::affine(0.5, 0.3)}, {1.0}), k));
  auto sorted = con.vector;
  std::sort(sorted.rbegin(), sorted.rend());
  CHECK(sorted[0] + sorted[1] >= 1.0 - 1.0 / static_cast<double>(k));
  // The fixed point 0.6 lies in cell floor(0.6 k).
  const auto top = std::max_element(con.vector.begin(), con.vector.end()) - con.vector.begin();
  CHECK(std::abs(top - static_cast<long>(0.6 * k)) <= 1);
}

TEST_CASE("spectral gaps") {
  const auto perm = spectral_gap(build_transfer_ulam(SystemSpec({MapSpec::rotation(0.25)}, {1.0}), 8), 8);
  for (double m : perm.moduli) CHECK(m == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(perm.gap == doctest::Approx(0.0).epsilon(1e-9));

  const auto anton = spectral_gap(build_transfer_ulam(gallery::anton(), 1024), 4);
  CHECK(anton.dense);
  CHECK(anton.gap > 0.0);
  CHECK(anton.gap == doctest::Approx(kAntonGap).epsilon(0.02 / kAntonGap));
}

TEST_CASE("subspace iteration agrees with the dense solve") {
  const auto op = build_transfer_ulam(gallery::anton(), 4096);
  const auto s = spectral_gap(op, 4);
  CHECK_FALSE(s.dense);
  CHECK(s.gap == doctest::Approx(kAntonGap).epsilon(0.02 / kAntonGap));
}

TEST_CASE("Laplace-Markov operator") {
  const auto bin = gallery::binary_affine();
  const auto op = build_laplace_markov(bin, 64);
  CHECK(op.size() == 128);
  const auto lead = leading_eigen(op);
  for (double v : lead.vector) CHECK(v == doctest::Approx(0.5 / 64.0).epsilon(1e-10));

  const SystemSpec one({MapSpec::rotation(0.25)}, {1.0});
  const auto q = build_laplace_markov(one, 8);
  const auto t = build_transfer_ulam(one, 8);
  for (std::size_t a = 0; a < 8; ++a) {
    for (std::size_t b = 0; b < 8; ++b) CHECK(q.entry(a, b) == t.entry(a, b));
  }
}

TEST_CASE("Q^n identity") {
  const auto bin = gallery::binary_affine();
  const SymbolObservable one{Observable::constant(1.0), {}, {}};
  const auto c = qn_identity_test(bin, one, 0, 0.3, 4, 1000, 1);
  CHECK(c.kernel_value == 1.0);
  CHECK(c.monte_carlo_value == 1.0);
  CHECK(c.pass);

  // Four-word oracle: start f_0(0) = 0, then two more steps, then phi(i_3, x) = x.
  double oracle = 0.0;
  for (int w0 = 0; w0 < 2; ++w0) {
    for (int w1 = 0; w1 < 2; ++w1) {
      const double x = 0.5 * (0.5 * 0.0 + 0.5 * w0) + 0.5 * w1;
      oracle += 0.25 * x;
    }
  }
  const SymbolObservable coord{};
  const auto r = qn_identity_test(bin, coord, 0, 0.0, 3, 20000, 2);
  CHECK(r.kernel_value == doctest::Approx(oracle).epsilon(1e-15));
  CHECK(std::fabs(r.z_score) < 4.0);

  const SymbolObservable mixed{Observable::cos2pi(), {2.0, -1.0}, {0.5, 0.0}};
  const auto anton2 = gallery::moebius_pair();
  const auto base = qn_identity_test(anton2, mixed, 1, 0.4, 1, 100, 3);
  const double y = anton2.map(1).apply(0.4);
  CHECK(base.kernel_value == doctest::Approx(0.5 * mixed(0, y) + 0.5 * mixed(1, y)).epsilon(1e-14));
}

TEST_CASE("Hoelder norms") {
  const SymbolObservable c{Observable::constant(3.0), {}, {}};
  CHECK(holder_norm(c, 2, 1.0, 256).seminorm_alpha == 0.0);
  const SymbolObservable cosine{Observable::cos2pi(), {}, {}};
  const auto h = holder_norm(cosine, 1, 1.0, 1024);
  CHECK(h.seminorm_alpha >= 6.0);
  CHECK(h.seminorm_alpha <= 2.0 * std::numbers::pi);
  // The coordinate jumps across 0, so its grid seminorm grows with k.
  const SymbolObservable coord{};
  CHECK(holder_norm(coord, 1, 1.0, 512).seminorm_alpha > 100.0);
}

TEST_CASE("operator Lyapunov exponent and bi-Lipschitz bound") {
  const auto bin = gallery::binary_affine();
  const auto op = build_transfer_ulam(bin, 256);
  CHECK(ulam_gamma(bin, op, leading_eigen(op).vector) ==
        doctest::Approx(-std::numbers::ln2).epsilon(1e-12));
  CHECK(bi_lipschitz_bound(bin).L == 2.0);
  CHECK(bi_lipschitz_bound(gallery::anton()).L == doctest::Approx(1.0 / 0.4).epsilon(1e-6));
}

TEST_CASE("decay profile shrinks geometrically for the Anton system") {
  const auto op = build_transfer_ulam(gallery::anton(), 512);
  const auto pi = leading_eigen(op).vector;
  std::vector<double> f(512);
  for (std::size_t a = 0; a < 512; ++a) f[a] = std::cos(2.0 * std::numbers::pi * (a + 0.5) / 512.0);
  const auto d = decay_profile(op, pi, f, 60);
  CHECK(d[60] < 1e-3 * d[0]);
}

TEST_CASE("coordinate-list export") {
  std::ostringstream os;
  write_coo(os, build_transfer_ulam(SystemSpec({MapSpec::rotation(0.5)}, {1.0}), 2));
  CHECK(os.str() == "row,col,value\n0,1,1\n1,0,1\n");
}
