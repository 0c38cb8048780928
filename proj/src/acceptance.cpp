// SPDX-License-Identifier: Apache-2.0
#include "rdsw/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rdsw/cocycles.hpp"
#include "rdsw/error.hpp"
#include "rdsw/gallery.hpp"
#include "rdsw/io.hpp"
#include "rdsw/limit_laws.hpp"
#include "rdsw/lyapunov.hpp"
#include "rdsw/measures.hpp"
#include "rdsw/numerics.hpp"
#include "rdsw/operator_analysis.hpp"
#include "rdsw/synchronization.hpp"

namespace rdsw::acceptance {

namespace {

const double kLog2 = std::numbers::ln2;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double v) { return format_real(v); }

std::string short_num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

/// Appends "; " between detail fragments.
void note(std::string& detail, const std::string& text) {
  if (!detail.empty()) detail += "; ";
  detail += text;
}

// 1. Stationary measure of the binary affine system.
CaseResult stationary_case(int) {
  CaseResult r;
  r.title = "stationary measure: binary_affine W1 to Lebesgue <= 0.01, < 10 s per seed";
  const auto sys = gallery::binary_affine();
  CsvTable t({"seed", "w1_to_uniform"});
  bool ok = true;
  double worst = 0.0, slowest = 0.0;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    Stopwatch sw;
    const auto m = estimate_stationary(sys, 1000, 1000000, seed);
    const double w = wasserstein1_to_uniform(m);
    const double secs = sw.seconds();
    t.add(seed, w);
    worst = std::max(worst, w);
    slowest = std::max(slowest, secs);
    ok = ok && w <= 0.01 && secs < 10.0;
  }
  r.pass = ok;
  r.detail = "max W1 " + short_num(worst) + ", slowest seed " + short_num(slowest) + " s";
  r.files["w1.csv"] = t.str();
  return r;
}

// 2. Exponential synchronization at rate -log 2 on every word.
CaseResult sync_rate_case(int) {
  CaseResult r;
  r.title = "exponential synchronization: binary_affine rate -log 2 +- 1e-9, r2 = 1";
  Stopwatch sw;
  const auto sys = gallery::binary_affine();
  CsvTable t({"seed", "rate", "r2", "used"});
  bool ok = true;
  double worst = 0.0, worst_r2 = 1.0;
  for (std::uint64_t seed = 1; seed <= 32; ++seed) {
    WordStream word(seed, streams::kReplica, sys.probs());
    const auto trace = paired_orbit(sys, IntervalPoint(0.1), IntervalPoint(0.9), word, 40);
    const auto fit = fit_sync_rate(trace);
    t.add(seed, fit.rate, fit.r2, fit.used);
    worst = std::max(worst, std::fabs(fit.rate + kLog2));
    worst_r2 = std::min(worst_r2, fit.r2);
    ok = ok && std::fabs(fit.rate + kLog2) <= 1e-9 && fit.r2 >= 1.0 - 1e-12;
  }
  const double secs = sw.seconds();
  r.pass = ok && secs < 1.0;
  r.detail = "max |rate + log 2| " + short_num(worst) + ", min r2 " + num(worst_r2) + ", " +
             short_num(secs) + " s";
  r.files["rates.csv"] = t.str();
  return r;
}

// 3. Non-proximal pairs of the Anton system.
CaseResult anton_case(int threads) {
  CaseResult r;
  r.title = "non-proximality: anton pairs stay >= 3/8 over 1e4 steps x 32 seeds";
  Stopwatch sw;
  const auto sys = gallery::anton();
  StreamRng rng(2024, streams::kPairs);
  std::vector<std::pair<PhasePoint, PhasePoint>> pairs;
  for (int p = 0; p < 16; ++p) {
    const double x = 0.25 + rng.uniform() * 0.125;
    const double y = 0.75 + rng.uniform() * 0.125;
    pairs.emplace_back(CirclePoint(x), CirclePoint(y));
  }
  std::vector<double> mins(pairs.size() * 32);
  parallel_for(mins.size(), threads, [&](std::size_t idx) {
    const auto& [x, y] = pairs[idx / 32];
    WordStream word(idx % 32 + 1, streams::kReplica, sys.probs());
    const auto trace = paired_orbit(sys, x, y, word, 10000);
    mins[idx] = *std::min_element(trace.distances.begin(), trace.distances.end());
  });
  CsvTable t({"pair", "x", "y", "seed", "min_distance"});
  double overall = INFINITY;
  for (std::size_t idx = 0; idx < mins.size(); ++idx) {
    const auto& [x, y] = pairs[idx / 32];
    t.add(idx / 32, std::get<CirclePoint>(x).coordinate(), std::get<CirclePoint>(y).coordinate(),
          idx % 32 + 1, mins[idx]);
    overall = std::min(overall, mins[idx]);
  }
  const double secs = sw.seconds();
  r.pass = overall >= 0.375 && secs < 5.0;
  r.detail = "min distance " + num(overall) + ", " + short_num(secs) + " s";
  r.files["min_distances.csv"] = t.str();
  return r;
}

// 4. Synchronization on average.
CaseResult average_case(int threads) {
  CaseResult r;
  r.title = "sync on average: binary_affine sums -> 2 d(x,y) within 2%; anton grows >= 3/8 per step";
  const auto affine = average_sync_sum(gallery::binary_affine(), IntervalPoint(0.2),
                                       IntervalPoint(0.7), 1.0, 60, 10000, 7, threads);
  const double target = 2.0 * 0.5;
  const double rel = std::fabs(affine.partial_sums.back() - target) / target;
  const auto anton = average_sync_sum(gallery::anton(), CirclePoint(0.3), CirclePoint(0.8), 1.0,
                                      1000, 100, 7, threads);
  double min_inc = INFINITY;
  for (std::size_t m = 1; m < anton.partial_sums.size(); ++m) {
    min_inc = std::min(min_inc, anton.partial_sums[m] - anton.partial_sums[m - 1]);
  }
  min_inc = std::min(min_inc, anton.partial_sums.front());
  r.pass = rel <= 0.02 && affine.bounded && min_inc >= 0.375 && !anton.bounded;
  r.detail = "affine sum " + num(affine.partial_sums.back()) + " (rel err " + short_num(rel) +
             "), anton min increment " + short_num(min_inc) +
             (anton.bounded ? ", flagged bounded" : ", flagged unbounded");
  CsvTable a({"m", "partial_sum"});
  for (std::size_t m = 0; m < affine.partial_sums.size(); ++m) a.add(m, affine.partial_sums[m]);
  CsvTable b({"m", "partial_sum"});
  for (std::size_t m = 0; m < anton.partial_sums.size(); ++m) b.add(m, anton.partial_sums[m]);
  r.files["affine_sums.csv"] = a.str();
  r.files["anton_sums.csv"] = b.str();
  return r;
}

// 5. sigma^2 and the quenched CLT.
CaseResult clt_case(int threads) {
  CaseResult r;
  r.title = "sigma^2 = 0.25 +- 0.025 and CLT KS pass for x0 in {0, 0.25, 0.97}, < 60 s";
  Stopwatch sw;
  const auto sys = gallery::binary_affine();
  const auto h = Observable::coordinate();
  const auto est = estimate_sigma2(sys, h, 10000, 10000, 11, threads);
  bool ok = std::fabs(est.sigma2 - 0.25) <= 0.025;
  CsvTable t({"x0", "ks_stat", "threshold", "pass"});
  std::string ks;
  for (double x0 : {0.0, 0.25, 0.97}) {
    const auto clt = clt_test(sys, h, x0, 10000, 10000, 12, threads, est.nu_hat, est.sigma2);
    t.add(x0, clt.ks_stat, clt.threshold, clt.pass);
    ok = ok && clt.pass;
    ks += (ks.empty() ? "" : "/") + short_num(clt.ks_stat);
  }
  const double secs = sw.seconds();
  r.pass = ok && secs < 60.0;
  r.detail = "sigma2 " + short_num(est.sigma2) + " +- " + short_num(est.stderr_) +
             " (batch means " + short_num(est.batch_sigma2) + "), KS " + ks + " vs " +
             short_num(1.63 / 100.0 + 0.01) + ", " + short_num(secs) + " s";
  CsvTable s({"nu_hat", "sigma2", "stderr", "batch_sigma2", "batch_stderr", "disagreement"});
  s.add(est.nu_hat, est.sigma2, est.stderr_, est.batch_sigma2, est.batch_stderr, est.disagreement);
  r.files["sigma2.csv"] = s.str();
  r.files["clt.csv"] = t.str();
  return r;
}

// 6. SLLN.
CaseResult slln_case(int) {
  CaseResult r;
  r.title = "SLLN: binary_affine |S_n/n - 0.5| < 0.005 at n = 1e6 for 8 seeds";
  const auto sys = gallery::binary_affine();
  CsvTable t({"seed", "n", "average", "gap_to_nu_hat"});
  bool ok = true;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto rep = slln_check(sys, Observable::coordinate(), 0.5, 1000000, seed, seed + 1000);
    for (const auto& p : rep.points) t.add(seed, p.n, p.average, p.gap);
    const double dev = std::fabs(rep.points.back().average - 0.5);
    worst = std::max(worst, dev);
    ok = ok && dev < 0.005;
  }
  r.pass = ok;
  r.detail = "max |S_n/n - 0.5| " + short_num(worst);
  r.files["slln.csv"] = t.str();
  return r;
}

// 7. LIL smoke test.
CaseResult lil_case(int threads) {
  CaseResult r;
  r.title = "LIL smoke test: median normalized running max in [0.5, 1.5]";
  const auto sys = gallery::binary_affine();
  const auto rep = lil_statistic(sys, Observable::coordinate(), 0.0, 1000000, 256, 21, threads);
  const auto control = lil_statistic(sys, Observable::symbol(), 0.0, 1000000, 64, 22, threads,
                                     0.5, 0.25);
  r.pass = rep.pass;
  r.detail = "median " + short_num(rep.median) + " (Bernoulli control median " +
             short_num(control.median) + ")";
  CsvTable t({"replica", "statistic"});
  for (std::size_t i = 0; i < rep.statistics.size(); ++i) t.add(i, rep.statistics[i]);
  CsvTable c({"replica", "statistic"});
  for (std::size_t i = 0; i < control.statistics.size(); ++i) c.add(i, control.statistics[i]);
  r.files["lil.csv"] = t.str();
  r.files["lil_bernoulli_control.csv"] = c.str();
  return r;
}

// 8. Lyapunov exponents.
CaseResult gamma_case(int threads) {
  CaseResult r;
  r.title = "Lyapunov: binary_affine -log 2 to 1e-12; slope_pair -1.5 log 2 +- 0.01";
  const auto a = estimate_gamma(gallery::binary_affine(), 1000, 30, 0.3, 31, threads);
  const auto b = estimate_gamma(gallery::slope_pair(), 100000, 30, 0.3, 32, threads);
  const double ea = std::fabs(a.gamma + kLog2);
  const double eb = std::fabs(b.gamma + 1.5 * kLog2);
  r.pass = ea <= 1e-12 && eb <= 0.01;
  r.detail = "binary_affine err " + short_num(ea) + ", slope_pair " + short_num(b.gamma) +
             " (err " + short_num(eb) + ", one-step " + short_num(b.one_step) + ")";
  CsvTable t({"system", "gamma", "stderr", "one_step", "one_step_stderr", "consistent"});
  t.add(std::string("binary_affine"), a.gamma, a.stderr_, a.one_step, a.one_step_stderr,
        a.consistent);
  t.add(std::string("slope_pair"), b.gamma, b.stderr_, b.one_step, b.one_step_stderr,
        b.consistent);
  r.files["gamma.csv"] = t.str();
  return r;
}

std::string ld_table(const LDCurve& c) {
  CsvTable t({"epsilon", "n", "prob", "ci_low", "ci_high", "exact", "fitted_rate"});
  for (std::size_t e = 0; e < c.epsilons.size(); ++e) {
    for (std::size_t h = 0; h < c.horizons.size(); ++h) {
      t.add(c.epsilons[e], c.horizons[h], c.probs[e][h], c.ci_low[e][h], c.ci_high[e][h],
            static_cast<bool>(c.exact[h]), c.fitted_rates[e]);
    }
  }
  return t.str();
}

double slope_pair_gamma(int threads) {
  return estimate_gamma(gallery::slope_pair(), 100000, 30, 0.3, 32, threads).gamma;
}

// 9. Large deviations: exact/Monte Carlo handoff and the epsilon^2 shape.
CaseResult ld_case(int threads) {
  CaseResult r;
  r.title = "large deviations: MC inside 99% Wilson of exact at n = 16; h_hat > 0 with r2 > 0.9";
  const auto sys = gallery::slope_pair();
  const double gamma = slope_pair_gamma(threads);
  const auto eps = default_epsilons(gamma);
  LDOptions exact_opts;
  exact_opts.threads = threads;
  LDOptions mc_opts = exact_opts;
  mc_opts.force_monte_carlo = true;
  mc_opts.replicas = 100000;
  const auto ex = ld_curve(sys, 0.3, gamma, eps, {16}, 41, exact_opts);
  const auto mc = ld_curve(sys, 0.3, gamma, eps, {16}, 41, mc_opts);
  // Binomial oracle: the word log-derivative is -(2n - k) log 2 with k the count of symbol 0.
  bool handoff = true, oracle = true;
  std::size_t outside = 0;
  for (std::size_t e = 0; e < eps.size(); ++e) {
    double p = 0.0;
    double binom = 1.0;
    for (int k = 0; k <= 16; ++k) {
      if (k > 0) binom = binom * (16 - k + 1) / k;
      const double dev = std::fabs(-(32.0 - k) * kLog2 / 16.0 - gamma);
      if (dev > eps[e]) p += binom / 65536.0;
    }
    oracle = oracle && std::fabs(p - ex.probs[e][0]) <= 1e-12;
    const bool inside = ex.probs[e][0] >= mc.ci_low[e][0] && ex.probs[e][0] <= mc.ci_high[e][0];
    handoff = handoff && inside;
    outside += !inside;
  }
  LDOptions full = exact_opts;
  full.replicas = 100000;
  const auto curve = ld_curve(sys, 0.3, gamma, eps, {8, 12, 16, 20, 24}, 42, full);
  r.pass = handoff && oracle && curve.h_hat > 0.0 && curve.r2 > 0.9;
  r.detail = std::string("handoff ") + (handoff ? "ok" : std::to_string(outside) + " outside") +
             ", binomial oracle " + (oracle ? "agrees" : "MISMATCH") + ", h_hat " +
             short_num(curve.h_hat) + ", r2 " + short_num(curve.r2) + " over " +
             std::to_string(curve.rate_points) + " epsilons";
  r.files["ld_exact_n16.csv"] = ld_table(ex);
  r.files["ld_mc_n16.csv"] = ld_table(mc);
  r.files["ld_curve.csv"] = ld_table(curve);
  return r;
}

// 10. Sync-rate LD identity for an affine system.
CaseResult sync_ld_case(int threads) {
  CaseResult r;
  r.title = "sync LD identity: slope_pair sync_ld_curve table bit-identical to ld_curve";
  const auto sys = gallery::slope_pair();
  const double gamma = slope_pair_gamma(threads);
  const auto eps = default_epsilons(gamma);
  LDOptions opts;
  opts.threads = threads;
  opts.replicas = 100000;
  const std::vector<std::size_t> horizons{8, 12, 16, 20, 24};
  const auto a = ld_curve(sys, 0.3, gamma, eps, horizons, 51, opts);
  const auto b = sync_ld_curve(sys, IntervalPoint(0.2), IntervalPoint(0.6), gamma, eps, horizons,
                               51, opts);
  std::size_t diff = 0;
  for (std::size_t e = 0; e < eps.size(); ++e) {
    for (std::size_t h = 0; h < horizons.size(); ++h) diff += a.probs[e][h] != b.probs[e][h];
  }
  r.pass = diff == 0;
  r.detail = std::to_string(diff) + " differing cells of " +
             std::to_string(eps.size() * horizons.size());
  r.files["ld.csv"] = ld_table(a);
  r.files["sync_ld.csv"] = ld_table(b);
  return r;
}

// 11. Distortion.
CaseResult distortion_case(int threads) {
  CaseResult r;
  r.title = "distortion: affine ratios exactly 1; moebius_pair tempered at n = 1e3";
  const std::vector<double> ladder{1e-4, 1e-3, 1e-2, 1e-1};
  bool affine_ok = true;
  CsvTable t({"system", "n", "mean_max_ratio", "max_max_ratio"});
  for (const char* id : {"binary_affine", "slope_pair"}) {
    const auto rep = distortion_report(gallery::system(id), 0.2, 0.7, 1000, 64, ladder, 61, threads);
    for (std::size_t c = 0; c < rep.checkpoints.size(); ++c) {
      t.add(std::string(id), rep.checkpoints[c], rep.mean_max_ratio[c], rep.max_max_ratio[c]);
      affine_ok = affine_ok && rep.max_max_ratio[c] == 1.0 && rep.mean_max_ratio[c] == 1.0;
    }
  }
  const auto smooth =
      distortion_report(gallery::moebius_pair(), 0.1, 0.6, 1000, 64, ladder, 62, threads);
  for (std::size_t c = 0; c < smooth.checkpoints.size(); ++c) {
    t.add(std::string("moebius_pair"), smooth.checkpoints[c], smooth.mean_max_ratio[c],
          smooth.max_max_ratio[c]);
  }
  CsvTable w({"delta", "omega"});
  for (std::size_t i = 0; i < smooth.deltas.size(); ++i) w.add(smooth.deltas[i], smooth.omega[i]);
  r.pass = affine_ok && smooth.tempered;
  r.detail = std::string("affine ratios ") + (affine_ok ? "all 1" : "NOT all 1") +
             ", moebius_pair statistic " + short_num(smooth.tempered_statistic);
  r.files["ratios.csv"] = t.str();
  r.files["omega.csv"] = w.str();
  return r;
}

// 12. Cocycles.
CaseResult cocycle_case(int threads) {
  CaseResult r;
  r.title = "cocycles: single-matrix spectra and sum rule within 1e-6; diag_rot LC fraction >= 0.9";
  CsvTable t({"cocycle", "chi", "expected"});
  double worst = 0.0, worst_sum = 0.0;
  const std::vector<std::pair<std::string, Matrix>> singles{
      {"diag", Matrix(2, 2, {2.0, 0.0, 0.0, 0.5})},
      {"upper", Matrix(2, 2, {2.0, 1.0, 0.0, 0.5})}};
  for (const auto& [name, m] : singles) {
    const CocycleSpec c({m}, {1.0}, name);
    const auto est = estimate_spectrum(c, 10000, 1, 71, threads);
    const double expected[2] = {-kLog2, kLog2};
    for (int j = 0; j < 2; ++j) {
      t.add(name, est.chis[static_cast<std::size_t>(j)], expected[j]);
      worst = std::max(worst, std::fabs(est.chis[static_cast<std::size_t>(j)] - expected[j]));
    }
    worst_sum = std::max(worst_sum, std::fabs(est.chis[0] + est.chis[1] - c.mean_log_det()));
  }
  const auto lc = verify_lc_rate(gallery::diag_rot(), ProjectivePoint({1.0, 0.0}), 1e-3, 200, 1000,
                                 72, threads);
  r.pass = worst <= 1e-6 && worst_sum <= 1e-6 && lc.fraction >= 0.9;
  r.detail = "max spectrum err " + short_num(worst) + ", sum rule err " + short_num(worst_sum) +
             ", diag_rot fraction " + short_num(lc.fraction) + " at q " + short_num(lc.q_target) +
             " (chi_top " + short_num(lc.spectrum.chis.back()) + ")";
  CsvTable l({"chi_top", "gap", "q_lc", "q_target", "fraction", "stderr"});
  l.add(lc.spectrum.chis.back(), lc.spectrum.gap_top, lc.q_lc, lc.q_target, lc.fraction, lc.stderr_);
  r.files["spectra.csv"] = t.str();
  r.files["lc.csv"] = l.str();
  return r;
}

// 13. Ulam operators.
CaseResult ulam_case(int threads) {
  CaseResult r;
  r.title = "Ulam: uniform eigenvector, |lambda2| in [0.45, 0.55], Q^n battery, gamma cross-check";
  const auto sys = gallery::binary_affine();
  const auto op = build_transfer_ulam(sys, 256, threads);
  const auto lead = leading_eigen(op);
  double dev = 0.0;
  for (double v : lead.vector) dev = std::max(dev, std::fabs(v * 256.0 - 1.0));
  const auto spec = spectral_gap(op, 4);
  const bool lambda_ok = spec.moduli[1] >= 0.45 && spec.moduli[1] <= 0.55;

  struct QCase {
    const char* system;
    SymbolObservable phi;
    int j;
    double x;
    std::size_t n;
  };
  SymbolObservable coord;
  SymbolObservable cosine{Observable::cos2pi(), {}, {}};
  SymbolObservable mixed{Observable::coordinate(), {1.0, -2.0, 0.5}, {0.0, 1.0, -1.0}};
  SymbolObservable one{Observable::constant(1.0), {}, {}};
  const std::vector<QCase> battery{
      {"binary_affine", one, 0, 0.3, 4},        {"binary_affine", coord, 0, 0.0, 3},
      {"binary_affine", coord, 1, 0.7, 1},      {"binary_affine", mixed, 1, 0.2, 6},
      {"slope_pair", coord, 0, 0.9, 5},         {"slope_pair", cosine, 1, 0.4, 8},
      {"anton", cosine, 2, 0.3, 5},             {"anton", mixed, 0, 0.8, 7},
      {"moebius_pair", cosine, 0, 0.15, 6},     {"moebius_pair", coord, 1, 0.6, 10},
      {"two_rotations", cosine, 1, 0.05, 9},    {"two_rotations", mixed, 0, 0.5, 12}};
  CsvTable q({"case", "system", "j", "x", "n", "kernel", "monte_carlo", "z"});
  bool qn_ok = true;
  double worst_z = 0.0;
  for (std::size_t i = 0; i < battery.size(); ++i) {
    const auto& c = battery[i];
    const auto res = qn_identity_test(gallery::system(c.system), c.phi, c.j, c.x, c.n, 20000,
                                      81 + i, threads);
    q.add(i, std::string(c.system), c.j, c.x, c.n, res.kernel_value, res.monte_carlo_value,
          res.z_score);
    qn_ok = qn_ok && res.pass;
    worst_z = std::max(worst_z, std::fabs(res.z_score));
  }

  CsvTable g({"system", "ulam_gamma", "estimate_gamma", "difference"});
  bool gamma_ok = true;
  double worst_g = 0.0;
  for (const char* id : {"binary_affine", "slope_pair", "moebius_pair", "anton"}) {
    const auto s = gallery::system(id);
    const auto big = build_transfer_ulam(s, 4096, threads);
    const auto ev = leading_eigen(big, 1e-12);
    const double ug = ulam_gamma(s, big, ev.vector);
    const double eg = estimate_gamma(s, 20000, 30, 0.3, 91, threads).gamma;
    g.add(std::string(id), ug, eg, ug - eg);
    worst_g = std::max(worst_g, std::fabs(ug - eg));
    gamma_ok = gamma_ok && std::fabs(ug - eg) <= 0.01;
  }
  r.pass = dev <= 1e-10 && lambda_ok && qn_ok && gamma_ok;
  r.detail = "eigvec dev " + short_num(dev) + ", |lambda2| " + short_num(spec.moduli[1]) +
             (lambda_ok ? "" : " (outside [0.45, 0.55])") + ", max |z| " + short_num(worst_z) +
             ", max gamma diff " + short_num(worst_g);
  CsvTable s({"index", "re", "im", "modulus"});
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    s.add(i, spec.values[i].real(), spec.values[i].imag(), spec.moduli[i]);
  }
  r.files["spectrum.csv"] = s.str();
  r.files["qn_battery.csv"] = q.str();
  r.files["gamma_crosscheck.csv"] = g.str();
  return r;
}

using CaseFn = CaseResult (*)(int);
constexpr CaseFn kCases[] = {stationary_case, sync_rate_case, anton_case,   average_case,
                             clt_case,        slln_case,      lil_case,     gamma_case,
                             ld_case,         sync_ld_case,   distortion_case, cocycle_case,
                             ulam_case};

}  // namespace

std::string digest(const CaseResult& r) {
  std::string all;
  for (const auto& [name, bytes] : r.files) {
    all += name;
    all.push_back('\0');
    all += bytes;
    all.push_back('\0');
  }
  return hex64(fnv1a64(all));
}

CaseResult Battery::run_uncached(int id, int threads) {
  Stopwatch sw;
  CaseResult r;
  try {
    r = kCases[id - 1](threads);
  } catch (const Error& e) {
    r.pass = false;
    r.detail = std::string("error[") + to_string(e.kind()) + "]: " + e.what();
  }
  r.id = id;
  r.seconds = sw.seconds();
  return r;
}

CaseResult Battery::run(int id) {
  require(id >= 1 && id <= kCaseCount, ErrorKind::invalid_argument,
          "acceptance case id must be 1.." + std::to_string(kCaseCount));
  if (id < kCaseCount) {
    if (threads_ == 1) {
      auto it = cache_.find(id);
      if (it != cache_.end()) return it->second;
      return cache_[id] = run_uncached(id, 1);
    }
    return run_uncached(id, threads_);
  }

  Stopwatch sw;
  CaseResult r;
  r.id = kCaseCount;
  r.title = "determinism: outputs identical across threads {1, 8} and reruns";
  bool ok = true;
  std::vector<int> mismatched;
  CsvTable t({"case", "digest_threads_1", "digest_threads_8", "equal"});
  for (int c = 1; c < kCaseCount; ++c) {
    CaseResult one;
    if (auto it = cache_.find(c); it != cache_.end()) {
      one = it->second;
    } else {
      one = cache_[c] = run_uncached(c, 1);
    }
    const CaseResult eight = run_uncached(c, 8);
    const std::string d1 = digest(one), d8 = digest(eight);
    const bool same = d1 == d8 && !one.files.empty();
    t.add(c, d1, d8, same);
    if (!same) mismatched.push_back(c);
    ok = ok && same;
  }
  r.detail = mismatched.empty() ? "13 cases identical at threads 1 and 8"
                                : std::to_string(mismatched.size()) + " cases differ";
  if (probe_) {
    std::string extra;
    ok = probe_(extra) && ok;
    note(r.detail, extra);
  }
  r.pass = ok;
  r.files["digests.csv"] = t.str();
  r.seconds = sw.seconds();
  return r;
}

std::string format_line(const CaseResult& r) {
  char head[32];
  std::snprintf(head, sizeof head, "criterion %02d: %s", r.id, r.pass ? "PASS" : "FAIL");
  std::ostringstream os;
  os << head << "  " << r.title << "  (" << r.detail << ")";
  return os.str();
}

}  // namespace rdsw::acceptance
