// SPDX-License-Identifier: Apache-2.0
#include "rdsw/lyapunov.hpp"

#include <algorithm>
#include <cmath>

#include "rdsw/error.hpp"
#include "rdsw/numerics.hpp"
#include "rdsw/pair_tracker.hpp"
#include "rdsw/parallel.hpp"
#include "rdsw/rng.hpp"

namespace rdsw {

namespace {

void require_scalar_derivatives(const SystemSpec& sys) {
  require(sys.space() != PhaseSpace::projective, ErrorKind::unsupported,
          "derivative exponents are implemented for circle and interval systems");
  require(sys.has_derivative(), ErrorKind::unsupported,
          "system '" + sys.name() + "' has a map without derivative data");
}

bool word_count_at_most(std::size_t symbols, std::size_t n, std::uint64_t limit) {
  std::uint64_t total = 1;
  for (std::size_t k = 0; k < n; ++k) {
    if (total > limit / symbols) return false;
    total *= symbols;
  }
  return total <= limit;
}

struct DerivState {
  double x = 0.0;
  CompensatedSum log_sum;
};

DerivState deriv_step(const SystemSpec& sys, DerivState s, int i) {
  const MapSpec& f = sys.map(static_cast<std::size_t>(i));
  s.log_sum.add(std::log(f.derivative(s.x)));
  s.x = f.apply(s.x);
  return s;
}

/// Exceedance weights for one horizon: acc[e] accumulates the weight of
/// words with deviation > eps[e]; the last two slots hold the weighted log
/// ratio and the censored weight.
using ExactAcc = std::vector<CompensatedSum>;

void add_exceedances(ExactAcc& acc, const std::vector<double>& eps, double log_ratio,
                     std::size_t n, double gamma, double w, bool censored) {
  const double dev = std::fabs(log_ratio / static_cast<double>(n) - gamma);
  for (std::size_t e = 0; e < eps.size(); ++e) {
    if (dev > eps[e]) acc[e].add(w);
  }
  acc[eps.size()].add(w * log_ratio / static_cast<double>(n));
  if (censored) acc[eps.size() + 1].add(w);
}

void init_curve(LDCurve& c, double gamma, const std::vector<double>& eps,
                const std::vector<std::size_t>& horizons) {
  require(!eps.empty() && !horizons.empty(), ErrorKind::invalid_argument,
          "LD curves need at least one epsilon and one horizon");
  for (double e : eps) {
    require(e >= 0.0 && std::isfinite(e), ErrorKind::invalid_argument, "epsilons must be >= 0");
  }
  for (std::size_t n : horizons) {
    require(n >= 1, ErrorKind::invalid_argument, "LD horizons must be >= 1");
  }
  c.epsilons = eps;
  c.horizons = horizons;
  c.gamma = gamma;
  const std::size_t H = horizons.size();
  c.probs.assign(eps.size(), std::vector<double>(H, 0.0));
  c.ci_low = c.probs;
  c.ci_high = c.probs;
  c.exact.assign(H, false);
  c.censored_fraction.assign(H, 0.0);
  c.usable.assign(H, true);
  c.mean_log_ratio.assign(H, 0.0);
}

void store_exact(LDCurve& c, std::size_t h, const std::vector<ExactAcc>& shards) {
  const std::size_t E = c.epsilons.size();
  ExactAcc total(E + 2);
  for (const auto& s : shards) {
    for (std::size_t e = 0; e < E + 2; ++e) total[e].add(s[e].value());
  }
  for (std::size_t e = 0; e < E; ++e) {
    const double p = std::clamp(total[e].value(), 0.0, 1.0);
    c.probs[e][h] = c.ci_low[e][h] = c.ci_high[e][h] = p;
  }
  c.exact[h] = true;
  c.mean_log_ratio[h] = total[E].value();
  c.censored_fraction[h] = total[E + 1].value();
  c.usable[h] = c.censored_fraction[h] <= 0.5;
}

/// Monte Carlo horizons share one word per replica: `records[r][m]` holds the
/// log ratio at the m-th MC horizon and `cens[r][m]` its censoring flag.
void store_monte_carlo(LDCurve& c, const std::vector<std::size_t>& mc,
                       const std::vector<std::vector<double>>& records,
                       const std::vector<std::vector<char>>& cens) {
  const double z = two_sided_z(0.99);
  const std::size_t R = records.size();
  for (std::size_t m = 0; m < mc.size(); ++m) {
    const std::size_t h = mc[m];
    const std::size_t n = c.horizons[h];
    std::vector<std::size_t> hits(c.epsilons.size(), 0);
    CompensatedSum mean;
    std::size_t censored = 0;
    for (std::size_t r = 0; r < R; ++r) {
      const double lr = records[r][m];
      const double dev = std::fabs(lr / static_cast<double>(n) - c.gamma);
      for (std::size_t e = 0; e < c.epsilons.size(); ++e) hits[e] += dev > c.epsilons[e];
      mean.add(lr / static_cast<double>(n));
      censored += cens[r][m] != 0;
    }
    for (std::size_t e = 0; e < c.epsilons.size(); ++e) {
      c.probs[e][h] = static_cast<double>(hits[e]) / static_cast<double>(R);
      const auto ci = wilson_interval(hits[e], R, z);
      c.ci_low[e][h] = ci.low;
      c.ci_high[e][h] = ci.high;
    }
    c.exact[h] = false;
    c.mean_log_ratio[h] = mean.value() / static_cast<double>(R);
    c.censored_fraction[h] = static_cast<double>(censored) / static_cast<double>(R);
    c.usable[h] = c.censored_fraction[h] <= 0.5;
  }
}

/// Splits horizons into exact and Monte Carlo index lists.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_horizons(
    const LDCurve& c, std::size_t symbols, const LDOptions& opts) {
  std::vector<std::size_t> exact, mc;
  for (std::size_t h = 0; h < c.horizons.size(); ++h) {
    const bool ok = !opts.force_monte_carlo &&
                    word_count_at_most(symbols, c.horizons[h], opts.exact_limit);
    (ok ? exact : mc).push_back(h);
  }
  if (!mc.empty()) {
    require(opts.replicas >= 1, ErrorKind::insufficient_data, "Monte Carlo LD needs replicas >= 1");
  }
  return {exact, mc};
}

/// Largest Monte Carlo horizon.
std::size_t max_horizon(const LDCurve& c, const std::vector<std::size_t>& mc) {
  std::size_t top = 0;
  for (std::size_t h : mc) top = std::max(top, c.horizons[h]);
  return top;
}

}  // namespace

std::pair<double, double> one_step_gamma(const SystemSpec& sys, std::size_t samples,
                                         std::uint64_t seed) {
  require_scalar_derivatives(sys);
  require(samples >= 100, ErrorKind::insufficient_data, "one_step_gamma needs samples >= 100");
  StreamRng init(seed, streams::kInitial);
  WordStream word(seed, streams::kStationary, sys.probs());
  double x = init.uniform();
  for (int t = 0; t < 1000; ++t) x = sys.map(static_cast<std::size_t>(word.next())).apply(x);
  constexpr std::size_t kBatches = 100;
  RunningStats batches;
  CompensatedSum total;
  for (std::size_t b = 0; b < kBatches; ++b) {
    const std::size_t lo = samples * b / kBatches, hi = samples * (b + 1) / kBatches;
    CompensatedSum s;
    for (std::size_t t = lo; t < hi; ++t) {
      double v = 0.0;
      for (std::size_t i = 0; i < sys.size(); ++i) {
        v += sys.probs()[i] * std::log(sys.map(i).derivative(x));
      }
      s.add(v);
      x = sys.map(static_cast<std::size_t>(word.next())).apply(x);
    }
    total.add(s.value());
    batches.add(s.value() / static_cast<double>(hi - lo));
  }
  return {total.value() / static_cast<double>(samples), batches.stderr_of_mean()};
}

GammaEstimate estimate_gamma(const SystemSpec& sys, std::size_t n, std::size_t replicas,
                             double x0, std::uint64_t seed, int threads) {
  require_scalar_derivatives(sys);
  require(replicas >= 30, ErrorKind::insufficient_data, "estimate_gamma needs replicas >= 30");
  require(n >= 1, ErrorKind::invalid_argument, "estimate_gamma needs n >= 1");
  GammaEstimate est;
  est.n = n;
  est.replicas = replicas;
  std::vector<double> per(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    WordStream word(seed, streams::kReplica + r, sys.probs());
    DerivState s{x0, {}};
    for (std::size_t k = 0; k < n; ++k) s = deriv_step(sys, s, word.next());
    per[r] = s.log_sum.value() / static_cast<double>(n);
  });
  RunningStats st;
  for (double v : per) st.add(v);
  est.gamma = st.mean();
  est.stderr_ = st.stderr_of_mean();
  const std::size_t samples = std::clamp<std::size_t>(n * replicas, 10000, 1000000);
  std::tie(est.one_step, est.one_step_stderr) =
      one_step_gamma(sys, samples, seed ^ 0xd1b54a32d192ed03ULL);
  est.consistent = std::fabs(est.gamma - est.one_step) <=
                   3.0 * std::hypot(est.stderr_, est.one_step_stderr) + 1e-12;
  return est;
}

std::vector<double> default_epsilons(double gamma) {
  const double scale = std::fabs(gamma) > 1e-12 ? std::fabs(gamma) : 1.0;
  std::vector<double> eps(10);
  for (int j = 0; j < 10; ++j) eps[static_cast<std::size_t>(j)] = 0.05 * (j + 1) * scale;
  return eps;
}

LDCurve ld_curve(const SystemSpec& sys, double x0, double gamma,
                 const std::vector<double>& epsilons, const std::vector<std::size_t>& horizons,
                 std::uint64_t seed, const LDOptions& opts) {
  require_scalar_derivatives(sys);
  LDCurve c;
  init_curve(c, gamma, epsilons, horizons);
  const auto [exact, mc] = split_horizons(c, sys.size(), opts);
  const std::size_t E = epsilons.size();

  for (std::size_t h : exact) {
    const std::size_t n = horizons[h];
    auto shards = walk_words_sharded<ExactAcc>(
        sys.probs(), n, DerivState{x0, {}},
        [&](const DerivState& s, int i) { return deriv_step(sys, s, i); },
        [&](ExactAcc& acc, const DerivState& s, double w) {
          add_exceedances(acc, epsilons, s.log_sum.value(), n, gamma, w, false);
        },
        [&] { return ExactAcc(E + 2); }, opts.threads);
    store_exact(c, h, shards);
  }

  if (!mc.empty()) {
    std::vector<std::size_t> order = mc;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return horizons[a] < horizons[b]; });
    const std::size_t top = max_horizon(c, mc);
    std::vector<std::vector<double>> rec(opts.replicas, std::vector<double>(mc.size()));
    std::vector<std::vector<char>> cens(opts.replicas, std::vector<char>(mc.size(), 0));
    parallel_for(opts.replicas, opts.threads, [&](std::size_t r) {
      WordStream word(seed, streams::kReplica + r, sys.probs());
      DerivState s{x0, {}};
      std::size_t next = 0;
      for (std::size_t k = 1; k <= top; ++k) {
        s = deriv_step(sys, s, word.next());
        while (next < order.size() && horizons[order[next]] == k) {
          const auto pos = static_cast<std::size_t>(
              std::find(mc.begin(), mc.end(), order[next]) - mc.begin());
          rec[r][pos] = s.log_sum.value();
          ++next;
        }
      }
    });
    store_monte_carlo(c, mc, rec, cens);
  }
  fit_ld_rates(c);
  return c;
}

LDCurve sync_ld_curve(const SystemSpec& sys, const PhasePoint& x, const PhasePoint& y,
                      double gamma, const std::vector<double>& epsilons,
                      const std::vector<std::size_t>& horizons, std::uint64_t seed,
                      const LDOptions& opts) {
  require(!(x == y), ErrorKind::invalid_argument, "sync_ld_curve needs x != y");
  require(distance(x, y) > 0.0, ErrorKind::invalid_argument, "sync_ld_curve needs x != y");
  const SystemView view(sys);
  LDCurve c;
  init_curve(c, gamma, epsilons, horizons);
  const auto [exact, mc] = split_horizons(c, sys.size(), opts);
  const std::size_t E = epsilons.size();
  const PairTracker root(view, x, y);

  for (std::size_t h : exact) {
    const std::size_t n = horizons[h];
    auto shards = walk_words_sharded<ExactAcc>(
        sys.probs(), n, root,
        [](const PairTracker& s, int i) {
          PairTracker next = s;
          next.step(i);
          return next;
        },
        [&](ExactAcc& acc, const PairTracker& s, double w) {
          add_exceedances(acc, epsilons, s.log_ratio(), n, gamma, w, s.censored());
        },
        [&] { return ExactAcc(E + 2); }, opts.threads);
    store_exact(c, h, shards);
  }

  if (!mc.empty()) {
    std::vector<std::size_t> order = mc;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return horizons[a] < horizons[b]; });
    const std::size_t top = max_horizon(c, mc);
    std::vector<std::vector<double>> rec(opts.replicas, std::vector<double>(mc.size()));
    std::vector<std::vector<char>> cens(opts.replicas, std::vector<char>(mc.size(), 0));
    parallel_for(opts.replicas, opts.threads, [&](std::size_t r) {
      WordStream word(seed, streams::kReplica + r, sys.probs());
      PairTracker s = root;
      std::size_t next = 0;
      for (std::size_t k = 1; k <= top; ++k) {
        s.step(word.next());
        while (next < order.size() && horizons[order[next]] == k) {
          const auto pos = static_cast<std::size_t>(
              std::find(mc.begin(), mc.end(), order[next]) - mc.begin());
          rec[r][pos] = s.log_ratio();
          cens[r][pos] = s.censored();
          ++next;
        }
      }
    });
    store_monte_carlo(c, mc, rec, cens);
  }
  fit_ld_rates(c);
  return c;
}

void fit_ld_rates(LDCurve& c) {
  c.fitted_rates.assign(c.epsilons.size(), INFINITY);
  std::vector<double> e2, rates;
  for (std::size_t e = 0; e < c.epsilons.size(); ++e) {
    std::vector<double> ns, logs;
    for (std::size_t h = 0; h < c.horizons.size(); ++h) {
      if (!c.usable[h] || !(c.probs[e][h] > 0.0)) continue;
      ns.push_back(static_cast<double>(c.horizons[h]));
      logs.push_back(std::log(c.probs[e][h]));
    }
    if (ns.size() < 2) continue;
    c.fitted_rates[e] = std::max(0.0, -fit_line(ns, logs).slope);
    e2.push_back(c.epsilons[e] * c.epsilons[e]);
    rates.push_back(c.fitted_rates[e]);
  }
  c.rate_points = rates.size();
  if (rates.size() >= 2) {
    const auto fit = fit_line(e2, rates);
    c.h_hat = fit.slope;
    c.r2 = fit.r2;
  } else {
    c.h_hat = 0.0;
    c.r2 = 0.0;
  }
}

double modulus_of_continuity(const SystemSpec& sys, double delta, int grid) {
  require_scalar_derivatives(sys);
  require(delta >= 0.0, ErrorKind::invalid_argument, "modulus needs delta >= 0");
  require(grid >= 2, ErrorKind::invalid_argument, "modulus needs grid >= 2");
  const bool circle = sys.space() == PhaseSpace::circle;
  const double span = circle ? 0.5 : 1.0;
  const double d = std::min(delta, span);
  const int top = static_cast<int>(std::floor(d * grid));
  double omega = 0.0;
  for (const auto& f : sys.maps()) {
    std::vector<double> L(static_cast<std::size_t>(grid) + 1);
    for (int g = 0; g <= grid; ++g) {
      L[static_cast<std::size_t>(g)] = std::log(f.derivative(circle && g == grid ? 0.0
                                                   : static_cast<double>(g) / grid));
    }
    for (int g = 0; g < grid + (circle ? 0 : 1); ++g) {
      const double lg = L[static_cast<std::size_t>(g)];
      for (int m = 1; m <= top; ++m) {
        int j = g + m;
        if (circle) {
          j %= grid;
        } else if (j > grid) {
          break;
        }
        omega = std::max(omega, std::fabs(L[static_cast<std::size_t>(j)] - lg));
      }
      const double z = static_cast<double>(g) / grid + d;
      if (circle || z <= 1.0) {
        omega = std::max(omega, std::fabs(std::log(f.derivative(circle ? wrap_unit(z) : z)) - lg));
      }
    }
  }
  return omega;
}

DistortionReport distortion_report(const SystemSpec& sys, double x, double y, std::size_t n,
                                   std::size_t replicas, const std::vector<double>& delta_ladder,
                                   std::uint64_t seed, int threads) {
  require_scalar_derivatives(sys);
  require(replicas >= 1, ErrorKind::insufficient_data, "distortion_report needs replicas >= 1");
  require(n >= 1, ErrorKind::invalid_argument, "distortion_report needs n >= 1");
  const bool circle = sys.space() == PhaseSpace::circle;
  const double gap = circle ? wrap_unit(y - x) : y - x;
  require(gap != 0.0, ErrorKind::invalid_argument, "distortion_report needs x != y");

  DistortionReport rep;
  rep.deltas = delta_ladder;
  std::sort(rep.deltas.begin(), rep.deltas.end());
  double running = 0.0;
  for (double d : rep.deltas) {
    running = std::max(running, modulus_of_continuity(sys, d));
    rep.omega.push_back(running);
  }
  rep.checkpoints = geometric_checkpoints(1, n, 2.0);
  const std::size_t C = rep.checkpoints.size();

  // Grid A spans the lift arc [x, x + gap]; grid B its complement on the circle.
  const int arcs = circle ? 2 : 1;
  std::vector<std::vector<double>> ratios(replicas, std::vector<double>(C, 1.0));
  parallel_for(replicas, threads, [&](std::size_t r) {
    WordStream word(seed, streams::kReplica + r, sys.probs());
    std::vector<double> z(static_cast<std::size_t>(arcs * kArcGrid));
    std::vector<CompensatedSum> L(z.size());
    ArcTracker arc[2];
    arc[0] = ArcTracker(sys.space(), x, gap);
    if (circle) arc[1] = ArcTracker(sys.space(), wrap_unit(x + gap), 1.0 - gap);
    for (int a = 0; a < arcs; ++a) {
      const double base = a == 0 ? x : wrap_unit(x + gap);
      const double len = a == 0 ? gap : 1.0 - gap;
      for (int g = 0; g < kArcGrid; ++g) {
        const double p = base + len * g / (kArcGrid - 1);
        z[static_cast<std::size_t>(a * kArcGrid + g)] = circle ? wrap_unit(p) : std::clamp(p, 0.0, 1.0);
      }
    }
    std::size_t next = 0;
    for (std::size_t k = 1; k <= n; ++k) {
      const MapSpec& f = sys.map(static_cast<std::size_t>(word.next()));
      for (std::size_t j = 0; j < z.size(); ++j) {
        L[j].add(std::log(f.derivative(z[j])));
        z[j] = f.apply(z[j]);
      }
      for (int a = 0; a < arcs; ++a) arc[a].step(f);
      if (next < C && rep.checkpoints[next] == k) {
        const int pick = arcs == 2 && std::fabs(arc[1].delta()) < std::fabs(arc[0].delta()) ? 1 : 0;
        double lo = INFINITY, hi = -INFINITY;
        for (int g = 0; g < kArcGrid; ++g) {
          const double v = L[static_cast<std::size_t>(pick * kArcGrid + g)].value();
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        ratios[r][next] = std::exp(hi - lo);
        ++next;
      }
    }
  });
  rep.mean_max_ratio.assign(C, 0.0);
  rep.max_max_ratio.assign(C, 1.0);
  for (std::size_t c = 0; c < C; ++c) {
    CompensatedSum s;
    for (std::size_t r = 0; r < replicas; ++r) {
      s.add(ratios[r][c]);
      rep.max_max_ratio[c] = std::max(rep.max_max_ratio[c], ratios[r][c]);
    }
    rep.mean_max_ratio[c] = s.value() / static_cast<double>(replicas);
  }
  rep.tempered_statistic = std::log(rep.mean_max_ratio.back()) / static_cast<double>(n);
  rep.tempered = rep.tempered_statistic < 0.05;
  return rep;
}

}  // namespace rdsw
