// SPDX-License-Identifier: Apache-2.0
#include "rdsw/synchronization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rdsw/error.hpp"
#include "rdsw/numerics.hpp"
#include "rdsw/pair_tracker.hpp"
#include "rdsw/parallel.hpp"

namespace rdsw {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kBallPairs = 32;

std::uint64_t replica_stream(std::uint64_t base, std::size_t group, std::size_t r) {
  return base + (static_cast<std::uint64_t>(group) << 32) + r;
}

/// Ball of a projective system with d >= 3 tracked by tangents at the centre.
class TangentBall {
 public:
  TangentBall(const ProjectivePoint& x, double radius) : c_(x.representative().begin(),
                                                            x.representative().end()) {
    const std::size_t d = c_.size();
    const double len = radius / std::sqrt(1.0 - std::min(radius * radius, 0.999999));
    StreamRng rng(0x5eedba11ULL, streams::kAux);
    t_.assign(2 * kBallPairs, std::vector<double>(d, 0.0));
    for (std::size_t j = 0; j < kBallPairs; ++j) {
      auto& t = t_[j];
      double n2 = 0.0;
      while (n2 < 1e-12) {
        for (double& v : t) v = rng.normal();
        double proj = 0.0;
        for (std::size_t i = 0; i < d; ++i) proj += t[i] * c_[i];
        for (std::size_t i = 0; i < d; ++i) t[i] -= proj * c_[i];
        n2 = 0.0;
        for (double v : t) n2 += v * v;
      }
      const double s = len / std::sqrt(n2);
      for (std::size_t i = 0; i < d; ++i) {
        t[i] *= s;
        t_[j + kBallPairs][i] = -t[i];
      }
    }
    work_.assign(d, 0.0);
    scratch_.assign(d, 0.0);
  }

  void step(const Matrix& a) {
    multiply(a, c_, work_);
    double n2 = 0.0;
    for (double v : work_) n2 += v * v;
    const double scale = std::sqrt(n2);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] = work_[i] / scale;
    if (escaped_) return;
    for (auto& t : t_) {
      if (!push_tangent(a, c_, scale, t, scratch_)) {
        escaped_ = true;
        return;
      }
    }
  }

  double diameter() const {
    if (escaped_) return 1.0;
    double d = 0.0;
    for (std::size_t j = 0; j < kBallPairs; ++j) {
      d = std::max(d, tangent_pair_distance(c_, t_[j], t_[j + kBallPairs]));
    }
    return d;
  }

 private:
  std::vector<double> c_;
  std::vector<std::vector<double>> t_;
  std::vector<double> work_, scratch_;
  bool escaped_ = false;
};

double arc_diameter(const SystemView& view, double delta) {
  const double len = std::fabs(delta);
  if (view.scalar_space() == PhaseSpace::interval) return len;
  const double d = std::min(len, 0.5);
  return view.mode() == SystemView::Mode::chart ? std::sin(kPi * d) : d;
}

ArcTracker initial_arc(const SystemView& view, double x, double radius) {
  if (view.scalar_space() == PhaseSpace::interval) {
    const double lo = std::max(0.0, x - radius), hi = std::min(1.0, x + radius);
    return ArcTracker(PhaseSpace::interval, lo, hi - lo);
  }
  double half = radius;
  if (view.mode() == SystemView::Mode::chart) half = std::asin(std::min(radius, 1.0)) / kPi;
  half = std::min(half, 0.5);
  return ArcTracker(PhaseSpace::circle, wrap_unit(x - half), 2.0 * half);
}

}  // namespace

SyncTrace paired_orbit(const SystemSpec& sys, const PhasePoint& x, const PhasePoint& y,
                       WordStream& word, std::size_t n) {
  const SystemView view(sys);
  PairTracker pair(view, x, y);
  SyncTrace trace;
  trace.seed = word.seed();
  trace.stream_id = word.stream_id();
  trace.distances.reserve(n + 1);
  trace.distances.push_back(pair.distance());
  for (std::size_t k = 1; k <= n; ++k) {
    pair.step(word.next());
    trace.distances.push_back(pair.distance());
    if (!trace.censored_at && pair.censored() && pair.initial_distance() > 0.0) {
      trace.censored_at = k;
    }
  }
  return trace;
}

RateFit fit_sync_rate(const SyncTrace& trace) {
  std::vector<double> ks, logs;
  RateFit fit;
  for (std::size_t k = 0; k < trace.distances.size(); ++k) {
    const double d = trace.distances[k];
    if (d > kRateFloor) {
      ks.push_back(static_cast<double>(k));
      logs.push_back(std::log(d));
    } else if (!fit.censored_at) {
      fit.censored_at = k;
    }
  }
  if (ks.size() < kMinRatePoints) {
    fail(ErrorKind::insufficient_data,
         "rate fit needs at least 8 distances above 1e-14, got " + std::to_string(ks.size()));
  }
  const LineFit line = fit_line(ks, logs);
  fit.rate = line.slope;
  fit.intercept = line.intercept;
  fit.r2 = line.r2;
  fit.used = ks.size();
  return fit;
}

AverageSyncSums average_sync_sum(const SystemSpec& sys, const PhasePoint& x, const PhasePoint& y,
                                 double alpha, std::size_t n, std::size_t replicas,
                                 std::uint64_t seed, int threads) {
  require(replicas >= 100, ErrorKind::insufficient_data, "average_sync_sum needs replicas >= 100");
  require(alpha > 0.0 && alpha <= 1.0, ErrorKind::invalid_argument, "alpha must lie in (0,1]");
  const SystemView view(sys);
  std::vector<std::vector<double>> per(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    WordStream word(seed, replica_stream(streams::kReplica, 0, r), sys.probs());
    PairTracker pair(view, x, y);
    auto& out = per[r];
    out.resize(n + 1);
    out[0] = snowflake(pair.distance(), alpha);
    for (std::size_t k = 1; k <= n; ++k) {
      pair.step(word.next());
      out[k] = snowflake(pair.distance(), alpha);
    }
  });
  AverageSyncSums res;
  res.partial_sums.assign(n + 1, 0.0);
  std::vector<double> mean(n + 1, 0.0);
  for (std::size_t k = 0; k <= n; ++k) {
    CompensatedSum s;
    for (std::size_t r = 0; r < replicas; ++r) s.add(per[r][k]);
    mean[k] = s.value() / static_cast<double>(replicas);
  }
  CompensatedSum total;
  for (std::size_t k = 0; k <= n; ++k) {
    total.add(mean[k]);
    res.partial_sums[k] = total.value();
  }
  const std::size_t start = n - n / 10;
  res.last_decile_increment = res.partial_sums[n] - res.partial_sums[start];
  res.bounded = res.last_decile_increment <= 0.01 * res.partial_sums[n];
  return res;
}

ContractionProbe local_contraction_probe(const SystemSpec& sys, const PhasePoint& x,
                                         double radius, std::size_t n, std::size_t replicas,
                                         double q_target, std::uint64_t seed, int threads) {
  require(radius > 0.0, ErrorKind::invalid_argument, "ball radius must be positive");
  require(q_target > 0.0, ErrorKind::invalid_argument, "q_target must be positive");
  require(replicas >= 1, ErrorKind::insufficient_data, "need at least one replica");
  const SystemView view(sys);
  const double log_q = std::log(q_target);
  std::vector<char> ok(replicas, 0);
  parallel_for(replicas, threads, [&](std::size_t r) {
    WordStream word(seed, replica_stream(streams::kReplica, 1, r), sys.probs());
    auto within = [&](double diam, std::size_t k) {
      return diam <= std::exp(log_q * static_cast<double>(k));
    };
    if (view.mode() == SystemView::Mode::projective) {
      TangentBall ball(std::get<ProjectivePoint>(x), radius);
      if (!within(ball.diameter(), 0)) return;
      for (std::size_t k = 1; k <= n; ++k) {
        ball.step(view.matrix(word.next()));
        if (!within(ball.diameter(), k)) return;
      }
    } else {
      ArcTracker arc = initial_arc(view, view.to_scalar(x), radius);
      if (!within(arc_diameter(view, arc.delta()), 0)) return;
      for (std::size_t k = 1; k <= n; ++k) {
        arc.step(view.scalar_map(word.next()));
        if (arc.censored()) break;
        if (!within(arc_diameter(view, arc.delta()), k)) return;
      }
    }
    ok[r] = 1;
  });
  std::size_t hits = 0;
  for (char c : ok) hits += c ? 1 : 0;
  ContractionProbe probe;
  probe.replicas = replicas;
  probe.fraction = static_cast<double>(hits) / static_cast<double>(replicas);
  probe.stderr_ = std::sqrt(probe.fraction * (1.0 - probe.fraction) / static_cast<double>(replicas));
  return probe;
}

PhasePoint random_point(const SystemSpec& sys, StreamRng& rng) {
  switch (sys.space()) {
    case PhaseSpace::circle: return CirclePoint(rng.uniform());
    case PhaseSpace::interval: return IntervalPoint(rng.uniform());
    case PhaseSpace::projective: {
      std::vector<double> v(sys.dim());
      for (double& c : v) c = rng.normal();
      return ProjectivePoint(std::move(v));
    }
  }
  return CirclePoint(0.0);
}

std::vector<std::pair<PhasePoint, PhasePoint>> search_pairs(const SystemSpec& sys,
                                                            std::size_t count,
                                                            std::uint64_t seed) {
  StreamRng rng(seed, streams::kPairs);
  std::vector<std::pair<PhasePoint, PhasePoint>> out;
  out.reserve(count);
  const std::size_t near = count / 3, antipodal = count / 3;
  for (std::size_t j = 0; j < count; ++j) {
    if (j < near) {
      const double d = std::pow(10.0, -1.0 - static_cast<double>(j % 6));
      switch (sys.space()) {
        case PhaseSpace::circle: {
          const double x = rng.uniform();
          out.emplace_back(CirclePoint(x), CirclePoint(x + d));
          break;
        }
        case PhaseSpace::interval: {
          const double x = rng.uniform() * (1.0 - d);
          out.emplace_back(IntervalPoint(x), IntervalPoint(x + d));
          break;
        }
        case PhaseSpace::projective: {
          const auto p = std::get<ProjectivePoint>(random_point(sys, rng));
          std::vector<double> u(sys.dim());
          for (double& c : u) c = rng.normal();
          double proj = 0.0;
          for (std::size_t i = 0; i < u.size(); ++i) proj += u[i] * p[i];
          double n2 = 0.0;
          for (std::size_t i = 0; i < u.size(); ++i) {
            u[i] -= proj * p[i];
            n2 += u[i] * u[i];
          }
          // tan(asin d) along a unit tangent puts the second point at distance d.
          const double s = d / std::sqrt(1.0 - d * d) / std::sqrt(n2);
          std::vector<double> q(sys.dim());
          for (std::size_t i = 0; i < q.size(); ++i) q[i] = p[i] + s * u[i];
          out.emplace_back(p, ProjectivePoint(std::move(q)));
          break;
        }
      }
    } else if (j < near + antipodal) {
      switch (sys.space()) {
        case PhaseSpace::circle: {
          const double x = rng.uniform();
          out.emplace_back(CirclePoint(x), CirclePoint(x + 0.5));
          break;
        }
        case PhaseSpace::interval: {
          const double x = 0.1 * rng.uniform();
          out.emplace_back(IntervalPoint(x), IntervalPoint(1.0 - 0.1 * rng.uniform()));
          break;
        }
        case PhaseSpace::projective: {
          const auto p = std::get<ProjectivePoint>(random_point(sys, rng));
          std::vector<double> u(sys.dim());
          for (double& c : u) c = rng.normal();
          double proj = 0.0;
          for (std::size_t i = 0; i < u.size(); ++i) proj += u[i] * p[i];
          for (std::size_t i = 0; i < u.size(); ++i) u[i] -= proj * p[i];
          out.emplace_back(p, ProjectivePoint(std::move(u)));
          break;
        }
      }
    } else {
      PhasePoint a = random_point(sys, rng);
      PhasePoint b = random_point(sys, rng);
      out.emplace_back(std::move(a), std::move(b));
    }
  }
  return out;
}

ContractionSearch contraction_on_average_search(const SystemSpec& sys,
                                                const std::vector<double>& alphas,
                                                std::size_t pairs, std::size_t k,
                                                std::uint64_t seed, std::size_t replicas,
                                                int threads) {
  require(!alphas.empty(), ErrorKind::invalid_argument, "alpha grid is empty");
  for (double a : alphas) {
    require(a > 0.0 && a <= 1.0, ErrorKind::invalid_argument, "alphas must lie in (0,1]");
  }
  require(k >= 1, ErrorKind::invalid_argument, "horizon k must be >= 1");
  const auto pair_list = search_pairs(sys, pairs, seed);
  const SystemView view(sys);
  const std::size_t na = alphas.size();

  bool exact = true;
  try {
    require_word_budget(sys.size(), k, 4096);
  } catch (const Error&) {
    exact = false;
  }
  std::vector<std::vector<int>> words;
  std::vector<double> weights;
  if (exact) {
    enumerate_words(sys, k, [&](std::span<const int> w, double wt) {
      words.emplace_back(w.begin(), w.end());
      weights.push_back(wt);
    });
  }

  // ratio[p][a] and its standard error
  std::vector<std::vector<double>> ratio(pair_list.size(), std::vector<double>(na, 0.0));
  std::vector<std::vector<double>> err(pair_list.size(), std::vector<double>(na, 0.0));
  parallel_for(pair_list.size(), threads, [&](std::size_t p) {
    const auto& [x, y] = pair_list[p];
    const PairTracker start(view, x, y);
    const double d0 = start.initial_distance();
    if (!(d0 > 0.0)) return;
    if (exact) {
      std::vector<CompensatedSum> acc(na);
      for (std::size_t w = 0; w < words.size(); ++w) {
        PairTracker pair = start;
        for (int s : words[w]) pair.step(s);
        const double d = pair.distance();
        for (std::size_t a = 0; a < na; ++a) {
          acc[a].add(weights[w] * snowflake(d, alphas[a]));
        }
      }
      for (std::size_t a = 0; a < na; ++a) ratio[p][a] = acc[a].value() / snowflake(d0, alphas[a]);
    } else {
      std::vector<RunningStats> stats(na);
      for (std::size_t r = 0; r < replicas; ++r) {
        WordStream word(seed, replica_stream(streams::kReplica, 2 + p, r), sys.probs());
        PairTracker pair = start;
        for (std::size_t s = 0; s < k; ++s) pair.step(word.next());
        const double d = pair.distance();
        for (std::size_t a = 0; a < na; ++a) {
          stats[a].add(snowflake(d, alphas[a]) / snowflake(d0, alphas[a]));
        }
      }
      for (std::size_t a = 0; a < na; ++a) {
        ratio[p][a] = stats[a].mean();
        err[p][a] = stats[a].stderr_of_mean();
      }
    }
  });

  const double z = two_sided_z(0.99);
  ContractionSearch out;
  for (std::size_t a = 0; a < na; ++a) {
    ContractionRow row;
    row.alpha = alphas[a];
    row.exact = exact;
    std::size_t arg = 0;
    for (std::size_t p = 0; p < pair_list.size(); ++p) {
      if (ratio[p][a] > ratio[arg][a]) arg = p;
    }
    row.lambda_hat = ratio[arg][a];
    row.lambda_ub = row.lambda_hat + z * err[arg][a];
    out.table.push_back(row);
  }
  const auto best = std::min_element(out.table.begin(), out.table.end(),
                                     [](const ContractionRow& l, const ContractionRow& r) {
                                       return l.lambda_hat < r.lambda_hat;
                                     });
  out.best_alpha = best->alpha;
  out.best_lambda = best->lambda_hat;
  out.best_lambda_ub = best->lambda_ub;
  out.certified = best->lambda_ub < 1.0;
  return out;
}

std::vector<ProximityVerdict> proximality_probe(
    const SystemSpec& sys, const std::vector<std::pair<PhasePoint, PhasePoint>>& pairs,
    std::size_t horizon, std::size_t replicas, double tol, std::uint64_t seed, int threads) {
  const SystemView view(sys);
  std::vector<ProximityVerdict> out(pairs.size());
  std::vector<double> mins(pairs.size() * replicas, 0.0);
  parallel_for(pairs.size() * replicas, threads, [&](std::size_t idx) {
    const std::size_t p = idx / replicas, r = idx % replicas;
    WordStream word(seed, replica_stream(streams::kReplica, 1000 + p, r), sys.probs());
    PairTracker pair(view, pairs[p].first, pairs[p].second);
    double m = pair.distance();
    for (std::size_t k = 1; k <= horizon && m > 0.0; ++k) {
      pair.step(word.next());
      m = std::min(m, pair.distance());
    }
    mins[idx] = m;
  });
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    double m = INFINITY;
    for (std::size_t r = 0; r < replicas; ++r) m = std::min(m, mins[p * replicas + r]);
    if (replicas == 0) m = PairTracker(view, pairs[p].first, pairs[p].second).distance();
    out[p].min_distance = m;
    out[p].proximal = m < tol;
  }
  return out;
}

}  // namespace rdsw
