// SPDX-License-Identifier: Apache-2.0
#include "rdsw/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "rdsw/error.hpp"
#include "rdsw/io.hpp"
#include "rdsw/numerics.hpp"
#include "rdsw/parallel.hpp"
#include "rdsw/rng.hpp"

namespace rdsw {

namespace {

/// int_u^v |a - x| dx
double abs_linear_integral(double a, double u, double v) {
  if (a <= u) return 0.5 * ((v - a) * (v - a) - (u - a) * (u - a));
  if (a >= v) return 0.5 * ((a - u) * (a - u) - (a - v) * (a - v));
  return 0.5 * ((a - u) * (a - u) + (v - a) * (v - a));
}

struct Atom {
  double x;
  double w;
};

std::vector<Atom> sorted_atoms(const EmpiricalMeasure& m) {
  const auto xs = m.coordinates();
  std::vector<Atom> atoms(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) atoms[i] = {xs[i], m.weights()[i]};
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const Atom& a, const Atom& b) { return a.x < b.x; });
  return atoms;
}

/// Piecewise-constant CDF difference F_a - F_b on [0, 1) as (breakpoint,
/// value-from-here) pairs; the first piece starts at 0.
std::vector<std::pair<double, double>> cdf_difference(const std::vector<Atom>& a,
                                                      const std::vector<Atom>& b) {
  std::vector<std::pair<double, double>> pieces;
  pieces.emplace_back(0.0, 0.0);
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0;
  while (i < a.size() || j < b.size()) {
    const double x = std::min(i < a.size() ? a[i].x : INFINITY, j < b.size() ? b[j].x : INFINITY);
    while (i < a.size() && a[i].x == x) fa += a[i++].w;
    while (j < b.size() && b[j].x == x) fb += b[j++].w;
    if (pieces.back().first == x) {
      pieces.back().second = fa - fb;
    } else {
      pieces.emplace_back(x, fa - fb);
    }
  }
  return pieces;
}

double weighted_median_of_pieces(const std::vector<std::pair<double, double>>& pieces) {
  std::vector<std::pair<double, double>> vals;  // (value, length)
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const double end = k + 1 < pieces.size() ? pieces[k + 1].first : 1.0;
    const double len = end - pieces[k].first;
    if (len > 0.0) vals.emplace_back(pieces[k].second, len);
  }
  std::sort(vals.begin(), vals.end());
  double acc = 0.0;
  for (const auto& [v, len] : vals) {
    acc += len;
    if (acc >= 0.5) return v;
  }
  return vals.empty() ? 0.0 : vals.back().first;
}

void require_one_dimensional(PhaseSpace s) {
  require(s != PhaseSpace::projective, ErrorKind::unsupported,
          "W1 is implemented for circle and interval measures only");
}

double displacement(const MapSpec& m, double x, PhaseSpace space) {
  const double fx = m.apply(x);
  if (space == PhaseSpace::interval) return fx - x;
  double g = fx - x;
  if (g > 0.5) g -= 1.0;
  if (g <= -0.5) g += 1.0;
  return g;
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(PhaseSpace space, std::vector<PhasePoint> points,
                                   std::vector<double> weights)
    : space_(space), points_(std::move(points)), weights_(std::move(weights)) {
  require(points_.size() == weights_.size(), ErrorKind::invalid_argument,
          "measure needs one weight per atom");
  require(!points_.empty(), ErrorKind::invalid_argument, "measure needs at least one atom");
  double total = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    require(space_of(points_[i]) == space_, ErrorKind::phase_space_mismatch,
            "measure atoms must share one phase space");
    require(weights_[i] >= 0.0, ErrorKind::invalid_argument, "measure weights must be >= 0");
    total += weights_[i];
  }
  require(std::fabs(total - 1.0) <= 1e-10, ErrorKind::invalid_argument,
          "measure weights must sum to 1");
}

EmpiricalMeasure EmpiricalMeasure::uniform_weights(PhaseSpace space, std::vector<PhasePoint> points) {
  const double w = 1.0 / static_cast<double>(points.size());
  std::vector<double> weights(points.size(), w);
  return EmpiricalMeasure(space, std::move(points), std::move(weights));
}

EmpiricalMeasure EmpiricalMeasure::dirac(const PhasePoint& p) {
  return EmpiricalMeasure(space_of(p), {p}, {1.0});
}

EmpiricalMeasure EmpiricalMeasure::grid(PhaseSpace space, std::size_t k) {
  require_one_dimensional(space);
  std::vector<PhasePoint> pts;
  pts.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(k);
    if (space == PhaseSpace::circle) {
      pts.emplace_back(CirclePoint(x));
    } else {
      pts.emplace_back(IntervalPoint(x));
    }
  }
  return uniform_weights(space, std::move(pts));
}

double EmpiricalMeasure::total_mass() const noexcept {
  CompensatedSum s;
  for (double w : weights_) s.add(w);
  return s.value();
}

std::vector<double> EmpiricalMeasure::coordinates() const {
  require_one_dimensional(space_);
  std::vector<double> xs(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    xs[i] = space_ == PhaseSpace::circle ? std::get<CirclePoint>(points_[i]).coordinate()
                                         : std::get<IntervalPoint>(points_[i]).coordinate();
  }
  return xs;
}

EmpiricalMeasure EmpiricalMeasure::merge(const EmpiricalMeasure& other, double w) const {
  require(other.space_ == space_, ErrorKind::phase_space_mismatch, "merge across phase spaces");
  require(w >= 0.0 && w <= 1.0, ErrorKind::invalid_argument, "merge weight outside [0,1]");
  std::vector<PhasePoint> pts = points_;
  pts.insert(pts.end(), other.points_.begin(), other.points_.end());
  std::vector<double> ws;
  ws.reserve(pts.size());
  for (double v : weights_) ws.push_back(w * v);
  for (double v : other.weights_) ws.push_back((1.0 - w) * v);
  return EmpiricalMeasure(space_, std::move(pts), std::move(ws));
}

EmpiricalMeasure markov_push(const SystemSpec& sys, const EmpiricalMeasure& m) {
  require(m.space() == sys.space(), ErrorKind::phase_space_mismatch,
          "measure and system live on different phase spaces");
  std::vector<PhasePoint> pts;
  std::vector<double> ws;
  pts.reserve(m.size() * sys.size());
  ws.reserve(m.size() * sys.size());
  for (std::size_t a = 0; a < m.size(); ++a) {
    for (std::size_t i = 0; i < sys.size(); ++i) {
      pts.push_back(apply_map(sys.map(i), m.points()[a]));
      ws.push_back(sys.probs()[i] * m.weights()[a]);
    }
  }
  return EmpiricalMeasure(m.space(), std::move(pts), std::move(ws));
}

EmpiricalMeasure resample(const EmpiricalMeasure& m, std::size_t budget, std::uint64_t seed) {
  require(budget >= 1, ErrorKind::invalid_argument, "resampling budget must be >= 1");
  StreamRng rng(seed, streams::kResample);
  const double step = 1.0 / static_cast<double>(budget);
  double u = rng.uniform() * step;
  std::vector<PhasePoint> pts;
  pts.reserve(budget);
  double cum = 0.0;
  std::size_t a = 0;
  for (std::size_t k = 0; k < budget; ++k) {
    while (a + 1 < m.size() && cum + m.weights()[a] <= u) cum += m.weights()[a++];
    pts.push_back(m.points()[a]);
    u += step;
  }
  return EmpiricalMeasure::uniform_weights(m.space(), std::move(pts));
}

namespace {

std::vector<PhasePoint> occupation_orbit(const SystemSpec& sys, std::size_t burn_in,
                                         std::size_t samples, std::uint64_t seed,
                                         std::uint64_t stream) {
  StreamRng init(seed, streams::kInitial + (stream - streams::kStationary));
  WordStream word(seed, stream, sys.probs());
  std::vector<PhasePoint> pts;
  pts.reserve(samples);
  if (sys.space() == PhaseSpace::projective) {
    std::vector<double> v(sys.dim());
    for (double& c : v) c = init.normal();
    PhasePoint x = ProjectivePoint(std::move(v));
    for (std::size_t t = 0; t < burn_in; ++t) x = apply_map(sys.map(word.next()), x);
    for (std::size_t t = 0; t < samples; ++t) {
      pts.push_back(x);
      x = apply_map(sys.map(word.next()), x);
    }
    return pts;
  }
  double x = init.uniform();
  for (std::size_t t = 0; t < burn_in; ++t) x = sys.map(word.next()).apply(x);
  const bool circle = sys.space() == PhaseSpace::circle;
  for (std::size_t t = 0; t < samples; ++t) {
    if (circle) {
      pts.emplace_back(CirclePoint(x));
    } else {
      pts.emplace_back(IntervalPoint(x));
    }
    x = sys.map(word.next()).apply(x);
  }
  return pts;
}

}  // namespace

EmpiricalMeasure estimate_stationary(const SystemSpec& sys, std::size_t burn_in,
                                     std::size_t samples, std::uint64_t seed) {
  require(samples >= 1, ErrorKind::invalid_argument, "estimate_stationary needs samples >= 1");
  return EmpiricalMeasure::uniform_weights(
      sys.space(), occupation_orbit(sys, burn_in, samples, seed, streams::kStationary));
}

EmpiricalMeasure estimate_stationary_sharded(const SystemSpec& sys, std::size_t burn_in,
                                             std::size_t samples, std::uint64_t seed,
                                             std::size_t shards, int threads) {
  require(shards >= 1 && samples >= shards, ErrorKind::invalid_argument,
          "need 1 <= shards <= samples");
  std::vector<std::vector<PhasePoint>> parts(shards);
  parallel_for(shards, threads, [&](std::size_t s) {
    const std::size_t lo = samples * s / shards, hi = samples * (s + 1) / shards;
    parts[s] = occupation_orbit(sys, burn_in, hi - lo, seed, streams::kStationary + s);
  });
  std::vector<PhasePoint> pts;
  pts.reserve(samples);
  for (auto& p : parts) pts.insert(pts.end(), p.begin(), p.end());
  return EmpiricalMeasure::uniform_weights(sys.space(), std::move(pts));
}

double wasserstein1(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  require(a.space() == b.space(), ErrorKind::phase_space_mismatch,
          "W1 between measures on different phase spaces");
  require_one_dimensional(a.space());
  const auto pieces = cdf_difference(sorted_atoms(a), sorted_atoms(b));
  const double shift = a.space() == PhaseSpace::circle ? weighted_median_of_pieces(pieces) : 0.0;
  CompensatedSum total;
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const double end = k + 1 < pieces.size() ? pieces[k + 1].first : 1.0;
    total.add(std::fabs(pieces[k].second - shift) * (end - pieces[k].first));
  }
  return total.value();
}

double wasserstein1_to_uniform(const EmpiricalMeasure& m) {
  require_one_dimensional(m.space());
  const auto atoms = sorted_atoms(m);
  // F(x) = c_k on [x_k, x_{k+1}); the uniform CDF is x.
  std::vector<double> starts{0.0}, values{0.0};
  double f = 0.0;
  for (std::size_t i = 0; i < atoms.size();) {
    const double x = atoms[i].x;
    while (i < atoms.size() && atoms[i].x == x) f += atoms[i++].w;
    if (starts.back() == x) {
      values.back() = f;
    } else {
      starts.push_back(x);
      values.push_back(f);
    }
  }
  auto integral = [&](double c) {
    CompensatedSum s;
    for (std::size_t k = 0; k < starts.size(); ++k) {
      const double end = k + 1 < starts.size() ? starts[k + 1] : 1.0;
      s.add(abs_linear_integral(values[k] - c, starts[k], end));
    }
    return s.value();
  };
  if (m.space() == PhaseSpace::interval) return integral(0.0);
  // Circle: minimize over the offset c; the optimum is the Lebesgue median of F(x) - x.
  auto below = [&](double c) {  // |{x : F(x) - x <= c}|
    double len = 0.0;
    for (std::size_t k = 0; k < starts.size(); ++k) {
      const double end = k + 1 < starts.size() ? starts[k + 1] : 1.0;
      const double from = std::clamp(values[k] - c, starts[k], end);
      len += end - from;
    }
    return len;
  };
  double lo = -1.0, hi = 1.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (below(mid) >= 0.5 ? hi : lo) = mid;
  }
  return integral(0.5 * (lo + hi));
}

const char* to_string(AtomVerdict v) noexcept {
  switch (v) {
    case AtomVerdict::dirac_at_common_fixed_point: return "dirac_at_common_fixed_point";
    case AtomVerdict::nonatomic_consistent: return "nonatomic_consistent";
    case AtomVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

AtomDiagnostic atom_diagnostic(const SystemSpec& sys, const EmpiricalMeasure& m) {
  require(sys.space() != PhaseSpace::projective, ErrorKind::unsupported,
          "atom diagnostic is implemented for circle and interval systems");
  require(m.space() == sys.space(), ErrorKind::phase_space_mismatch,
          "measure and system live on different phase spaces");
  const PhaseSpace space = sys.space();
  constexpr int kProbe = 2048;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    int pos = 0, neg = 0;
    for (int g = 0; g < kProbe; ++g) {
      const double r = sys.map(i).difference_ratio(static_cast<double>(g) / kProbe, 1.0 / kProbe);
      pos += r > 0.0;
      neg += r < 0.0;
    }
    require(pos == kProbe || neg == kProbe, ErrorKind::hypothesis_failed,
            "map " + std::to_string(i) + " is not injective; the atomicity dichotomy does not apply");
  }

  AtomDiagnostic diag;
  // Common fixed point: roots of the first map's displacement, checked on all maps.
  constexpr int kGrid = 4096;
  const MapSpec& f0 = sys.map(0);
  std::vector<double> roots;
  double prev = displacement(f0, 0.0, space);
  if (prev == 0.0) roots.push_back(0.0);
  for (int g = 1; g <= kGrid; ++g) {
    const double x = static_cast<double>(g) / kGrid;
    if (space == PhaseSpace::circle && g == kGrid) break;
    const double cur = displacement(f0, x, space);
    if (cur == 0.0) {
      roots.push_back(x);
    } else if ((prev < 0.0 && cur > 0.0) || (prev > 0.0 && cur < 0.0)) {
      double lo = static_cast<double>(g - 1) / kGrid, hi = x;
      const bool lo_neg = prev < 0.0;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double v = displacement(f0, mid, space);
        if (v == 0.0) {
          lo = hi = mid;
          break;
        }
        ((v < 0.0) == lo_neg ? lo : hi) = mid;
      }
      const double r = 0.5 * (lo + hi);
      if (std::fabs(displacement(f0, r, space)) < 1e-9) roots.push_back(r);
    }
    prev = cur;
  }
  for (double r : roots) {
    bool common = true;
    for (const auto& f : sys.maps()) common = common && std::fabs(displacement(f, r, space)) < 1e-9;
    if (!common) continue;
    diag.common_fixed_point_found = true;
    diag.fixed_point = r;
    double mass = 0.0;
    const auto xs = m.coordinates();
    for (std::size_t a = 0; a < xs.size(); ++a) {
      const double d = space == PhaseSpace::circle ? circle_distance(xs[a], r) : std::fabs(xs[a] - r);
      if (d <= kAtomRadius) mass += m.weights()[a];
    }
    diag.mass_near_fixed_point = std::max(diag.mass_near_fixed_point, mass);
    if (mass >= kDiracMass) {
      diag.verdict = AtomVerdict::dirac_at_common_fixed_point;
      diag.fixed_point = r;
      return diag;
    }
  }

  // Largest mass in a window of width 2r (sliding over sorted atoms).
  const auto atoms = sorted_atoms(m);
  std::vector<Atom> ext = atoms;
  if (space == PhaseSpace::circle) {
    for (const auto& a : atoms) ext.push_back({a.x + 1.0, a.w});
  }
  double best = 0.0, window = 0.0;
  std::size_t lo = 0;
  for (std::size_t hi = 0; hi < ext.size(); ++hi) {
    window += ext[hi].w;
    while (ext[hi].x - ext[lo].x > 2.0 * kAtomRadius) window -= ext[lo++].w;
    best = std::max(best, window);
  }
  diag.max_ball_mass = best;
  const double n = static_cast<double>(m.size());
  const double p = 2.0 * kAtomRadius;
  diag.threshold = 5.0 * (p + 3.0 * std::sqrt(p * (1.0 - p) / n));
  if (m.size() < kAtomMinSamples) {
    diag.verdict = AtomVerdict::inconclusive;
  } else {
    diag.verdict = best < diag.threshold ? AtomVerdict::nonatomic_consistent
                                         : AtomVerdict::inconclusive;
  }
  return diag;
}

void write_measure_csv(std::ostream& os, const EmpiricalMeasure& m) {
  if (m.space() == PhaseSpace::projective) {
    const std::size_t d = std::get<ProjectivePoint>(m.points().front()).dim();
    for (std::size_t i = 0; i < d; ++i) os << 'v' << i << ',';
    os << "weight\n";
    for (std::size_t a = 0; a < m.size(); ++a) {
      const auto& p = std::get<ProjectivePoint>(m.points()[a]);
      for (std::size_t i = 0; i < d; ++i) os << format_real(p[i]) << ',';
      os << format_real(m.weights()[a]) << '\n';
    }
    return;
  }
  os << "point,weight\n";
  const auto xs = m.coordinates();
  for (std::size_t a = 0; a < xs.size(); ++a) {
    os << format_real(xs[a]) << ',' << format_real(m.weights()[a]) << '\n';
  }
}

}  // namespace rdsw
