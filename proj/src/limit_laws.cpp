// SPDX-License-Identifier: Apache-2.0
#include "rdsw/limit_laws.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rdsw/error.hpp"
#include "rdsw/io.hpp"
#include "rdsw/numerics.hpp"
#include "rdsw/parallel.hpp"
#include "rdsw/rng.hpp"

namespace rdsw {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_scalar(const SystemSpec& sys) {
  require(sys.space() != PhaseSpace::projective, ErrorKind::unsupported,
          "limit laws are implemented for circle and interval systems");
}

void require_start(const SystemSpec& sys, double x0) {
  require(x0 >= 0.0 && x0 <= 1.0 && (sys.space() == PhaseSpace::interval || x0 < 1.0),
          ErrorKind::phase_space_mismatch, "start point outside the phase space");
}

/// S_n = sum_{k<n} h(X_k, i_{k+1}); calls mark(k + 1, S_{k+1}) when k + 1 hits
/// the next entry of `marks` (sorted ascending).
template <typename Mark>
double birkhoff(const SystemSpec& sys, const Observable& h, double x, WordStream& word,
                std::size_t n, const std::vector<std::size_t>& marks, Mark&& mark) {
  CompensatedSum s;
  std::size_t next = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const int sym = word.next();
    s.add(h(x, sym));
    x = sys.map(static_cast<std::size_t>(sym)).apply(x);
    if (next < marks.size() && marks[next] == k + 1) {
      mark(next, s.value());
      ++next;
    }
  }
  return s.value();
}

double birkhoff(const SystemSpec& sys, const Observable& h, double x, WordStream& word,
                std::size_t n) {
  return birkhoff(sys, h, x, word, n, {}, [](std::size_t, double) {});
}

double burn(const SystemSpec& sys, double x, WordStream& word, std::size_t steps) {
  for (std::size_t t = 0; t < steps; ++t) x = sys.map(static_cast<std::size_t>(word.next())).apply(x);
  return x;
}

/// Batch-means estimate of sigma^2 over one orbit.
std::pair<double, double> batch_means(const SystemSpec& sys, const Observable& h, double x,
                                      WordStream& word, std::size_t batch_size,
                                      std::size_t batches) {
  RunningStats st;
  for (std::size_t b = 0; b < batches; ++b) {
    CompensatedSum s;
    for (std::size_t k = 0; k < batch_size; ++k) {
      const int sym = word.next();
      s.add(h(x, sym));
      x = sys.map(static_cast<std::size_t>(sym)).apply(x);
    }
    st.add(s.value() / static_cast<double>(batch_size));
  }
  const double v = static_cast<double>(batch_size) * st.variance();
  const double se = batches > 1 ? v * std::sqrt(2.0 / static_cast<double>(batches - 1)) : 0.0;
  return {v, se};
}

double lil_norm(std::size_t n) {
  const double dn = static_cast<double>(n);
  return std::sqrt(2.0 * dn * std::log(std::log(dn)));
}

}  // namespace

Observable Observable::coordinate() { return Observable{}; }

Observable Observable::cos2pi() {
  Observable h;
  h.kind_ = Kind::cos2pi;
  h.holder_ = kTwoPi;
  return h;
}

Observable Observable::sin2pi() {
  Observable h = cos2pi();
  h.kind_ = Kind::sin2pi;
  return h;
}

Observable Observable::constant(double c) {
  Observable h;
  h.kind_ = Kind::constant;
  h.value_ = c;
  h.holder_ = 0.0;
  return h;
}

Observable Observable::symbol() {
  Observable h;
  h.kind_ = Kind::symbol;
  h.holder_ = 0.0;
  return h;
}

Observable Observable::tabulated(std::vector<double> xs, std::vector<double> ys) {
  require(xs.size() == ys.size() && xs.size() >= 2, ErrorKind::invalid_argument,
          "tabulated observable needs at least two (x, y) nodes");
  require(xs.front() >= 0.0 && xs.back() < 1.0, ErrorKind::invalid_argument,
          "tabulated observable nodes must lie in [0, 1)");
  double lip = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const std::size_t nx = (j + 1) % xs.size();
    const double dx = nx ? xs[nx] - xs[j] : xs.front() + 1.0 - xs[j];
    require(dx > 0.0, ErrorKind::invalid_argument, "tabulated observable nodes must increase");
    lip = std::max(lip, std::fabs(ys[nx] - ys[j]) / dx);
  }
  Observable h;
  h.kind_ = Kind::custom_tabulated;
  h.xs_ = std::move(xs);
  h.ys_ = std::move(ys);
  h.holder_ = lip;
  return h;
}

Observable Observable::affine(double a, double b) const {
  Observable h = *this;
  h.scale_ = a * scale_;
  h.offset_ = a * offset_ + b;
  h.holder_ = std::fabs(a) * holder_;
  return h;
}

Observable Observable::with_holder(double alpha, double constant) const {
  require(alpha > 0.0 && alpha <= 1.0, ErrorKind::invalid_argument,
          "Hoelder exponent must lie in (0, 1]");
  require(constant >= 0.0, ErrorKind::invalid_argument, "Hoelder constant must be >= 0");
  Observable h = *this;
  h.alpha_ = alpha;
  h.holder_ = constant;
  return h;
}

double Observable::base(double x, int symbol) const noexcept {
  switch (kind_) {
    case Kind::coordinate: return x;
    case Kind::cos2pi: return std::cos(kTwoPi * x);
    case Kind::sin2pi: return std::sin(kTwoPi * x);
    case Kind::constant: return value_;
    case Kind::symbol: return static_cast<double>(symbol);
    case Kind::custom_tabulated: {
      const double u = wrap_unit(x);
      auto it = std::upper_bound(xs_.begin(), xs_.end(), u);
      std::size_t hi = static_cast<std::size_t>(it - xs_.begin());
      double x0, x1, y0, y1;
      if (hi == 0) {
        x0 = xs_.back() - 1.0, y0 = ys_.back(), x1 = xs_.front(), y1 = ys_.front();
      } else if (hi == xs_.size()) {
        x0 = xs_.back(), y0 = ys_.back(), x1 = xs_.front() + 1.0, y1 = ys_.front();
      } else {
        x0 = xs_[hi - 1], y0 = ys_[hi - 1], x1 = xs_[hi], y1 = ys_[hi];
      }
      return y0 + (y1 - y0) * (u - x0) / (x1 - x0);
    }
  }
  return 0.0;
}

std::string Observable::describe() const {
  static const char* names[] = {"coordinate", "cos2pi", "sin2pi", "custom_tabulated", "constant",
                                "symbol"};
  std::ostringstream os;
  os << names[static_cast<int>(kind_)];
  if (kind_ == Kind::constant) os << '(' << format_real(value_) << ')';
  if (scale_ != 1.0 || offset_ != 0.0) {
    os << " * " << format_real(scale_) << " + " << format_real(offset_);
  }
  return os.str();
}

Observable observable_from_string(const std::string& name) {
  if (name == "coordinate") return Observable::coordinate();
  if (name == "cos2pi") return Observable::cos2pi();
  if (name == "sin2pi") return Observable::sin2pi();
  if (name == "symbol") return Observable::symbol();
  fail(ErrorKind::config, "unknown observable '" + name +
                              "' (expected coordinate, cos2pi, sin2pi, symbol, or a table)");
}

HolderSpotCheck holder_spot_check(const Observable& h, PhaseSpace space, std::uint64_t seed) {
  require(space != PhaseSpace::projective, ErrorKind::unsupported,
          "observables are defined on circle and interval systems");
  StreamRng rng(seed, streams::kAux + 0x401d);
  HolderSpotCheck out;
  for (int t = 0; t < 10000; ++t) {
    const double x = rng.uniform(), y = rng.uniform();
    const double d = space == PhaseSpace::circle ? circle_distance(x, y) : std::fabs(x - y);
    if (d < 1e-12) continue;
    const double diff = h.reads_symbol() ? 0.0 : std::fabs(h(x) - h(y));
    const double ratio = diff / std::pow(d, h.holder_alpha());
    out.worst_ratio = std::max(out.worst_ratio, ratio);
  }
  out.ok = out.worst_ratio <= h.holder_const() * (1.0 + 1e-9) + 1e-12;
  return out;
}

double stationary_mean(const SystemSpec& sys, const Observable& h, std::size_t samples,
                       std::uint64_t seed) {
  require_scalar(sys);
  require(samples >= 1, ErrorKind::invalid_argument, "stationary_mean needs samples >= 1");
  if (h.is_constant()) return h(0.0);
  // Same streams and burn-in as estimate_stationary, without materializing atoms.
  StreamRng init(seed, streams::kInitial);
  WordStream word(seed, streams::kStationary, sys.probs());
  const double x = burn(sys, init.uniform(), word, 1000);
  return birkhoff(sys, h, x, word, samples) / static_cast<double>(samples);
}

SllnReport slln_check(const SystemSpec& sys, const Observable& h, double x0, std::size_t n,
                      std::uint64_t seed, std::uint64_t nu_seed, std::size_t nu_samples) {
  require_scalar(sys);
  require_start(sys, x0);
  require(n >= 16, ErrorKind::insufficient_data, "slln_check needs n >= 16");
  SllnReport rep;
  rep.nu_hat = stationary_mean(sys, h, nu_samples, nu_seed);
  const auto marks = geometric_checkpoints(16, n, 2.0);
  WordStream word(seed, streams::kReplica, sys.probs());
  if (h.is_constant()) {
    for (std::size_t m : marks) rep.points.push_back({m, rep.nu_hat, 0.0});
    rep.pass = true;
    return rep;
  }
  birkhoff(sys, h, x0, word, n, marks, [&](std::size_t i, double s) {
    const double avg = s / static_cast<double>(marks[i]);
    rep.points.push_back({marks[i], avg, std::fabs(avg - rep.nu_hat)});
  });
  WordStream bm_word(seed, streams::kAux, sys.probs());
  const std::size_t batch = 1000;
  const std::size_t batches = std::max<std::size_t>(100, n / batch);
  rep.sigma2_hat = batch_means(sys, h, burn(sys, x0, bm_word, 1000), bm_word, batch, batches).first;
  rep.pass = rep.points.back().gap < 3.0 * std::sqrt(rep.sigma2_hat / static_cast<double>(n));
  return rep;
}

Sigma2Estimate estimate_sigma2(const SystemSpec& sys, const Observable& h, std::size_t n,
                               std::size_t replicas, std::uint64_t seed, int threads,
                               const Sigma2Options& opts) {
  require_scalar(sys);
  require(replicas >= 30, ErrorKind::insufficient_data, "estimate_sigma2 needs replicas >= 30");
  require(n >= 1, ErrorKind::invalid_argument, "estimate_sigma2 needs n >= 1");
  Sigma2Estimate est;
  est.n = n;
  est.replicas = replicas;
  if (h.is_constant()) {
    est.nu_hat = h(0.0);
    return est;
  }
  std::vector<double> sums(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    StreamRng init(seed, streams::kInitial + r);
    WordStream word(seed, streams::kReplica + r, sys.probs());
    const double x = burn(sys, init.uniform(), word, opts.burn_in);
    sums[r] = birkhoff(sys, h, x, word, n);
  });
  const double dn = static_cast<double>(n);
  CompensatedSum total;
  for (double s : sums) total.add(s);
  est.nu_hat = total.value() / (dn * static_cast<double>(replicas));
  RunningStats st;
  for (double s : sums) {
    const double dev = s - dn * est.nu_hat;
    st.add(dev * dev / dn);
  }
  est.sigma2 = st.mean();
  est.stderr_ = st.stderr_of_mean();

  StreamRng init(seed, streams::kInitial + (1ULL << 40));
  WordStream word(seed, streams::kAux, sys.probs());
  const double x = burn(sys, init.uniform(), word, opts.burn_in);
  std::tie(est.batch_sigma2, est.batch_stderr) =
      batch_means(sys, h, x, word, opts.batch_size, opts.batches);
  const double combined = std::hypot(est.stderr_, est.batch_stderr);
  est.disagreement = std::fabs(est.sigma2 - est.batch_sigma2) > 3.0 * combined;
  return est;
}

CltReport clt_test(const SystemSpec& sys, const Observable& h, double x0, std::size_t n,
                   std::size_t replicas, std::uint64_t seed, int threads, std::optional<double> nu,
                   std::optional<double> sigma2) {
  require_scalar(sys);
  require_start(sys, x0);
  require(replicas >= 30, ErrorKind::insufficient_data, "clt_test needs replicas >= 30");
  CltReport rep;
  if (!nu || !sigma2) {
    const auto est = estimate_sigma2(sys, h, n, std::max<std::size_t>(replicas, 30),
                                     seed ^ 0x5851f42d4c957f2dULL, threads);
    rep.nu_hat = nu.value_or(est.nu_hat);
    rep.sigma2 = sigma2.value_or(est.sigma2);
  } else {
    rep.nu_hat = *nu;
    rep.sigma2 = *sigma2;
  }
  rep.threshold = 1.63 / std::sqrt(static_cast<double>(replicas)) + 0.01;
  const double dn = static_cast<double>(n);
  std::vector<double> devs(replicas, 0.0);
  if (!h.is_constant()) {
    parallel_for(replicas, threads, [&](std::size_t r) {
      WordStream word(seed, streams::kReplica + r, sys.probs());
      devs[r] = (birkhoff(sys, h, x0, word, n) - dn * rep.nu_hat) / std::sqrt(dn);
    });
  }
  rep.degenerate = rep.sigma2 < 1e-12;
  if (rep.degenerate) {
    rep.normalized = devs;
    rep.pass = std::all_of(devs.begin(), devs.end(),
                           [](double v) { return std::fabs(v) < 1e-9; });
    return rep;
  }
  rep.normalized.resize(replicas);
  const double sd = std::sqrt(rep.sigma2);
  for (std::size_t r = 0; r < replicas; ++r) rep.normalized[r] = devs[r] / sd;
  rep.ks_stat = ks_distance_to_normal(rep.normalized);
  rep.pass = rep.ks_stat < rep.threshold;
  return rep;
}

LilReport lil_statistic(const SystemSpec& sys, const Observable& h, double x0, std::size_t n_max,
                        std::size_t replicas, std::uint64_t seed, int threads,
                        std::optional<double> nu, std::optional<double> sigma2) {
  require_scalar(sys);
  require_start(sys, x0);
  require(n_max >= 10000, ErrorKind::insufficient_data, "lil_statistic needs n_max >= 10^4");
  require(replicas >= 1, ErrorKind::insufficient_data, "lil_statistic needs replicas >= 1");
  LilReport rep;
  rep.checkpoints = geometric_checkpoints(16, n_max, 2.0);
  rep.statistics.assign(replicas, 0.0);
  if (h.is_constant()) {
    rep.nu_hat = h(0.0);
    rep.pass = true;
    return rep;
  }
  if (!nu || !sigma2) {
    const auto est = estimate_sigma2(sys, h, 10000, 256, seed ^ 0x5851f42d4c957f2dULL, threads);
    rep.nu_hat = nu.value_or(est.nu_hat);
    rep.sigma2 = sigma2.value_or(est.sigma2);
  } else {
    rep.nu_hat = *nu;
    rep.sigma2 = *sigma2;
  }
  require(rep.sigma2 > 1e-12, ErrorKind::hypothesis_failed,
          "sigma^2 vanishes; the LIL normalization is degenerate");
  const double sd = std::sqrt(rep.sigma2);
  parallel_for(replicas, threads, [&](std::size_t r) {
    WordStream word(seed, streams::kReplica + r, sys.probs());
    double best = -INFINITY;
    birkhoff(sys, h, x0, word, n_max, rep.checkpoints, [&](std::size_t i, double s) {
      const std::size_t m = rep.checkpoints[i];
      const double stat = (s - static_cast<double>(m) * rep.nu_hat) / (lil_norm(m) * sd);
      best = std::max(best, stat);
    });
    rep.statistics[r] = best;
  });
  rep.median = median(rep.statistics);
  rep.pass = rep.median >= 0.5 && rep.median <= 1.5;
  return rep;
}

}  // namespace rdsw
