// SPDX-License-Identifier: Apache-2.0
#include "rdsw/cocycles.hpp"

#include <algorithm>
#include <cmath>

#include "rdsw/error.hpp"
#include "rdsw/numerics.hpp"
#include "rdsw/parallel.hpp"
#include "rdsw/synchronization.hpp"

namespace rdsw {

CocycleSpec::CocycleSpec(std::vector<Matrix> matrices, std::vector<double> probs, std::string name)
    : matrices_(std::move(matrices)), probs_(std::move(probs)), name_(std::move(name)) {
  require(!matrices_.empty(), ErrorKind::invalid_argument, "cocycle needs at least one matrix");
  require(matrices_.size() == probs_.size(), ErrorKind::invalid_argument,
          "cocycle needs one probability per matrix");
  validate_probs(probs_);
  dim_ = matrices_.front().rows();
  require(dim_ >= 2 && dim_ <= kMaxProjectiveDim, ErrorKind::invalid_argument,
          "cocycle dimension must be 2..8");
  for (std::size_t i = 0; i < matrices_.size(); ++i) {
    const Matrix& a = matrices_[i];
    require(a.rows() == dim_ && a.cols() == dim_, ErrorKind::invalid_argument,
            "cocycle matrices must all be d x d");
    const double det = determinant(a);
    require(std::fabs(det) > 1e-12, ErrorKind::invalid_argument,
            "cocycle matrix " + std::to_string(i) + " is not invertible (|det| <= 1e-12)");
    mean_log_det_ += probs_[i] * std::log(std::fabs(det));
  }
}

ProductStream::ProductStream(const CocycleSpec& c)
    : c_(&c), q_(Matrix::identity(c.dim())), tmp_(c.dim(), c.dim()), log_r_(c.dim(), 0.0) {}

void ProductStream::step(int symbol) {
  const Matrix& a = c_->matrices()[static_cast<std::size_t>(symbol)];
  const std::size_t d = c_->dim();
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += a(i, k) * q_(k, j);
      tmp_(i, j) = s;
    }
  }
  std::swap(q_, tmp_);
  ++steps_;
  if (++pending_ == kCadence) flush();
}

void ProductStream::flush() {
  if (pending_ == 0) return;
  pending_ = 0;
  // Modified Gram-Schmidt on the columns of q_.
  const std::size_t d = c_->dim();
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t p = 0; p < j; ++p) {
      double proj = 0.0;
      for (std::size_t i = 0; i < d; ++i) proj += q_(i, p) * q_(i, j);
      for (std::size_t i = 0; i < d; ++i) q_(i, j) -= proj * q_(i, p);
    }
    double n2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) n2 += q_(i, j) * q_(i, j);
    const double r = std::sqrt(n2);
    const double lr = std::log(r);
    if (!(lr > -700.0) || !std::isfinite(lr)) {
      fail(ErrorKind::overflow_guard,
           "product became numerically singular (log-scale " + std::to_string(lr) +
               " below -700) after " + std::to_string(steps_) + " steps");
    }
    log_r_[j] += lr;
    for (std::size_t i = 0; i < d; ++i) q_(i, j) /= r;
  }
}

std::vector<double> ProductStream::log_singular_values() {
  flush();
  std::vector<double> s = log_r_;
  std::sort(s.begin(), s.end());
  return s;
}

SpectrumEstimate estimate_spectrum(const CocycleSpec& c, std::size_t n, std::size_t replicas,
                                   std::uint64_t seed, int threads) {
  require(n >= 1000, ErrorKind::insufficient_data, "estimate_spectrum needs n >= 1000");
  require(replicas >= 1, ErrorKind::insufficient_data, "estimate_spectrum needs replicas >= 1");
  const std::size_t d = c.dim();
  std::vector<std::vector<double>> per(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    WordStream word(seed, streams::kReplica + r, c.probs());
    ProductStream ps(c);
    for (std::size_t k = 0; k < n; ++k) ps.step(word.next());
    auto s = ps.log_singular_values();
    for (double& v : s) v /= static_cast<double>(n);
    per[r] = std::move(s);
  });
  SpectrumEstimate est;
  est.n = n;
  est.replicas = replicas;
  est.chis.assign(d, 0.0);
  est.stderrs.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    RunningStats st;
    for (const auto& s : per) st.add(s[j]);
    est.chis[j] = st.mean();
    est.stderrs[j] = st.stderr_of_mean();
  }
  RunningStats gap;
  for (const auto& s : per) gap.add(s[d - 1] - s[d - 2]);
  est.gap_top = gap.mean();
  est.gap_stderr = gap.stderr_of_mean();
  est.gap_positive = est.gap_top > std::max(1e-9, 3.0 * est.gap_stderr);
  est.q_lc = est.gap_positive ? std::exp(-est.gap_top / 2.0) : 1.0;
  return est;
}

SystemSpec projective_system(const CocycleSpec& c) {
  std::vector<MapSpec> maps;
  maps.reserve(c.size());
  for (const auto& a : c.matrices()) maps.push_back(MapSpec::projective(a));
  return SystemSpec(std::move(maps), c.probs(), c.name() + "/projective");
}

LcRateReport verify_lc_rate(const CocycleSpec& c, const ProjectivePoint& x, double radius,
                            std::size_t n, std::size_t replicas, std::uint64_t seed, int threads,
                            double q_target, std::size_t spectrum_n,
                            std::size_t spectrum_replicas) {
  require(x.dim() == c.dim(), ErrorKind::phase_space_mismatch,
          "ball centre dimension does not match the cocycle");
  LcRateReport rep;
  rep.spectrum = estimate_spectrum(c, spectrum_n, spectrum_replicas, seed ^ 0x9e3779b97f4a7c15ULL,
                                   threads);
  if (!rep.spectrum.gap_positive) {
    fail(ErrorKind::hypothesis_failed,
         "top Lyapunov gap not positive (gap " + std::to_string(rep.spectrum.gap_top) +
             ", stderr " + std::to_string(rep.spectrum.gap_stderr) +
             "); local contraction at rate q_lc is not claimed");
  }
  rep.q_lc = rep.spectrum.q_lc;
  rep.q_target = q_target > 0.0 ? q_target : (1.0 + rep.q_lc) / 2.0;
  const auto probe = local_contraction_probe(projective_system(c), x, radius, n, replicas,
                                             rep.q_target, seed, threads);
  rep.fraction = probe.fraction;
  rep.stderr_ = probe.stderr_;
  return rep;
}

}  // namespace rdsw
