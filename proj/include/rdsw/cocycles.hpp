// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rdsw/geometry.hpp"
#include "rdsw/linalg.hpp"
#include "rdsw/systems.hpp"

namespace rdsw {

/// Finite family of invertible d x d matrices with probabilities (2 <= d <= 8).
class CocycleSpec {
 public:
  CocycleSpec() = default;
  CocycleSpec(std::vector<Matrix> matrices, std::vector<double> probs, std::string name = "custom");

  const std::vector<Matrix>& matrices() const noexcept { return matrices_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return matrices_.size(); }
  const std::string& name() const noexcept { return name_; }
  /// E_mu log|det A|.
  double mean_log_det() const noexcept { return mean_log_det_; }

 private:
  std::vector<Matrix> matrices_;
  std::vector<double> probs_;
  std::size_t dim_ = 0;
  double mean_log_det_ = 0.0;
  std::string name_;
};

/// Running product A_i^n = A(i_n) ... A(i_1) kept as Q * diag(exp(log_r)) * U
/// with orthonormal Q; the triangular factor U is discarded after each
/// re-orthonormalization, which leaves the column log-scales log|R_jj|
/// accumulating the Lyapunov sums.
class ProductStream {
 public:
  static constexpr int kCadence = 16;

  explicit ProductStream(const CocycleSpec& c);

  /// Multiplies by A(symbol) on the left.
  void step(int symbol);
  /// Forces a re-orthonormalization so log_scales() is current.
  void flush();
  std::size_t steps() const noexcept { return steps_; }
  /// Accumulated log|R_jj|, j = 0..d-1 (not sorted).
  const std::vector<double>& log_scales() const noexcept { return log_r_; }
  /// Current orthonormal-by-columns frame times pending product (row-major d x d).
  const Matrix& frame() const noexcept { return q_; }
  /// Log singular values of A_i^n from the R diagonal, sorted ascending.
  std::vector<double> log_singular_values();

 private:
  const CocycleSpec* c_;
  Matrix q_;
  Matrix tmp_;
  std::vector<double> log_r_;
  std::size_t steps_ = 0;
  int pending_ = 0;
};

struct SpectrumEstimate {
  std::vector<double> chis;    // ascending
  std::vector<double> stderrs;
  double gap_top = 0.0;        // chi_d - chi_{d-1}
  double gap_stderr = 0.0;
  double q_lc = 1.0;           // exp(-gap_top / 2); < 1 iff gap counted positive
  bool gap_positive = false;
  std::size_t n = 0;
  std::size_t replicas = 0;
};

/// Lyapunov spectrum from the accumulated QR log-scales of `replicas`
/// independent words of length n (n >= 1000).
SpectrumEstimate estimate_spectrum(const CocycleSpec& c, std::size_t n, std::size_t replicas,
                                   std::uint64_t seed, int threads = 1);

/// Induced projective system x -> A x / |A x| on P^{d-1}.
SystemSpec projective_system(const CocycleSpec& c);

struct LcRateReport {
  double fraction = 0.0;
  double stderr_ = 0.0;
  double q_lc = 1.0;
  double q_target = 1.0;
  SpectrumEstimate spectrum;
};

/// Fraction of words contracting B(x, radius) at rate q_target for all k <= n,
/// with q_target = (1 + q_lc) / 2 unless given explicitly (q_target > 0).
/// Refuses with hypothesis_failed when the estimated top gap is not positive.
LcRateReport verify_lc_rate(const CocycleSpec& c, const ProjectivePoint& x, double radius,
                            std::size_t n, std::size_t replicas, std::uint64_t seed,
                            int threads = 1, double q_target = 0.0,
                            std::size_t spectrum_n = 10000, std::size_t spectrum_replicas = 16);

}  // namespace rdsw
