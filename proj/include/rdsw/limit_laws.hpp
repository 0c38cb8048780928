// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rdsw/geometry.hpp"
#include "rdsw/systems.hpp"

namespace rdsw {

/// Real observable on a circle or interval system, h(x) = scale * base(x) +
/// offset. The `symbol` kind reads the symbol drawn at the current step
/// instead of the point, which turns Birkhoff sums into i.i.d. sums (control
/// path for the classical limit laws).
class Observable {
 public:
  enum class Kind { coordinate, cos2pi, sin2pi, custom_tabulated, constant, symbol };

  static Observable coordinate();
  static Observable cos2pi();
  static Observable sin2pi();
  static Observable constant(double c);
  static Observable symbol();
  /// Periodic piecewise-linear interpolation through (xs[j], ys[j]), xs
  /// strictly increasing in [0, 1). The declared Hoelder data are the
  /// largest secant slope with alpha = 1.
  static Observable tabulated(std::vector<double> xs, std::vector<double> ys);

  /// a * h + b; the Hoelder constant scales by |a|.
  Observable affine(double a, double b) const;
  /// Overrides the declared Hoelder data.
  Observable with_holder(double alpha, double constant) const;

  double operator()(double x, int symbol = 0) const noexcept {
    return scale_ * base(x, symbol) + offset_;
  }
  Kind kind() const noexcept { return kind_; }
  bool is_constant() const noexcept { return kind_ == Kind::constant || scale_ == 0.0; }
  bool reads_symbol() const noexcept { return kind_ == Kind::symbol && scale_ != 0.0; }
  double holder_alpha() const noexcept { return alpha_; }
  double holder_const() const noexcept { return holder_; }
  std::string describe() const;

 private:
  double base(double x, int symbol) const noexcept;

  Kind kind_ = Kind::coordinate;
  double scale_ = 1.0;
  double offset_ = 0.0;
  double value_ = 0.0;  // constant kind
  double alpha_ = 1.0;
  double holder_ = 1.0;
  std::vector<double> xs_, ys_;
};

Observable observable_from_string(const std::string& name);

struct HolderSpotCheck {
  double worst_ratio = 0.0;  // max |h(x) - h(y)| / d^alpha(x, y) over the sampled pairs
  bool ok = true;
};

/// 10^4 random pairs from a fixed stream; pairs with d < 1e-12 are skipped.
/// The symbol kind is checked as constant in x.
HolderSpotCheck holder_spot_check(const Observable& h, PhaseSpace space, std::uint64_t seed = 0);

struct SllnPoint {
  std::size_t n = 0;
  double average = 0.0;  // S_n / n
  double gap = 0.0;      // |S_n / n - nu_hat|
};

struct SllnReport {
  double nu_hat = 0.0;
  double sigma2_hat = 0.0;  // batch means on the checked orbit
  std::vector<SllnPoint> points;
  bool pass = false;  // last gap < 3 sqrt(sigma2_hat / n)
};

/// S_n / n along one word from x0 at geometric checkpoints (first 16, ratio
/// 2, n always included). nu_hat comes from an occupation measure of
/// `nu_samples` points under the seed nu_seed.
SllnReport slln_check(const SystemSpec& sys, const Observable& h, double x0, std::size_t n,
                      std::uint64_t seed, std::uint64_t nu_seed, std::size_t nu_samples = 1000000);

/// Mean of h under the occupation measure (burn-in 1000) of one orbit.
double stationary_mean(const SystemSpec& sys, const Observable& h, std::size_t samples,
                       std::uint64_t seed);

struct Sigma2Estimate {
  double nu_hat = 0.0;  // pooled over replicas
  double sigma2 = 0.0;
  double stderr_ = 0.0;
  double batch_sigma2 = 0.0;
  double batch_stderr = 0.0;
  bool disagreement = false;  // |difference| > 3 combined standard errors
  std::size_t n = 0;
  std::size_t replicas = 0;
};

struct Sigma2Options {
  std::size_t burn_in = 1000;
  std::size_t batch_size = 1000;
  std::size_t batches = 10000;
};

/// Replica estimate of sigma^2(h) from near-stationary starts: each replica
/// draws a uniform start and burns in on its own stream. Replicas < 30 refused.
Sigma2Estimate estimate_sigma2(const SystemSpec& sys, const Observable& h, std::size_t n,
                               std::size_t replicas, std::uint64_t seed, int threads = 1,
                               const Sigma2Options& opts = {});

struct CltReport {
  double nu_hat = 0.0;
  double sigma2 = 0.0;
  double ks_stat = 0.0;
  double threshold = 0.0;  // 1.63 / sqrt(replicas) + 0.01
  bool degenerate = false;
  bool pass = false;
  std::vector<double> normalized;  // per replica, replica order
};

/// Quenched CLT test from the fixed start x0. When nu / sigma2 are not
/// supplied they are estimated with estimate_sigma2 under a derived seed.
CltReport clt_test(const SystemSpec& sys, const Observable& h, double x0, std::size_t n,
                   std::size_t replicas, std::uint64_t seed, int threads = 1,
                   std::optional<double> nu = std::nullopt,
                   std::optional<double> sigma2 = std::nullopt);

struct LilReport {
  double nu_hat = 0.0;
  double sigma2 = 0.0;
  std::vector<std::size_t> checkpoints;
  std::vector<double> statistics;  // per replica
  double median = 0.0;
  bool pass = false;  // median in [0.5, 1.5]; always true for constant h
};

/// Running maximum over checkpoints of (S_n - n nu) / sqrt(2 n log log n sigma2).
/// Requires n_max >= 10^4.
LilReport lil_statistic(const SystemSpec& sys, const Observable& h, double x0, std::size_t n_max,
                        std::size_t replicas, std::uint64_t seed, int threads = 1,
                        std::optional<double> nu = std::nullopt,
                        std::optional<double> sigma2 = std::nullopt);

}  // namespace rdsw
