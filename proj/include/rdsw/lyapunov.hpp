// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "rdsw/geometry.hpp"
#include "rdsw/systems.hpp"

namespace rdsw {

struct GammaEstimate {
  double gamma = 0.0;  // mean over replicas of n^-1 sum log|f'|
  double stderr_ = 0.0;
  double one_step = 0.0;  // integral of log|f'| against nu_hat x mu
  double one_step_stderr = 0.0;
  bool consistent = true;  // agree within 3 combined standard errors
  std::size_t n = 0;
  std::size_t replicas = 0;
};

/// Fiber Lyapunov exponent from `replicas` orbits of length n started at x0.
/// Replicas >= 30; circle and interval systems with derivatives only.
GammaEstimate estimate_gamma(const SystemSpec& sys, std::size_t n, std::size_t replicas,
                             double x0, std::uint64_t seed, int threads = 1);

/// One-step integral sum_i p_i log|f_i'| against an occupation measure of
/// `samples` points (burn-in 1000); stderr from 100 batch means.
std::pair<double, double> one_step_gamma(const SystemSpec& sys, std::size_t samples,
                                         std::uint64_t seed);

/// Deviation-probability table indexed [epsilon][horizon].
struct LDCurve {
  std::vector<double> epsilons;
  std::vector<std::size_t> horizons;
  double gamma = 0.0;
  std::vector<std::vector<double>> probs;
  std::vector<std::vector<double>> ci_low;
  std::vector<std::vector<double>> ci_high;
  std::vector<bool> exact;               // per horizon
  std::vector<double> censored_fraction;  // per horizon (sync curves only)
  std::vector<bool> usable;               // per horizon
  std::vector<double> mean_log_ratio;     // per horizon: n^-1 E[log ratio]
  std::vector<double> fitted_rates;       // per epsilon; +inf when < 2 positive points
  double h_hat = 0.0;                     // slope of finite rates against epsilon^2
  double r2 = 0.0;
  std::size_t rate_points = 0;            // epsilons entering the regression
};

struct LDOptions {
  std::size_t replicas = 100000;
  bool force_monte_carlo = false;
  std::uint64_t exact_limit = 1ULL << 20;  // N^n at or below uses enumeration
  int threads = 1;
};

/// 10 points 0.05 .. 0.5 times |gamma| (times 1 when gamma vanishes).
std::vector<double> default_epsilons(double gamma);

/// P(|n^-1 log|(f_i^n)'(x0)| - gamma| > eps).
LDCurve ld_curve(const SystemSpec& sys, double x0, double gamma,
                 const std::vector<double>& epsilons, const std::vector<std::size_t>& horizons,
                 std::uint64_t seed, const LDOptions& opts = {});

/// P(|n^-1 log(d(X_n^x, X_n^y) / d(x, y)) - gamma| > eps); x != y.
LDCurve sync_ld_curve(const SystemSpec& sys, const PhasePoint& x, const PhasePoint& y,
                      double gamma, const std::vector<double>& epsilons,
                      const std::vector<std::size_t>& horizons, std::uint64_t seed,
                      const LDOptions& opts = {});

/// Per-epsilon fitted rates and the epsilon^2 regression, filled in place.
void fit_ld_rates(LDCurve& curve);

struct DistortionReport {
  std::vector<double> deltas;
  std::vector<double> omega;            // modulus of continuity of log|f'|
  std::vector<std::size_t> checkpoints;
  std::vector<double> mean_max_ratio;   // per checkpoint, over replicas
  std::vector<double> max_max_ratio;
  double tempered_statistic = 0.0;      // n^-1 log(mean max-ratio) at the last checkpoint
  bool tempered = false;                // statistic < 0.05
};

inline constexpr int kDistortionGrid = 4096;
inline constexpr int kArcGrid = 32;

/// Distortion of f_i^n over the shorter arc between the paired orbits of x
/// and y, together with the modulus omega(delta) on the given ladder.
DistortionReport distortion_report(const SystemSpec& sys, double x, double y, std::size_t n,
                                   std::size_t replicas, const std::vector<double>& delta_ladder,
                                   std::uint64_t seed, int threads = 1);

/// omega(delta) = max_j max_{d(z, w) <= delta} |log|f_j'(z)| - log|f_j'(w)||,
/// maximized over a grid of `grid` points per map.
double modulus_of_continuity(const SystemSpec& sys, double delta, int grid = kDistortionGrid);

}  // namespace rdsw
