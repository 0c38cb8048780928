// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "rdsw/geometry.hpp"
#include "rdsw/rng.hpp"
#include "rdsw/systems.hpp"

namespace rdsw {

/// Distances d(X_k^x, X_k^y), k = 0..n, along one word.
struct SyncTrace {
  std::vector<double> distances;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::optional<std::size_t> censored_at;  // first step whose offset fell below 1e-300
};

/// Least-squares line through (k, log distances[k]) over entries above the floor.
struct RateFit {
  double rate = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t used = 0;
  std::optional<std::size_t> censored_at;  // first entry at or below the floor
};

inline constexpr double kRateFloor = 1e-14;
inline constexpr std::size_t kMinRatePoints = 8;

SyncTrace paired_orbit(const SystemSpec& sys, const PhasePoint& x, const PhasePoint& y,
                       WordStream& word, std::size_t n);

/// Refuses (insufficient_data) with fewer than 8 entries above the floor.
RateFit fit_sync_rate(const SyncTrace& trace);

struct AverageSyncSums {
  std::vector<double> partial_sums;  // m = 0..n
  double last_decile_increment = 0.0;
  bool bounded = false;  // last-decile increment < 1% of the total
};

/// Partial sums of Monte Carlo means of D^alpha(X_k^x, X_k^y) over
/// `replicas` >= 100 independent words.
AverageSyncSums average_sync_sum(const SystemSpec& sys, const PhasePoint& x, const PhasePoint& y,
                                 double alpha, std::size_t n, std::size_t replicas,
                                 std::uint64_t seed, int threads = 1);

struct ContractionProbe {
  double fraction = 0.0;
  double stderr_ = 0.0;
  std::size_t replicas = 0;
};

/// Fraction of words with diam f_i^k(B(x, radius)) <= q_target^k for all
/// k <= n. One-dimensional balls are tracked exactly as arcs; projective
/// balls with d >= 3 by 32 antipodal pairs of tangent directions.
ContractionProbe local_contraction_probe(const SystemSpec& sys, const PhasePoint& x,
                                         double radius, std::size_t n, std::size_t replicas,
                                         double q_target, std::uint64_t seed, int threads = 1);

struct ContractionRow {
  double alpha = 1.0;
  double lambda_hat = 0.0;
  double lambda_ub = 0.0;  // 99% upper bound for the maximizing pair
  bool exact = false;      // expectations by word enumeration
};

struct ContractionSearch {
  std::vector<ContractionRow> table;
  double best_alpha = 1.0;
  double best_lambda = 0.0;
  double best_lambda_ub = 0.0;
  bool certified = false;  // best_lambda_ub < 1
};

/// Pairs used by the (alpha, lambda) search: one third near-diagonal with
/// d(x, y) cycling through 1e-1 ... 1e-6, one third antipodal, the rest
/// uniform.
std::vector<std::pair<PhasePoint, PhasePoint>> search_pairs(const SystemSpec& sys,
                                                            std::size_t count,
                                                            std::uint64_t seed);

/// lambda_hat(alpha) = max over sampled pairs of E[d^alpha(X_k^x, X_k^y)] /
/// d^alpha(x, y); expectations are exact when N^k <= 4096 and Monte Carlo over
/// `replicas` words otherwise.
ContractionSearch contraction_on_average_search(const SystemSpec& sys,
                                                const std::vector<double>& alphas,
                                                std::size_t pairs, std::size_t k,
                                                std::uint64_t seed, std::size_t replicas = 64,
                                                int threads = 1);

struct ProximityVerdict {
  double min_distance = 0.0;
  bool proximal = false;  // min_distance < tol
};

std::vector<ProximityVerdict> proximality_probe(
    const SystemSpec& sys, const std::vector<std::pair<PhasePoint, PhasePoint>>& pairs,
    std::size_t horizon, std::size_t replicas, double tol, std::uint64_t seed, int threads = 1);

/// Uniform random point of the system's phase space.
PhasePoint random_point(const SystemSpec& sys, StreamRng& rng);

}  // namespace rdsw
