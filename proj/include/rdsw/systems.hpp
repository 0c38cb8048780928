// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rdsw/geometry.hpp"
#include "rdsw/maps.hpp"
#include "rdsw/parallel.hpp"
#include "rdsw/rng.hpp"

namespace rdsw {

/// Validates a probability vector: nonempty, every entry > 0, sum 1 within 1e-12.
void validate_probs(std::span<const double> probs);

/// Finite random dynamical system (F, mu).
class SystemSpec {
 public:
  SystemSpec() = default;
  /// Throws on an empty map list, mixed phase spaces, mismatched projective
  /// dimensions, an invalid probability vector, or a derivative that
  /// vanishes on the 2048-point load grid.
  SystemSpec(std::vector<MapSpec> maps, std::vector<double> probs, std::string name = "custom");

  const std::vector<MapSpec>& maps() const noexcept { return maps_; }
  const MapSpec& map(std::size_t i) const noexcept { return maps_[i]; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return maps_.size(); }
  PhaseSpace space() const noexcept { return space_; }
  /// Projective dimension d (1 for circle / interval systems).
  std::size_t dim() const noexcept { return dim_; }
  bool has_derivative() const noexcept { return has_derivative_; }
  const std::string& name() const noexcept { return name_; }

 private:
  std::vector<MapSpec> maps_;
  std::vector<double> probs_;
  PhaseSpace space_ = PhaseSpace::circle;
  std::size_t dim_ = 1;
  bool has_derivative_ = true;
  std::string name_;
};

/// Lazily generated i.i.d. word with law mu, addressed by (seed, stream_id).
/// A fixed word replays a given symbol list and throws once exhausted.
class WordStream {
 public:
  WordStream() = default;
  WordStream(std::uint64_t seed, std::uint64_t stream_id, std::vector<double> probs);
  static WordStream fixed(std::vector<int> symbols);

  int next();
  std::uint64_t seed() const noexcept { return rng_.seed(); }
  std::uint64_t stream_id() const noexcept { return rng_.stream_id(); }
  std::size_t position() const noexcept { return position_; }

 private:
  StreamRng rng_;
  std::vector<double> cdf_;
  int bits_ = -1;  // >= 0: equal weights on 2^bits symbols, drawn from raw bits
  std::uint64_t bitbuf_ = 0;
  int bits_left_ = 0;
  std::vector<int> fixed_;
  bool is_fixed_ = false;
  std::size_t position_ = 0;
};

/// Records of one orbit X_0, ..., X_n along a word.
struct TrajectoryRecord {
  std::vector<PhasePoint> points;
  std::vector<double> log_deriv_partial;  // empty when derivatives are unavailable
  std::vector<int> word_prefix;
};

PhasePoint apply_map(const MapSpec& m, const PhasePoint& x);
double derivative(const MapSpec& m, const PhasePoint& x);

/// Orbit with composition order f_{i_n} o ... o f_{i_1}; log-derivative partial
/// sums are Neumaier-compensated.
TrajectoryRecord iterate(const SystemSpec& sys, const PhasePoint& x0, WordStream& word,
                         std::size_t n);

/// State of the skew product T(i, x) = (sigma(i), f_{i_1}(x)).
struct SkewState {
  WordStream word;
  PhasePoint x;
};
SkewState skew_step(const SystemSpec& sys, SkewState state);

/// Throws budget_exceeded unless N^n <= limit.
void require_word_budget(std::size_t symbols, std::size_t n, std::uint64_t limit);

inline constexpr std::uint64_t kEnumerationLimit = 1ULL << 24;

/// Calls visit(word, weight) for every word of length n in lexicographic
/// order; weights are products of probabilities in word order.
void enumerate_words(const SystemSpec& sys, std::size_t n,
                     const std::function<void(std::span<const int>, double)>& visit);

/// Word-tree walk with incremental state. step(state, symbol) returns the
/// child state; leaf(state, weight) is called for every complete word.
/// The tree is split into prefix shards of depth `shard_depth`; shard results
/// are combined in prefix order by the caller-supplied reduction, which keeps
/// results independent of the thread count.
template <typename State, typename Step, typename Leaf>
void walk_words(std::span<const double> probs, std::size_t n, const State& root, const Step& step,
                const Leaf& leaf) {
  struct Frame {
    State s;
    double w;
  };
  std::vector<Frame> frames;
  frames.reserve(n + 1);
  frames.push_back({root, 1.0});
  std::vector<int> pos(n + 1, 0);
  if (n == 0) {
    leaf(root, 1.0);
    return;
  }
  const int symbols = static_cast<int>(probs.size());
  std::size_t depth = 0;
  while (true) {
    if (pos[depth] == symbols) {
      if (depth == 0) break;
      frames.pop_back();
      --depth;
      ++pos[depth];
      continue;
    }
    const int i = pos[depth];
    Frame child{step(frames[depth].s, i), frames[depth].w * probs[static_cast<std::size_t>(i)]};
    if (depth + 1 == n) {
      leaf(child.s, child.w);
      ++pos[depth];
    } else {
      frames.push_back(std::move(child));
      ++depth;
      pos[depth] = 0;
    }
  }
}

/// Sharded variant of walk_words. Each shard is a prefix of length
/// min(n, depth0) and owns an accumulator created by make_acc(); leaf(acc,
/// state, weight) updates it. Accumulators are returned in prefix order.
template <typename Acc, typename State, typename Step, typename Leaf, typename MakeAcc>
std::vector<Acc> walk_words_sharded(std::span<const double> probs, std::size_t n,
                                    const State& root, const Step& step, const Leaf& leaf,
                                    const MakeAcc& make_acc, int threads) {
  const std::size_t symbols = probs.size();
  std::size_t depth0 = 0;
  std::size_t shards = 1;
  while (depth0 < n && shards * symbols <= 256) {
    shards *= symbols;
    ++depth0;
  }
  std::vector<Acc> acc(shards);
  parallel_for(shards, threads, [&](std::size_t s) {
    Acc a = make_acc();
    State st = root;
    double w = 1.0;
    std::size_t code = s;
    std::vector<int> prefix(depth0);
    for (std::size_t d = depth0; d-- > 0;) {
      prefix[d] = static_cast<int>(code % symbols);
      code /= symbols;
    }
    for (int sym : prefix) {
      st = step(st, sym);
      w *= probs[static_cast<std::size_t>(sym)];
    }
    walk_words(probs, n - depth0, st, step,
               [&](const State& leaf_state, double leaf_w) { leaf(a, leaf_state, w * leaf_w); });
    acc[s] = std::move(a);
  });
  return acc;
}

}  // namespace rdsw
