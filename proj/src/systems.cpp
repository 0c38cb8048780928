// SPDX-License-Identifier: Apache-2.0
#include "rdsw/systems.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rdsw/error.hpp"
#include "rdsw/numerics.hpp"

namespace rdsw {

void validate_probs(std::span<const double> probs) {
  require(!probs.empty(), ErrorKind::invalid_argument, "probs must be nonempty");
  double total = 0.0;
  for (double p : probs) {
    require(std::isfinite(p) && p > 0.0, ErrorKind::invalid_argument,
            "probs entries must be > 0 (the support must be the whole index set)");
    total += p;
  }
  if (std::fabs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "probs must sum to 1 (got " << total << ")";
    fail(ErrorKind::invalid_argument, os.str());
  }
}

SystemSpec::SystemSpec(std::vector<MapSpec> maps, std::vector<double> probs, std::string name)
    : maps_(std::move(maps)), probs_(std::move(probs)), name_(std::move(name)) {
  require(!maps_.empty(), ErrorKind::invalid_argument, "system needs at least one map");
  require(maps_.size() == probs_.size(), ErrorKind::invalid_argument,
          "system needs one probability per map");
  validate_probs(probs_);
  space_ = maps_.front().space();
  dim_ = maps_.front().dim();
  for (const auto& m : maps_) {
    require(m.space() == space_, ErrorKind::phase_space_mismatch,
            "all maps of a system must act on the same phase space");
    require(m.dim() == dim_, ErrorKind::phase_space_mismatch,
            "all projective maps of a system must share the dimension");
    has_derivative_ = has_derivative_ && m.has_derivative();
  }
  if (space_ == PhaseSpace::projective) return;
  constexpr int kGrid = 2048;
  for (std::size_t i = 0; i < maps_.size(); ++i) {
    if (!maps_[i].has_derivative()) continue;
    for (int g = 0; g < kGrid; ++g) {
      const double x = (g + 0.5) / kGrid;
      const double d = maps_[i].derivative(x);
      if (!(d > 1e-9) || !std::isfinite(d)) {
        std::ostringstream os;
        os << "map " << i << " (" << maps_[i].describe()
           << ") is not a C1 diffeomorphism: derivative " << d << " at x=" << x;
        fail(ErrorKind::invalid_argument, os.str());
      }
    }
  }
}

WordStream::WordStream(std::uint64_t seed, std::uint64_t stream_id, std::vector<double> probs)
    : rng_(seed, stream_id) {
  validate_probs(probs);
  const std::size_t n = probs.size();
  bool equal = true;
  for (double p : probs) equal = equal && p == probs.front();
  if (equal && (n & (n - 1)) == 0) {
    bits_ = 0;
    while ((std::size_t{1} << bits_) < n) ++bits_;
  }
  cdf_.resize(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += probs[i];
    cdf_[i] = acc;
  }
  cdf_.back() = 2.0;  // u < 1 always lands inside
}

WordStream WordStream::fixed(std::vector<int> symbols) {
  WordStream w;
  w.fixed_ = std::move(symbols);
  w.is_fixed_ = true;
  return w;
}

int WordStream::next() {
  if (is_fixed_) {
    require(position_ < fixed_.size(), ErrorKind::insufficient_data, "fixed word exhausted");
    return fixed_[position_++];
  }
  ++position_;
  if (bits_ == 0) return 0;
  if (bits_ > 0) {
    if (bits_left_ < bits_) {
      bitbuf_ = rng_.next_u64();
      bits_left_ = 64 - 64 % bits_;
    }
    const int s = static_cast<int>(bitbuf_ & ((std::uint64_t{1} << bits_) - 1));
    bitbuf_ >>= bits_;
    bits_left_ -= bits_;
    return s;
  }
  const double u = rng_.uniform();
  int i = 0;
  while (u >= cdf_[static_cast<std::size_t>(i)]) ++i;
  return i;
}

PhasePoint apply_map(const MapSpec& m, const PhasePoint& x) {
  require(space_of(x) == m.space(), ErrorKind::phase_space_mismatch,
          "point does not belong to the map's phase space");
  switch (x.index()) {
    case 0: return CirclePoint(m.apply(std::get<CirclePoint>(x).coordinate()));
    case 1: return IntervalPoint(m.apply(std::get<IntervalPoint>(x).coordinate()));
    default: return m.apply(std::get<ProjectivePoint>(x));
  }
}

double derivative(const MapSpec& m, const PhasePoint& x) {
  require(space_of(x) == m.space(), ErrorKind::phase_space_mismatch,
          "point does not belong to the map's phase space");
  switch (x.index()) {
    case 0: return m.derivative(std::get<CirclePoint>(x).coordinate());
    case 1: return m.derivative(std::get<IntervalPoint>(x).coordinate());
    default: return m.derivative(0.0);  // throws: projective maps have no scalar derivative
  }
}

TrajectoryRecord iterate(const SystemSpec& sys, const PhasePoint& x0, WordStream& word,
                         std::size_t n) {
  require(space_of(x0) == sys.space(), ErrorKind::phase_space_mismatch,
          "initial point does not belong to the system's phase space");
  TrajectoryRecord rec;
  rec.points.reserve(n + 1);
  rec.word_prefix.reserve(n);
  rec.points.push_back(x0);
  const bool deriv = sys.has_derivative() && sys.space() != PhaseSpace::projective;
  CompensatedSum acc;
  if (deriv) {
    rec.log_deriv_partial.reserve(n + 1);
    rec.log_deriv_partial.push_back(0.0);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const int i = word.next();
    const MapSpec& m = sys.map(static_cast<std::size_t>(i));
    const PhasePoint& x = rec.points.back();
    if (deriv) {
      acc.add(std::log(derivative(m, x)));
      rec.log_deriv_partial.push_back(acc.value());
    }
    rec.points.push_back(apply_map(m, x));
    rec.word_prefix.push_back(i);
  }
  return rec;
}

SkewState skew_step(const SystemSpec& sys, SkewState state) {
  const int i = state.word.next();
  state.x = apply_map(sys.map(static_cast<std::size_t>(i)), state.x);
  return state;
}

void require_word_budget(std::size_t symbols, std::size_t n, std::uint64_t limit) {
  long double count = 1.0L;
  for (std::size_t k = 0; k < n; ++k) count *= static_cast<long double>(symbols);
  if (count > static_cast<long double>(limit)) {
    std::ostringstream os;
    os << "enumeration of " << symbols << "^" << n << " = " << static_cast<double>(count)
       << " words exceeds the budget of " << limit << " words";
    fail(ErrorKind::budget_exceeded, os.str());
  }
}

void enumerate_words(const SystemSpec& sys, std::size_t n,
                     const std::function<void(std::span<const int>, double)>& visit) {
  require_word_budget(sys.size(), n, kEnumerationLimit);
  const std::size_t symbols = sys.size();
  std::vector<int> word(n, 0);
  std::vector<double> weight(n + 1, 1.0);
  for (std::size_t k = 0; k < n; ++k) weight[k + 1] = weight[k] * sys.probs()[0];
  while (true) {
    visit(word, weight[n]);
    std::size_t k = n;
    while (k > 0 && static_cast<std::size_t>(word[k - 1]) + 1 == symbols) --k;
    if (k == 0) break;
    ++word[k - 1];
    for (std::size_t j = k - 1; j < n; ++j) {
      if (j >= k) word[j] = 0;
      weight[j + 1] = weight[j] * sys.probs()[static_cast<std::size_t>(word[j])];
    }
  }
}

}  // namespace rdsw
