// SPDX-License-Identifier: Apache-2.0
#include "rdsw/pair_tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rdsw/error.hpp"

namespace rdsw {

namespace {

constexpr double kPi = std::numbers::pi;
// Direct/tangent switching thresholds for d >= 3 pairs (hysteresis).
constexpr double kEnterTangent = 1e-4;
constexpr double kLeaveTangent = 1e-2;

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

void normalize(std::span<double> a) noexcept {
  const double inv = 1.0 / norm(a);
  for (double& v : a) v *= inv;
}

}  // namespace

double chart_coordinate(const ProjectivePoint& p) {
  require(p.dim() == 2, ErrorKind::phase_space_mismatch, "chart coordinate needs d = 2");
  return wrap_unit(std::atan2(p[1], p[0]) / kPi);
}

ProjectivePoint chart_point(double x) {
  return ProjectivePoint({std::cos(kPi * x), std::sin(kPi * x)});
}

SystemView::SystemView(const SystemSpec& sys) : dim_(sys.dim()), probs_(sys.probs()) {
  if (sys.space() != PhaseSpace::projective) {
    mode_ = Mode::scalar;
    scalar_space_ = sys.space();
    maps_ = sys.maps();
    return;
  }
  if (sys.dim() == 2) {
    mode_ = Mode::chart;
    scalar_space_ = PhaseSpace::circle;
    for (const auto& m : sys.maps()) maps_.push_back(MapSpec::moebius_chart(m.matrix()));
    return;
  }
  mode_ = Mode::projective;
  for (const auto& m : sys.maps()) matrices_.push_back(m.matrix());
}

double SystemView::to_scalar(const PhasePoint& p) const {
  switch (p.index()) {
    case 0: return std::get<CirclePoint>(p).coordinate();
    case 1: return std::get<IntervalPoint>(p).coordinate();
    default:
      require(mode_ == Mode::chart, ErrorKind::phase_space_mismatch,
              "projective point has no scalar coordinate for d >= 3");
      return chart_coordinate(std::get<ProjectivePoint>(p));
  }
}

double SystemView::scalar_distance(double x, double y) const noexcept {
  if (scalar_space_ == PhaseSpace::interval) return std::fabs(x - y);
  const double d = circle_distance(x, y);
  return mode_ == Mode::chart ? std::sin(kPi * d) : d;
}

double SystemView::distance_from_gap(double abs_delta) const noexcept {
  if (scalar_space_ == PhaseSpace::interval) return abs_delta;
  const double d = std::min(abs_delta, 1.0 - abs_delta);
  return mode_ == Mode::chart ? std::sin(kPi * d) : d;
}

double tangent_pair_distance(std::span<const double> c, std::span<const double> s,
                             std::span<const double> t) {
  // (c + s) ^ (c + t) = c ^ (t - s) + s ^ t, evaluated minor by minor.
  const std::size_t d = c.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const double vi = t[i] - s[i], vj = t[j] - s[j];
      const double m = (c[i] * vj - c[j] * vi) + (s[i] * t[j] - s[j] * t[i]);
      sum += m * m;
    }
  }
  const double ns = 1.0 + dot(s, s), nt = 1.0 + dot(t, t);
  return std::min(1.0, std::sqrt(sum / (ns * nt)));
}

bool push_tangent(const Matrix& a, std::span<const double> c_new, double scale,
                  std::span<double> t, std::span<double> scratch) {
  multiply(a, t, scratch);
  for (double& v : scratch) v /= scale;
  const double beta = dot(scratch, c_new);
  const double denom = 1.0 + beta;
  if (!(std::fabs(denom) > 1e-12)) return false;
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = (scratch[i] - beta * c_new[i]) / denom;
  return std::isfinite(norm(t));
}

PairTracker::PairTracker(const SystemView& view, const PhasePoint& x, const PhasePoint& y)
    : view_(&view) {
  require(x.index() == y.index(), ErrorKind::phase_space_mismatch,
          "paired points live in different phase spaces");
  if (view.mode() != SystemView::Mode::projective) {
    const double a = view.to_scalar(x), b = view.to_scalar(y);
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double g = hi - lo;
    if (view.scalar_space() == PhaseSpace::circle && g > 0.5) {
      arc_ = ArcTracker(PhaseSpace::circle, hi, 1.0 - g);
    } else {
      arc_ = ArcTracker(view.scalar_space(), lo, g);
    }
    d0_ = view.distance_from_gap(std::fabs(arc_.delta()));
    return;
  }
  const auto& px = std::get<ProjectivePoint>(x);
  const auto& py = std::get<ProjectivePoint>(y);
  require(px.dim() == view.dim() && py.dim() == view.dim(), ErrorKind::phase_space_mismatch,
          "projective dimension does not match the system");
  const auto rx = px.representative(), ry = py.representative();
  const bool swap = std::lexicographical_compare(ry.begin(), ry.end(), rx.begin(), rx.end());
  p_.assign((swap ? ry : rx).begin(), (swap ? ry : rx).end());
  q_.assign((swap ? rx : ry).begin(), (swap ? rx : ry).end());
  work_.assign(view.dim(), 0.0);
  scratch_.assign(view.dim(), 0.0);
  d0_ = projective_distance(px, py);
  proj_distance_ = d0_;
  if (d0_ < kEnterTangent) projective_normalize();
}

void PairTracker::projective_normalize() {
  // Enter tangent mode: q <- q / <q, p> - p.
  const double c = dot(q_, p_);
  for (std::size_t i = 0; i < q_.size(); ++i) q_[i] = q_[i] / c - p_[i];
  tangent_mode_ = true;
  const double nt = norm(q_);
  proj_distance_ = nt / std::sqrt(1.0 + nt * nt);
}

void PairTracker::step(int symbol) {
  if (view_->mode() != SystemView::Mode::projective) {
    arc_.step(view_->scalar_map(symbol));
    if (view_->scalar_space() == PhaseSpace::circle && std::fabs(arc_.delta()) > 0.5) {
      arc_.recenter();
    }
    return;
  }
  const Matrix& a = view_->matrix(symbol);
  multiply(a, p_, work_);
  const double scale = norm(work_);
  for (std::size_t i = 0; i < p_.size(); ++i) p_[i] = work_[i] / scale;
  if (tangent_mode_) {
    const bool ok = push_tangent(a, p_, scale, q_, scratch_);
    const double nt = ok ? norm(q_) : INFINITY;
    if (ok && nt <= kLeaveTangent) {
      proj_distance_ = nt / std::sqrt(1.0 + nt * nt);
      return;
    }
    require(ok, ErrorKind::overflow_guard, "tangent pair left the affine chart in one step");
    for (std::size_t i = 0; i < q_.size(); ++i) q_[i] += p_[i];
    normalize(q_);
    tangent_mode_ = false;
  } else {
    multiply(a, q_, work_);
    q_ = work_;
    normalize(q_);
  }
  proj_distance_ = std::min(1.0, wedge_norm(p_, q_));
  if (proj_distance_ < kEnterTangent) projective_normalize();
}

double PairTracker::distance() const noexcept {
  if (view_->mode() == SystemView::Mode::projective) return proj_distance_;
  return view_->distance_from_gap(std::fabs(arc_.delta()));
}

double PairTracker::log_ratio() const noexcept {
  if (view_->mode() == SystemView::Mode::scalar) return arc_.log_ratio();
  return std::log(distance() / d0_);
}

bool PairTracker::censored() const noexcept {
  if (view_->mode() == SystemView::Mode::projective) return proj_distance_ < kCensorFloor;
  return arc_.censored();
}

}  // namespace rdsw
