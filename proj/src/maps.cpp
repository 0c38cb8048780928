// SPDX-License-Identifier: Apache-2.0
#include "rdsw/maps.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rdsw/error.hpp"
#include "rdsw/numerics.hpp"

namespace rdsw {

namespace {
constexpr double kPi = std::numbers::pi;
}

// Periodically extended Hermite segments in local power form
// p_j(s) = c0 + c1 s + c2 s^2 + c3 s^3, s = x - node[j].
struct MapSpec::Table {
  KnotTable source;
  std::vector<double> node;  // extended abscissae, node.front() < 0 <= ... < 1 <= node.back()
  std::vector<std::array<double, 4>> coef;
  bool has_derivative = false;

  std::size_t segment(double x) const {
    // x in [0, 1); first node is x_last - 1 <= 0.
    auto it = std::upper_bound(node.begin(), node.end(), x);
    std::size_t j = static_cast<std::size_t>(it - node.begin());
    j = j == 0 ? 0 : j - 1;
    return std::min(j, coef.size() - 1);
  }

  double eval(double x) const {  // lift on [0, 1)
    const std::size_t j = segment(x);
    const double s = x - node[j];
    const auto& c = coef[j];
    return c[0] + s * (c[1] + s * (c[2] + s * c[3]));
  }

  double slope(double x) const {
    const std::size_t j = segment(x);
    const double s = x - node[j];
    const auto& c = coef[j];
    return c[1] + s * (2.0 * c[2] + 3.0 * s * c[3]);
  }

  // F(x + delta) - F(x) for delta >= 0, x in [0, 1), summing in-segment
  // divided differences so that no large values cancel.
  double forward_difference(double x, double delta) const {
    double total = 0.0;
    double a = x;
    double remaining = delta;
    int guard = 0;
    while (remaining > 0.0 && guard++ < 1 << 20) {
      if (a >= 1.0) a -= 1.0;
      const std::size_t j = segment(a);
      const double s = a - node[j];
      const double room = node[j + 1] - a;
      const double step = room > 0.0 ? std::min(remaining, room) : remaining;
      const auto& c = coef[j];
      total += step * (c[1] + c[2] * (2.0 * s + step) + c[3] * (3.0 * s * s + 3.0 * s * step + step * step));
      remaining -= step;
      a = node[j + 1];
      if (room <= 0.0) break;
    }
    return total;
  }
};

const char* to_string(MapFamily family) noexcept {
  switch (family) {
    case MapFamily::affine_interval: return "affine_interval";
    case MapFamily::rotation: return "rotation";
    case MapFamily::moebius_circle: return "moebius_circle";
    case MapFamily::perturbed_rotation: return "perturbed_rotation";
    case MapFamily::tabulated_monotone: return "tabulated_monotone";
    case MapFamily::projective_linear: return "projective_linear";
  }
  return "?";
}

MapSpec MapSpec::affine(double a, double b) {
  require(std::isfinite(a) && std::isfinite(b) && a != 0.0, ErrorKind::invalid_argument,
          "affine map needs finite a != 0 and finite b");
  const double lo = std::min(b, a + b), hi = std::max(b, a + b);
  require(lo >= 0.0 && hi <= 1.0, ErrorKind::invalid_argument,
          "affine map must send [0,1] into [0,1]");
  MapSpec m;
  m.family_ = MapFamily::affine_interval;
  m.p_ = {a, b, 0.0, 0.0};
  return m;
}

MapSpec MapSpec::rotation(double c) {
  require(std::isfinite(c), ErrorKind::invalid_argument, "rotation angle not finite");
  MapSpec m;
  m.family_ = MapFamily::rotation;
  m.p_ = {c, 0.0, 0.0, 0.0};
  return m;
}

MapSpec MapSpec::moebius_chart(const Matrix& mat) {
  require(mat.rows() == 2 && mat.cols() == 2, ErrorKind::invalid_argument,
          "moebius map needs a 2x2 matrix");
  const double det = determinant(mat);
  require(std::fabs(det) > 1e-12 && std::isfinite(det), ErrorKind::invalid_argument,
          "moebius matrix must be invertible");
  MapSpec m;
  m.family_ = MapFamily::moebius_circle;
  m.p_ = {det, 0.0, 0.0, 0.0};
  m.matrix_ = std::make_shared<const Matrix>(mat);
  return m;
}

MapSpec MapSpec::moebius(const Matrix& mat) {
  MapSpec m = moebius_chart(mat);
  require(m.p_[0] > 0.0, ErrorKind::invalid_argument, "moebius matrix must have det > 0");
  return m;
}

MapSpec MapSpec::perturbed_rotation(double c, double amp, int harmonic, double shift) {
  require(std::isfinite(c) && std::isfinite(amp) && std::isfinite(shift),
          ErrorKind::invalid_argument, "perturbed rotation parameters not finite");
  require(std::fabs(amp) < 1.0, ErrorKind::invalid_argument,
          "perturbed rotation needs |amp| < 1 so that 1 + amp cos stays positive");
  require(harmonic >= 1, ErrorKind::invalid_argument, "perturbed rotation harmonic must be >= 1");
  MapSpec m;
  m.family_ = MapFamily::perturbed_rotation;
  m.p_ = {c, amp, shift, 0.0};
  m.harmonic_ = harmonic;
  return m;
}

MapSpec MapSpec::tabulated(KnotTable knots) {
  const std::size_t n = knots.x.size();
  require(n >= 2 && knots.y.size() == n, ErrorKind::invalid_argument,
          "tabulated map needs at least two knots with matching values");
  require(knots.slopes.empty() || knots.slopes.size() == n, ErrorKind::invalid_argument,
          "tabulated map slopes must be empty or one per knot");
  for (std::size_t i = 0; i < n; ++i) {
    require(knots.x[i] >= 0.0 && knots.x[i] < 1.0, ErrorKind::invalid_argument,
            "tabulated knots must lie in [0,1)");
    if (i > 0) {
      require(knots.x[i] > knots.x[i - 1], ErrorKind::invalid_argument,
              "tabulated knots must increase strictly");
      require(knots.y[i] > knots.y[i - 1], ErrorKind::invalid_argument,
              "tabulated values must increase strictly (monotone lift)");
    }
  }
  require(knots.y.back() < knots.y.front() + 1.0, ErrorKind::invalid_argument,
          "tabulated lift must have degree one (values.back() < values.front() + 1)");
  for (double s : knots.slopes)
    require(s > 0.0 && std::isfinite(s), ErrorKind::invalid_argument,
            "tabulated slopes must be positive");

  auto t = std::make_shared<Table>();
  t->source = knots;
  t->has_derivative = !knots.slopes.empty();
  std::vector<double> X, Y;
  X.push_back(knots.x.back() - 1.0);
  Y.push_back(knots.y.back() - 1.0);
  X.insert(X.end(), knots.x.begin(), knots.x.end());
  Y.insert(Y.end(), knots.y.begin(), knots.y.end());
  X.push_back(knots.x.front() + 1.0);
  Y.push_back(knots.y.front() + 1.0);
  const std::size_t m = X.size();
  std::vector<double> M(m);
  if (t->has_derivative) {
    M[0] = knots.slopes.back();
    for (std::size_t i = 0; i < n; ++i) M[i + 1] = knots.slopes[i];
    M[m - 1] = knots.slopes.front();
  } else {
    // Fritsch-Butland weighted harmonic mean of adjacent secants; positive
    // secants give a monotone interpolant.
    std::vector<double> h(m - 1), d(m - 1);
    for (std::size_t i = 0; i + 1 < m; ++i) {
      h[i] = X[i + 1] - X[i];
      d[i] = (Y[i + 1] - Y[i]) / h[i];
    }
    auto interior = [&](std::size_t i) {  // node i with neighbours i-1, i
      return 3.0 * (h[i - 1] + h[i]) /
             ((2.0 * h[i] + h[i - 1]) / d[i - 1] + (h[i] + 2.0 * h[i - 1]) / d[i]);
    };
    for (std::size_t i = 1; i + 1 < m; ++i) M[i] = interior(i);
    M[0] = M[m - 2];
    M[m - 1] = M[1];
  }
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double h = X[i + 1] - X[i];
    const double dy = Y[i + 1] - Y[i];
    const double c2 = (3.0 * dy / h - 2.0 * M[i] - M[i + 1]) / h;
    const double c3 = (M[i] + M[i + 1] - 2.0 * dy / h) / (h * h);
    t->coef.push_back({Y[i], M[i], c2, c3});
  }
  t->node = std::move(X);
  MapSpec map;
  map.family_ = MapFamily::tabulated_monotone;
  map.table_ = std::move(t);
  return map;
}

MapSpec MapSpec::projective(const Matrix& mat) {
  require(mat.rows() == mat.cols() && mat.rows() >= 2 && mat.rows() <= kMaxProjectiveDim,
          ErrorKind::invalid_argument, "projective map needs a square matrix of size 2..8");
  const double det = determinant(mat);
  require(std::fabs(det) > 1e-12, ErrorKind::invalid_argument,
          "projective map matrix must be invertible (|det| > 1e-12)");
  MapSpec m;
  m.family_ = MapFamily::projective_linear;
  m.p_ = {det, 0.0, 0.0, 0.0};
  m.matrix_ = std::make_shared<const Matrix>(mat);
  return m;
}

PhaseSpace MapSpec::space() const noexcept {
  switch (family_) {
    case MapFamily::affine_interval: return PhaseSpace::interval;
    case MapFamily::projective_linear: return PhaseSpace::projective;
    default: return PhaseSpace::circle;
  }
}

bool MapSpec::has_derivative() const noexcept {
  switch (family_) {
    case MapFamily::tabulated_monotone: return table_->has_derivative;
    case MapFamily::projective_linear: return false;
    default: return true;
  }
}

bool MapSpec::orientation_preserving() const noexcept {
  switch (family_) {
    case MapFamily::affine_interval: return p_[0] > 0.0;
    case MapFamily::moebius_circle:
    case MapFamily::projective_linear: return p_[0] > 0.0;
    default: return true;
  }
}

double MapSpec::apply(double x) const {
  switch (family_) {
    case MapFamily::affine_interval: return std::clamp(p_[0] * x + p_[1], 0.0, 1.0);
    case MapFamily::rotation: return wrap_unit(x + p_[0]);
    case MapFamily::perturbed_rotation: {
      const double k = harmonic_;
      return wrap_unit(x + p_[0] + p_[1] / (2.0 * kPi * k) * std::sin(2.0 * kPi * k * (x - p_[2])));
    }
    case MapFamily::moebius_circle: {
      const Matrix& a = *matrix_;
      const double c = std::cos(kPi * x), s = std::sin(kPi * x);
      const double w0 = a(0, 0) * c + a(0, 1) * s;
      const double w1 = a(1, 0) * c + a(1, 1) * s;
      return wrap_unit(std::atan2(w1, w0) / kPi);
    }
    case MapFamily::tabulated_monotone: return wrap_unit(table_->eval(x));
    case MapFamily::projective_linear: break;
  }
  fail(ErrorKind::phase_space_mismatch, "scalar point passed to a projective map");
}

double MapSpec::derivative(double x) const {
  switch (family_) {
    case MapFamily::affine_interval: return std::fabs(p_[0]);
    case MapFamily::rotation: return 1.0;
    case MapFamily::perturbed_rotation:
      return 1.0 + p_[1] * std::cos(2.0 * kPi * harmonic_ * (x - p_[2]));
    case MapFamily::moebius_circle: {
      const Matrix& a = *matrix_;
      const double c = std::cos(kPi * x), s = std::sin(kPi * x);
      const double w0 = a(0, 0) * c + a(0, 1) * s;
      const double w1 = a(1, 0) * c + a(1, 1) * s;
      return std::fabs(p_[0]) / (w0 * w0 + w1 * w1);
    }
    case MapFamily::tabulated_monotone:
      require(table_->has_derivative, ErrorKind::unsupported,
              "derivative query on a tabulated map without supplied node derivatives");
      return table_->slope(x);
    case MapFamily::projective_linear: break;
  }
  fail(ErrorKind::unsupported, "derivative query on a projective map");
}

double MapSpec::difference_ratio(double x, double delta) const {
  switch (family_) {
    case MapFamily::affine_interval: return p_[0];
    case MapFamily::rotation: return 1.0;
    case MapFamily::perturbed_rotation: {
      const double k = harmonic_;
      const double theta = 2.0 * kPi * k * (x - p_[2]);
      const double u = kPi * k * delta;
      return 1.0 + p_[1] * std::cos(theta + u) * sinc(u);
    }
    case MapFamily::moebius_circle: {
      const Matrix& a = *matrix_;
      const double c = std::cos(kPi * x), s = std::sin(kPi * x);
      const double v0 = a(0, 0) * c + a(0, 1) * s;
      const double v1 = a(1, 0) * c + a(1, 1) * s;
      if (delta == 0.0) return p_[0] / (v0 * v0 + v1 * v1);
      const double c2 = std::cos(kPi * (x + delta)), s2 = std::sin(kPi * (x + delta));
      const double w0 = a(0, 0) * c2 + a(0, 1) * s2;
      const double w1 = a(1, 0) * c2 + a(1, 1) * s2;
      // Angle from Av to Aw; the wedge equals det * sin(pi delta).
      const double angle = std::atan2(p_[0] * std::sin(kPi * delta), v0 * w0 + v1 * w1);
      return angle / (kPi * delta);
    }
    case MapFamily::tabulated_monotone: {
      if (delta == 0.0) return table_->slope(x);
      if (delta > 0.0) return table_->forward_difference(x, delta) / delta;
      return table_->forward_difference(wrap_unit(x + delta), -delta) / -delta;
    }
    case MapFamily::projective_linear: break;
  }
  fail(ErrorKind::phase_space_mismatch, "scalar difference on a projective map");
}

ProjectivePoint MapSpec::apply(const ProjectivePoint& p) const {
  require(family_ == MapFamily::projective_linear, ErrorKind::phase_space_mismatch,
          "projective point passed to a one-dimensional map");
  require(p.dim() == matrix_->rows(), ErrorKind::phase_space_mismatch,
          "projective dimension does not match the map");
  std::vector<double> out(p.dim());
  multiply(*matrix_, p.representative(), out);
  return ProjectivePoint(std::move(out));
}

void MapSpec::apply_linear(std::span<const double> v, std::span<double> out) const {
  require(family_ == MapFamily::projective_linear || family_ == MapFamily::moebius_circle,
          ErrorKind::unsupported, "linear action requested from a non-matrix map");
  multiply(*matrix_, v, out);
}

const Matrix& MapSpec::matrix() const {
  require(matrix_ != nullptr, ErrorKind::unsupported, "map has no matrix");
  return *matrix_;
}

std::size_t MapSpec::dim() const noexcept {
  if (family_ == MapFamily::projective_linear) return matrix_->rows();
  return 1;
}

const KnotTable& MapSpec::knots() const {
  require(table_ != nullptr, ErrorKind::unsupported, "map has no knot table");
  return table_->source;
}

std::string MapSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << to_string(family_) << '(';
  switch (family_) {
    case MapFamily::affine_interval: os << "a=" << p_[0] << ", b=" << p_[1]; break;
    case MapFamily::rotation: os << "c=" << p_[0]; break;
    case MapFamily::perturbed_rotation:
      os << "c=" << p_[0] << ", amp=" << p_[1] << ", harmonic=" << harmonic_ << ", shift=" << p_[2];
      break;
    case MapFamily::tabulated_monotone: os << table_->source.x.size() << " knots"; break;
    case MapFamily::moebius_circle:
    case MapFamily::projective_linear: {
      const Matrix& a = *matrix_;
      os << '[';
      for (std::size_t i = 0; i < a.rows(); ++i) {
        os << (i ? "; " : "");
        for (std::size_t j = 0; j < a.cols(); ++j) os << (j ? " " : "") << a(i, j);
      }
      os << ']';
      break;
    }
  }
  os << ')';
  return os.str();
}

}  // namespace rdsw
