// SPDX-License-Identifier: Apache-2.0
#include "rdsw/operator_analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <ostream>

#include "rdsw/error.hpp"
#include "rdsw/io.hpp"
#include "rdsw/numerics.hpp"
#include "rdsw/parallel.hpp"
#include "rdsw/rng.hpp"

namespace rdsw {

UlamOperator::UlamOperator(Kind kind, std::size_t k, std::size_t blocks,
                           std::vector<std::size_t> row_ptr, std::vector<std::size_t> cols,
                           std::vector<double> vals, bool quadrature_fallback)
    : kind_(kind),
      k_(k),
      blocks_(blocks),
      row_ptr_(std::move(row_ptr)),
      cols_(std::move(cols)),
      vals_(std::move(vals)),
      quadrature_fallback_(quadrature_fallback) {
  require(row_ptr_.size() == size() + 1 && row_ptr_.back() == vals_.size() &&
              cols_.size() == vals_.size(),
          ErrorKind::invalid_argument, "malformed CSR operator");
}

double UlamOperator::entry(std::size_t r, std::size_t c) const noexcept {
  const auto b = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]);
  const auto e = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]);
  const auto it = std::lower_bound(b, e, c);
  return it != e && *it == c ? vals_[static_cast<std::size_t>(it - cols_.begin())] : 0.0;
}

double UlamOperator::row_sum_error() const noexcept {
  double worst = 0.0;
  for (std::size_t r = 0; r < size(); ++r) {
    CompensatedSum s;
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) s.add(vals_[p]);
    worst = std::max(worst, std::fabs(s.value() - 1.0));
  }
  return worst;
}

void UlamOperator::apply(std::span<const double> v, std::span<double> out) const {
  for (std::size_t r = 0; r < size(); ++r) {
    double s = 0.0;
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) s += vals_[p] * v[cols_[p]];
    out[r] = s;
  }
}

void UlamOperator::apply_adjoint(std::span<const double> v, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t r = 0; r < size(); ++r) {
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) out[cols_[p]] += v[r] * vals_[p];
  }
}

std::vector<double> UlamOperator::dense() const {
  const std::size_t n = size();
  std::vector<double> a(n * n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) a[r * n + cols_[p]] = vals_[p];
  }
  return a;
}

namespace {

void require_ulam_input(const SystemSpec& sys, std::size_t k) {
  require(sys.space() != PhaseSpace::projective, ErrorKind::unsupported,
          "Ulam operators are implemented for circle and interval systems");
  require(k >= 2 && k <= (1u << 16) && (k & (k - 1)) == 0, ErrorKind::invalid_argument,
          "k_cells must be a power of two in [2, 2^16]");
}

std::size_t cell_of(double y, PhaseSpace space, std::size_t k) {
  const double u = space == PhaseSpace::circle ? y - std::floor(y) : std::clamp(y, 0.0, 1.0);
  const auto c = static_cast<std::size_t>(u * static_cast<double>(k));
  return std::min(c, k - 1);
}

CellRow merge_row(std::vector<std::pair<std::size_t, double>>& parts) {
  std::sort(parts.begin(), parts.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  CellRow row;
  for (const auto& [c, v] : parts) {
    if (v <= 0.0) continue;
    if (!row.cols.empty() && row.cols.back() == c) {
      row.vals.back() += v;
    } else {
      row.cols.push_back(c);
      row.vals.push_back(v);
    }
  }
  return row;
}

bool monotone_on_cells(const MapSpec& f, std::size_t k) {
  constexpr int kSub = 16;
  int sign = 0;
  for (std::size_t a = 0; a < k; ++a) {
    for (int s = 0; s < kSub; ++s) {
      const double h = 1.0 / (static_cast<double>(k) * kSub);
      const double x = static_cast<double>(a) / static_cast<double>(k) + s * h;
      const double r = f.difference_ratio(x, h);
      const int sg = r > 0.0 ? 1 : (r < 0.0 ? -1 : 0);
      if (sg == 0 || (sign != 0 && sg != sign)) return false;
      sign = sg;
    }
  }
  return true;
}

CellRow exact_row(const MapSpec& f, PhaseSpace space, std::size_t k, std::size_t a) {
  const double dk = static_cast<double>(k);
  const double u = static_cast<double>(a) / dk, v = static_cast<double>(a + 1) / dk;
  const double base = f.apply(u);
  // Lift of f on [u, v]; monotone.
  auto G = [&](double t) { return t == u ? base : base + (t - u) * f.difference_ratio(u, t - u); };
  const double gv = G(v);
  const bool up = gv > base;
  const double lo = std::min(base, gv), hi = std::max(base, gv);
  std::vector<double> cuts{u, v};
  for (double m = std::floor(lo * dk) + 1.0; m < hi * dk; m += 1.0) {
    const double c = m / dk;
    if (!(c > lo && c < hi)) continue;
    double tl = u, th = v;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (tl + th);
      if (mid <= tl || mid >= th) break;
      ((G(mid) < c) == up ? tl : th) = mid;
    }
    cuts.push_back(0.5 * (tl + th));
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::pair<std::size_t, double>> parts;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double len = cuts[i + 1] - cuts[i];
    if (len <= 0.0) continue;
    parts.emplace_back(cell_of(G(0.5 * (cuts[i] + cuts[i + 1])), space, k), len / (v - u));
  }
  return merge_row(parts);
}

CellRow quadrature_row(const MapSpec& f, PhaseSpace space, std::size_t k, std::size_t a) {
  constexpr int kSamples = 64;
  const double dk = static_cast<double>(k);
  std::vector<std::pair<std::size_t, double>> parts;
  for (int s = 0; s < kSamples; ++s) {
    const double x = (static_cast<double>(a) + (s + 0.5) / kSamples) / dk;
    parts.emplace_back(cell_of(f.apply(x), space, k), 1.0 / kSamples);
  }
  return merge_row(parts);
}

UlamOperator assemble(UlamOperator::Kind kind, std::size_t k, std::size_t blocks,
                      std::vector<CellRow> rows, bool fallback) {
  std::vector<std::size_t> row_ptr{0}, cols;
  std::vector<double> vals;
  for (auto& r : rows) {
    cols.insert(cols.end(), r.cols.begin(), r.cols.end());
    vals.insert(vals.end(), r.vals.begin(), r.vals.end());
    row_ptr.push_back(vals.size());
  }
  return UlamOperator(kind, k, blocks, std::move(row_ptr), std::move(cols), std::move(vals),
                      fallback);
}

std::vector<std::vector<CellRow>> all_overlaps(const SystemSpec& sys, std::size_t k,
                                               bool& fallback, int threads) {
  std::vector<std::vector<CellRow>> per(sys.size());
  fallback = false;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const bool exact = monotone_on_cells(sys.map(i), k);
    fallback = fallback || !exact;
    per[i].resize(k);
    parallel_for(k, threads, [&](std::size_t a) {
      per[i][a] = exact ? exact_row(sys.map(i), sys.space(), k, a)
                        : quadrature_row(sys.map(i), sys.space(), k, a);
    });
  }
  return per;
}

}  // namespace

std::vector<CellRow> map_overlaps(const MapSpec& f, PhaseSpace space, std::size_t k,
                                  bool* used_quadrature) {
  const bool exact = monotone_on_cells(f, k);
  if (used_quadrature) *used_quadrature = !exact;
  std::vector<CellRow> rows(k);
  for (std::size_t a = 0; a < k; ++a) {
    rows[a] = exact ? exact_row(f, space, k, a) : quadrature_row(f, space, k, a);
  }
  return rows;
}

UlamOperator build_transfer_ulam(const SystemSpec& sys, std::size_t k, int threads) {
  require_ulam_input(sys, k);
  bool fallback = false;
  const auto per = all_overlaps(sys, k, fallback, threads);
  std::vector<CellRow> rows(k);
  for (std::size_t a = 0; a < k; ++a) {
    std::vector<std::pair<std::size_t, double>> parts;
    for (std::size_t i = 0; i < sys.size(); ++i) {
      const auto& r = per[i][a];
      for (std::size_t p = 0; p < r.cols.size(); ++p) {
        parts.emplace_back(r.cols[p], sys.probs()[i] * r.vals[p]);
      }
    }
    rows[a] = merge_row(parts);
  }
  return assemble(UlamOperator::Kind::transfer, k, 1, std::move(rows), fallback);
}

UlamOperator build_laplace_markov(const SystemSpec& sys, std::size_t k, int threads) {
  require_ulam_input(sys, k);
  bool fallback = false;
  const auto per = all_overlaps(sys, k, fallback, threads);
  const std::size_t N = sys.size();
  std::vector<CellRow> rows(N * k);
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t a = 0; a < k; ++a) {
      CellRow& row = rows[j * k + a];
      const auto& t = per[j][a];
      for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t p = 0; p < t.cols.size(); ++p) {
          row.cols.push_back(i * k + t.cols[p]);
          row.vals.push_back(sys.probs()[i] * t.vals[p]);
        }
      }
    }
  }
  return assemble(UlamOperator::Kind::laplace_markov, k, N, std::move(rows), fallback);
}

LeadingEigen leading_eigen(const UlamOperator& op, double tol, std::size_t max_iter) {
  const std::size_t n = op.size();
  LeadingEigen out;
  std::vector<double> v(n, 1.0 / static_cast<double>(n)), w(n);
  auto residual = [&] {
    op.apply_adjoint(v, w);
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) r += std::fabs(w[i] - v[i]);
    return r;
  };
  out.residual = residual();
  while (out.residual > tol && out.iterations < max_iter) {
    CompensatedSum mass;
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = 0.5 * (v[i] + w[i]);
      mass.add(v[i]);
    }
    const double m = mass.value();
    for (double& x : v) x /= m;
    ++out.iterations;
    out.residual = residual();
  }
  out.converged = out.residual <= tol;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += w[i] * v[i];
    den += v[i] * v[i];
  }
  out.eigenvalue = num / den;
  out.vector = std::move(v);
  return out;
}

namespace {

void sort_spectrum(std::vector<std::complex<double>>& ev) {
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
    const double ma = std::abs(a), mb = std::abs(b);
    if (ma != mb) return ma > mb;
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
}

}  // namespace

SpectrumReport spectral_gap(const UlamOperator& op, std::size_t m_eigs) {
  require(m_eigs >= 2, ErrorKind::invalid_argument, "spectral_gap needs m_eigs >= 2");
  const std::size_t n = op.size();
  require(n >= 2, ErrorKind::invalid_argument, "spectral_gap needs an operator of size >= 2");
  SpectrumReport rep;
  std::vector<std::complex<double>> ev;
  if (n <= kDenseEigenLimit) {
    const auto a = op.dense();
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        m(a.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::EigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(m), false);
    require(es.info() == Eigen::Success, ErrorKind::insufficient_data,
            "dense eigensolve did not converge");
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) ev.push_back(es.eigenvalues()[i]);
    rep.dense = true;
  } else {
    // Block subspace iteration on the function side with Rayleigh-Ritz.
    const std::size_t b = std::min(n, m_eigs + 4);
    Eigen::MatrixXd V(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(b));
    StreamRng rng(0x5ba11e, streams::kAux + 7);
    for (Eigen::Index c = 0; c < V.cols(); ++c) {
      for (Eigen::Index r = 0; r < V.rows(); ++r) V(r, c) = rng.normal();
    }
    Eigen::MatrixXd W(V.rows(), V.cols());
    auto multiply_block = [&] {
      for (Eigen::Index c = 0; c < V.cols(); ++c) {
        op.apply(std::span<const double>(V.col(c).data(), n), std::span<double>(W.col(c).data(), n));
      }
    };
    for (int it = 0; it < 400; ++it) {
      multiply_block();
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(W);
      V = qr.householderQ() * Eigen::MatrixXd::Identity(W.rows(), W.cols());
    }
    multiply_block();
    const Eigen::MatrixXd H = V.transpose() * W;
    Eigen::EigenSolver<Eigen::MatrixXd> es(H, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) ev.push_back(es.eigenvalues()[i]);
    rep.dense = false;
  }
  sort_spectrum(ev);
  ev.resize(std::min(ev.size(), m_eigs));
  rep.values = ev;
  for (const auto& z : ev) rep.moduli.push_back(std::abs(z));
  rep.gap = 1.0 - rep.moduli[1];
  return rep;
}

QnIdentity qn_identity_test(const SystemSpec& sys, const SymbolObservable& phi, int j, double x,
                            std::size_t n, std::size_t replicas, std::uint64_t seed,
                            int threads) {
  require(sys.space() != PhaseSpace::projective, ErrorKind::unsupported,
          "qn_identity_test is implemented for circle and interval systems");
  require(n >= 1 && n <= 20, ErrorKind::invalid_argument, "qn_identity_test needs 1 <= n <= 20");
  require(j >= 0 && static_cast<std::size_t>(j) < sys.size(), ErrorKind::invalid_argument,
          "symbol j out of range");
  require(replicas >= 2, ErrorKind::insufficient_data, "qn_identity_test needs replicas >= 2");
  require_word_budget(sys.size(), n, kEnumerationLimit);
  const double y0 = sys.map(static_cast<std::size_t>(j)).apply(x);
  auto last = [&](double y) {
    double s = 0.0;
    for (std::size_t i = 0; i < sys.size(); ++i) s += sys.probs()[i] * phi(static_cast<int>(i), y);
    return s;
  };
  const auto shards = walk_words_sharded<CompensatedSum>(
      sys.probs(), n - 1, y0,
      [&](double y, int i) { return sys.map(static_cast<std::size_t>(i)).apply(y); },
      [&](CompensatedSum& acc, double y, double w) { acc.add(w * last(y)); },
      [] { return CompensatedSum{}; }, threads);
  CompensatedSum kernel;
  for (const auto& s : shards) kernel.add(s.value());

  std::vector<double> vals(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    WordStream word(seed, streams::kReplica + r, sys.probs());
    double y = y0;
    for (std::size_t k = 1; k < n; ++k) y = sys.map(static_cast<std::size_t>(word.next())).apply(y);
    vals[r] = phi(word.next(), y);
  });
  RunningStats st;
  for (double v : vals) st.add(v);
  QnIdentity out;
  out.kernel_value = kernel.value();
  out.monte_carlo_value = st.mean();
  out.stderr_ = st.stderr_of_mean();
  const double gap = out.monte_carlo_value - out.kernel_value;
  if (out.stderr_ > 0.0) {
    out.z_score = gap / out.stderr_;
  } else {
    out.z_score = std::fabs(gap) <= 1e-12 ? 0.0 : (gap > 0 ? INFINITY : -INFINITY);
  }
  out.pass = std::fabs(out.z_score) < 4.0;
  return out;
}

HolderNormEstimate holder_norm(const SymbolObservable& phi, std::size_t symbols, double alpha,
                               std::size_t grid_k) {
  require(alpha > 0.0 && alpha <= 1.0, ErrorKind::invalid_argument, "alpha must lie in (0, 1]");
  require(grid_k >= 2 && grid_k <= 4096, ErrorKind::invalid_argument,
          "holder_norm grid must have 2..4096 points");
  require(symbols >= 1, ErrorKind::invalid_argument, "holder_norm needs at least one symbol");
  HolderNormEstimate est;
  est.alpha = alpha;
  const double dk = static_cast<double>(grid_k);
  std::vector<double> pw(grid_k / 2 + 1);
  for (std::size_t m = 1; m < pw.size(); ++m) pw[m] = std::pow(static_cast<double>(m) / dk, alpha);
  std::vector<double> v(grid_k);
  for (std::size_t j = 0; j < symbols; ++j) {
    for (std::size_t g = 0; g < grid_k; ++g) {
      v[g] = phi(static_cast<int>(j), static_cast<double>(g) / dk);
      est.sup_norm = std::max(est.sup_norm, std::fabs(v[g]));
    }
    for (std::size_t a = 0; a < grid_k; ++a) {
      for (std::size_t b = a + 1; b < grid_k; ++b) {
        const std::size_t m = std::min(b - a, grid_k - (b - a));
        est.seminorm_alpha = std::max(est.seminorm_alpha, std::fabs(v[a] - v[b]) / pw[m]);
      }
    }
  }
  return est;
}

double ulam_gamma(const SystemSpec& sys, const UlamOperator& transfer,
                  const std::vector<double>& stationary) {
  require(sys.has_derivative(), ErrorKind::unsupported, "ulam_gamma needs derivative data");
  require(transfer.kind() == UlamOperator::Kind::transfer && stationary.size() == transfer.size(),
          ErrorKind::invalid_argument, "ulam_gamma needs a transfer operator and its eigenvector");
  static constexpr double kNodes[4] = {-0.8611363115940526, -0.3399810435848563,
                                       0.3399810435848563, 0.8611363115940526};
  static constexpr double kWeights[4] = {0.3478548451374538, 0.6521451548625461,
                                         0.6521451548625461, 0.3478548451374538};
  const std::size_t k = transfer.cells();
  const double half = 0.5 / static_cast<double>(k);
  CompensatedSum total;
  for (std::size_t a = 0; a < k; ++a) {
    const double mid = (static_cast<double>(a) + 0.5) / static_cast<double>(k);
    double avg = 0.0;
    for (int q = 0; q < 4; ++q) {
      const double z = mid + half * kNodes[q];
      double g = 0.0;
      for (std::size_t i = 0; i < sys.size(); ++i) g += sys.probs()[i] * std::log(sys.map(i).derivative(z));
      avg += 0.5 * kWeights[q] * g;
    }
    total.add(stationary[a] * avg);
  }
  return total.value();
}

BiLipschitzBound bi_lipschitz_bound(const SystemSpec& sys) {
  require(sys.space() != PhaseSpace::projective, ErrorKind::unsupported,
          "bi-Lipschitz bound is implemented for circle and interval systems");
  constexpr int kGrid = 4096;
  BiLipschitzBound out;
  for (const auto& f : sys.maps()) {
    const bool secant = !f.has_derivative();
    out.secant_estimate = out.secant_estimate || secant;
    for (int g = 0; g < kGrid; ++g) {
      const double x = static_cast<double>(g) / kGrid;
      const double d = secant ? std::fabs(f.difference_ratio(x, 1.0 / kGrid)) : f.derivative(x);
      out.L = std::max({out.L, d, 1.0 / d});
    }
  }
  return out;
}

std::vector<double> decay_profile(const UlamOperator& op, const std::vector<double>& stationary,
                                  std::vector<double> v, std::size_t steps) {
  require(v.size() == op.size() && stationary.size() == op.size(), ErrorKind::invalid_argument,
          "decay_profile vector sizes must match the operator");
  CompensatedSum mean;
  for (std::size_t i = 0; i < v.size(); ++i) mean.add(stationary[i] * v[i]);
  const double c = mean.value();
  std::vector<double> out, w(v.size());
  for (std::size_t s = 0; s <= steps; ++s) {
    double sup = 0.0;
    for (double x : v) sup = std::max(sup, std::fabs(x - c));
    out.push_back(sup);
    if (s == steps) break;
    op.apply(v, w);
    std::swap(v, w);
  }
  return out;
}

void write_coo(std::ostream& os, const UlamOperator& op) {
  os << "row,col,value\n";
  for (std::size_t r = 0; r < op.size(); ++r) {
    for (std::size_t p = op.row_ptr()[r]; p < op.row_ptr()[r + 1]; ++p) {
      os << r << ',' << op.cols()[p] << ',' << format_real(op.vals()[p]) << '\n';
    }
  }
}

}  // namespace rdsw
