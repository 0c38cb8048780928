// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "rdsw/limit_laws.hpp"
#include "rdsw/systems.hpp"

namespace rdsw {

/// Row-stochastic Ulam matrix in CSR form. For the transfer operator the
/// index is the cell a in [0, k); for the Laplace-Markov operator it is
/// j * k + a for symbol j and cell a.
class UlamOperator {
 public:
  enum class Kind { transfer, laplace_markov };

  UlamOperator() = default;
  UlamOperator(Kind kind, std::size_t k, std::size_t blocks, std::vector<std::size_t> row_ptr,
               std::vector<std::size_t> cols, std::vector<double> vals, bool quadrature_fallback);

  Kind kind() const noexcept { return kind_; }
  std::size_t cells() const noexcept { return k_; }
  std::size_t blocks() const noexcept { return blocks_; }
  std::size_t size() const noexcept { return k_ * blocks_; }
  std::size_t nonzeros() const noexcept { return vals_.size(); }
  /// True when some map was not monotone on a cell and its overlaps came
  /// from 64-point quadrature instead of exact preimages.
  bool quadrature_fallback() const noexcept { return quadrature_fallback_; }

  double entry(std::size_t r, std::size_t c) const noexcept;
  /// Largest |row sum - 1|.
  double row_sum_error() const noexcept;
  /// out = P v (function side).
  void apply(std::span<const double> v, std::span<double> out) const;
  /// out = v^T P (measure side).
  void apply_adjoint(std::span<const double> v, std::span<double> out) const;
  std::vector<double> dense() const;

  const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<std::size_t>& cols() const noexcept { return cols_; }
  const std::vector<double>& vals() const noexcept { return vals_; }

 private:
  Kind kind_ = Kind::transfer;
  std::size_t k_ = 0;
  std::size_t blocks_ = 1;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> cols_;
  std::vector<double> vals_;
  bool quadrature_fallback_ = false;
};

/// Overlaps |cell_a ∩ f^-1(cell_b)| / |cell_a| of one map, per row sorted by b.
struct CellRow {
  std::vector<std::size_t> cols;
  std::vector<double> vals;
};
std::vector<CellRow> map_overlaps(const MapSpec& f, PhaseSpace space, std::size_t k,
                                  bool* used_quadrature = nullptr);

/// k a power of two, 2 <= k <= 2^16; circle and interval systems.
UlamOperator build_transfer_ulam(const SystemSpec& sys, std::size_t k, int threads = 1);
UlamOperator build_laplace_markov(const SystemSpec& sys, std::size_t k, int threads = 1);

struct LeadingEigen {
  double eigenvalue = 0.0;
  std::vector<double> vector;  // nonnegative, mass 1
  double residual = 0.0;       // |v P - v|_1
  std::size_t iterations = 0;
  bool converged = false;
};

/// Lazy power iteration v <- (v + v P) / 2 from the uniform vector.
LeadingEigen leading_eigen(const UlamOperator& op, double tol = 1e-13,
                           std::size_t max_iter = 200000);

struct SpectrumReport {
  std::vector<std::complex<double>> values;  // sorted by modulus, descending
  std::vector<double> moduli;
  double gap = 0.0;  // 1 - |lambda_2|
  bool dense = true;
};

inline constexpr std::size_t kDenseEigenLimit = 2048;

/// Leading m_eigs eigenvalues: dense eigensolve when size <= 2048, otherwise
/// block subspace iteration with Rayleigh-Ritz (an estimate).
SpectrumReport spectral_gap(const UlamOperator& op, std::size_t m_eigs = 6);

/// Observable on symbols x phase space: phi(i, x) = weight_i * h(x) + offset_i.
struct SymbolObservable {
  Observable h = Observable::coordinate();
  std::vector<double> weights;  // empty means all 1
  std::vector<double> offsets;  // empty means all 0
  double operator()(int i, double x) const noexcept {
    const auto u = static_cast<std::size_t>(i);
    const double w = u < weights.size() ? weights[u] : 1.0;
    const double o = u < offsets.size() ? offsets[u] : 0.0;
    return w * h(x) + o;
  }
};

struct QnIdentity {
  double kernel_value = 0.0;
  double monte_carlo_value = 0.0;
  double stderr_ = 0.0;
  double z_score = 0.0;
  bool pass = false;  // |z| < 4
};

/// (Q^n phi)(j, x) by exact enumeration of all N^n words against a Monte
/// Carlo average of phi(i_n, f_{i_{n-1}} o ... o f_{i_1}(f_j(x))). n <= 20.
QnIdentity qn_identity_test(const SystemSpec& sys, const SymbolObservable& phi, int j, double x,
                            std::size_t n, std::size_t replicas, std::uint64_t seed,
                            int threads = 1);

struct HolderNormEstimate {
  double sup_norm = 0.0;
  double seminorm_alpha = 0.0;  // grid supremum, a lower bound of the true seminorm
  double alpha = 1.0;
  double norm() const noexcept { return sup_norm + seminorm_alpha; }
};

/// Pairwise supremum over the grid x = g / grid_k (circle metric), all symbols.
HolderNormEstimate holder_norm(const SymbolObservable& phi, std::size_t symbols, double alpha,
                               std::size_t grid_k);

/// sum_a pi_a * cell average of sum_i p_i log|f_i'|, 4-point Gauss per cell.
double ulam_gamma(const SystemSpec& sys, const UlamOperator& transfer,
                  const std::vector<double>& stationary);

struct BiLipschitzBound {
  double L = 1.0;
  bool secant_estimate = false;  // some map had no derivative data
};

/// max over maps and a 4096 grid of max(|f'|, 1 / |f'|).
BiLipschitzBound bi_lipschitz_bound(const SystemSpec& sys);

/// sup-norms of P^n v - (pi . v) 1 for n = 0..steps (function side).
std::vector<double> decay_profile(const UlamOperator& op, const std::vector<double>& stationary,
                                  std::vector<double> v, std::size_t steps);

/// Coordinate list "row,col,value" with a header line.
void write_coo(std::ostream& os, const UlamOperator& op);

}  // namespace rdsw
