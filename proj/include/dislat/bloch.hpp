#pragma once

// Truncated plane-wave eigenproblem for dissipative Bloch bands.
//
// With psi_k(x) = e^{ikx} sum_n C_n e^{-inx}, the Bloch eigenproblem becomes
//   mu C_n = sum_m L_{n,m}(k) C_m,
//   L_{n,m}(k) = (k - n)^2 / 2 delta_{nm} + Vhat_{n-m} - i Gamma_{n-m},
// a complex symmetric (not Hermitian) matrix on n, m in [-N, N].

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dislat/lattice.hpp"

namespace dislat {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Smallest truncation keeping every dropped Gamma_n below 1e-16 Gamma_0: ceil(12.2 / sigma).
int minimum_truncation(double sigma);

/// max(64, minimum_truncation(sigma)).
int default_truncation(double sigma);

struct BlochOperator {
  double k = 0.0;
  int N = 0;
  ComplexMatrix matrix;

  int dimension() const noexcept { return 2 * N + 1; }
  int row(int n) const noexcept { return n + N; }
  int fourier_index(int row) const noexcept { return row - N; }
  std::complex<double> entry(int n, int m) const { return matrix(row(n), row(m)); }
};

/// Throws ConfigError if the lattice is dissipative and N < minimum_truncation(sigma).
BlochOperator build_operator(double k, const LatticeSpec& spec, int N);

struct BlochEigenpair {
  double k = 0.0;
  std::complex<double> mu;
  /// C_n stored at position n + N; unit l2 norm, largest component real positive.
  ComplexVector coefficients;
  /// ||L C - mu C||_2.
  double residual = 0.0;

  double energy() const noexcept { return mu.real(); }
  double decay_rate() const noexcept { return -mu.imag(); }
  int truncation() const noexcept { return static_cast<int>((coefficients.size() - 1) / 2); }
};

/// Absolute tolerance on |mu_a - mu_b| below which two eigenvalues count as degenerate.
inline constexpr double kDegeneracyTolerance = 1e-8;

/// Relative residual bound ||L C - mu C|| < kResidualBound ||L||_1 targeted by refinement.
inline constexpr double kResidualBound = 1e-10;

/// All 2N+1 eigenpairs, sorted by Re mu ascending and then by decay rate.
/// Throws NumericError (carrying k and N) when the dense solver fails.
std::vector<BlochEigenpair> eigenpairs(const BlochOperator& op);

/// The eigenpair closest to `target`, by shifted inverse iteration (one LU factorization).
/// Cheaper than the dense solve when only a few bands of a large truncation are needed.
/// Throws NumericError if the residual bound is not reached.
BlochEigenpair nearest_eigenpair(const BlochOperator& op, std::complex<double> target, int max_iterations = 50);

/// Operator 1-norm, the scale used for residual bounds.
double operator_norm(const BlochOperator& op);

struct BandStructure {
  std::vector<double> k_grid;
  /// columns[i][b] is band b+1 at k_grid[i].
  std::vector<std::vector<BlochEigenpair>> columns;

  int bands_kept() const noexcept {
    return columns.empty() ? 0 : static_cast<int>(columns.front().size());
  }
  /// Band labels are 1-based, ordered by real part at each k.
  const BlochEigenpair& at(std::size_t k_index, int band) const { return columns.at(k_index).at(band - 1); }
  std::vector<double> decay_row(int band) const;
  std::vector<std::complex<double>> eigenvalue_row(int band) const;
};

/// n evenly spaced quasimomenta covering [-1/2, 1/2] inclusive.
std::vector<double> uniform_k_grid(int points);

/// Solves every k independently (spread across hardware threads) and keeps the lowest bands.
BandStructure band_scan(const LatticeSpec& spec, std::span<const double> k_grid, int N, int bands_kept = 8);

struct DecayMinimum {
  double k_star = 0.0;
  double gamma_min = 0.0;
};

/// Grid argmin of gamma(k) refined by a parabola through the neighbours.
/// Ties go to the smallest |k| (then to k >= 0). Needs at least three samples.
DecayMinimum min_decay(std::span<const double> k_grid, std::span<const double> gamma);
DecayMinimum min_decay(const BandStructure& bands, int band);

/// |sum_n C_n^a C_n^b| without conjugation; vanishes for distinct eigenvalues of a symmetric L.
double biorthogonality_residual(const BlochEigenpair& a, const BlochEigenpair& b);

/// |sum_n C_n^2|, the overlap of u_k with u_{-k}(x) = u_k(-x). Near zero at an exceptional point.
double exceptional_indicator(const BlochEigenpair& pair);

/// C_n -> C_{-n}: coefficients of the same mode at quasimomentum -k.
ComplexVector reflect_coefficients(const ComplexVector& c);

}  // namespace dislat
