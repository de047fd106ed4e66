#include "dislat/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

namespace dislat {

int minimum_truncation(double sigma) { return static_cast<int>(std::ceil(12.2 / sigma)); }

int default_truncation(double sigma) { return std::max(64, minimum_truncation(sigma)); }

BlochOperator build_operator(double k, const LatticeSpec& spec, int N) {
  spec.validate();
  if (N < 1) throw ConfigError("truncation N must be at least 1");
  if (spec.dissipative() && N < minimum_truncation(spec.sigma)) {
    std::ostringstream msg;
    msg << "truncation N=" << N << " is below the required minimum N_min=" << minimum_truncation(spec.sigma)
        << " for sigma=" << spec.sigma;
    throw ConfigError(msg.str());
  }
  BlochOperator op;
  op.k = wrap_quasimomentum(k);
  op.N = N;
  const int dim = op.dimension();

  // Couplings depend only on n - m, so tabulate them once.
  std::vector<std::complex<double>> coupling(2 * dim - 1);
  for (int d = -(dim - 1); d <= dim - 1; ++d)
    coupling[d + dim - 1] = {real_potential_fourier(d, spec), -fourier_coefficient(d, spec)};

  op.matrix.resize(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i) op.matrix(i, j) = coupling[i - j + dim - 1];
  for (int i = 0; i < dim; ++i) {
    const double q = op.k - op.fourier_index(i);
    op.matrix(i, i) += 0.5 * q * q;
  }
  return op;
}

double operator_norm(const BlochOperator& op) { return op.matrix.cwiseAbs().colwise().sum().maxCoeff(); }

namespace {

void fix_phase(ComplexVector& c) {
  Eigen::Index arg = 0;
  c.cwiseAbs().maxCoeff(&arg);
  const std::complex<double> pivot = c(arg);
  if (std::abs(pivot) > 0.0) c *= std::conj(pivot) / std::abs(pivot);
}

double residual_of(const ComplexMatrix& L, std::complex<double> mu, const ComplexVector& c) {
  return (L * c - mu * c).norm();
}

// One step of shifted inverse iteration followed by the (unconjugated) Rayleigh quotient,
// which is the natural second-order estimate for a complex symmetric L.
void refine(const ComplexMatrix& L, double scale, BlochEigenpair& pair) {
  const auto dim = L.rows();
  const std::complex<double> shift = pair.mu + std::complex<double>(1e-10, 1e-10) * scale;
  ComplexMatrix shifted = L - shift * ComplexMatrix::Identity(dim, dim);
  Eigen::PartialPivLU<ComplexMatrix> lu(shifted);
  ComplexVector y = lu.solve(pair.coefficients);
  if (!y.allFinite() || y.norm() == 0.0) return;
  y.normalize();
  const std::complex<double> self = y.transpose() * y;
  std::complex<double> mu;
  if (std::abs(self) > 1e-8) {
    mu = (y.transpose() * (L * y)).value() / self;
  } else {
    mu = (y.adjoint() * (L * y)).value();
  }
  const double res = residual_of(L, mu, y);
  if (res < pair.residual) {
    pair.mu = mu;
    pair.coefficients = y;
    pair.residual = res;
  }
}

void sort_bands(std::vector<BlochEigenpair>& pairs) {
  std::sort(pairs.begin(), pairs.end(),
            [](const BlochEigenpair& a, const BlochEigenpair& b) { return a.mu.real() < b.mu.real(); });
  // Real parts equal to rounding are ordered by decay rate.
  std::size_t start = 0;
  while (start < pairs.size()) {
    std::size_t stop = start + 1;
    while (stop < pairs.size() &&
           std::abs(pairs[stop].mu.real() - pairs[stop - 1].mu.real()) <=
               1e-12 * std::max(1.0, std::abs(pairs[stop].mu.real())))
      ++stop;
    if (stop - start > 1)
      std::sort(pairs.begin() + static_cast<std::ptrdiff_t>(start), pairs.begin() + static_cast<std::ptrdiff_t>(stop),
                [](const BlochEigenpair& a, const BlochEigenpair& b) { return a.decay_rate() < b.decay_rate(); });
    start = stop;
  }
}

}  // namespace

std::vector<BlochEigenpair> eigenpairs(const BlochOperator& op) {
  Eigen::ComplexEigenSolver<ComplexMatrix> solver(op.matrix, true);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "dense eigensolver did not converge at k=" << op.k << ", N=" << op.N;
    throw NumericError(msg.str());
  }
  const double scale = operator_norm(op);
  const double bound = kResidualBound * scale;
  const auto dim = op.matrix.rows();

  std::vector<BlochEigenpair> pairs(static_cast<std::size_t>(dim));
  for (Eigen::Index j = 0; j < dim; ++j) {
    BlochEigenpair& p = pairs[static_cast<std::size_t>(j)];
    p.k = op.k;
    p.mu = solver.eigenvalues()(j);
    p.coefficients = solver.eigenvectors().col(j).normalized();
    p.residual = residual_of(op.matrix, p.mu, p.coefficients);
    if (p.residual >= bound) refine(op.matrix, scale, p);
    fix_phase(p.coefficients);
  }
  sort_bands(pairs);
  return pairs;
}

BlochEigenpair nearest_eigenpair(const BlochOperator& op, std::complex<double> target, int max_iterations) {
  const auto dim = op.matrix.rows();
  const double scale = operator_norm(op);
  Eigen::PartialPivLU<ComplexMatrix> lu(op.matrix - target * ComplexMatrix::Identity(dim, dim));

  BlochEigenpair pair;
  pair.k = op.k;
  // Deterministic start with weight on every Fourier index.
  ComplexVector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = std::complex<double>(1.0, 0.1 * static_cast<double>(i % 7));
  v.normalize();
  pair.residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iterations; ++it) {
    ComplexVector y = lu.solve(v);
    if (!y.allFinite()) break;
    v = y.normalized();
    const ComplexVector Lv = op.matrix * v;
    const std::complex<double> self = v.transpose() * v;
    const std::complex<double> mu =
        std::abs(self) > 1e-8 ? (v.transpose() * Lv).value() / self : (v.adjoint() * Lv).value();
    pair.mu = mu;
    pair.coefficients = v;
    pair.residual = (Lv - mu * v).norm();
    if (pair.residual < 1e-2 * kResidualBound * scale) break;
  }
  if (!(pair.residual < kResidualBound * scale)) {
    std::ostringstream msg;
    msg << "inverse iteration did not converge at k=" << op.k << ", N=" << op.N << " near " << target;
    throw NumericError(msg.str());
  }
  fix_phase(pair.coefficients);
  return pair;
}

std::vector<double> BandStructure::decay_row(int band) const {
  std::vector<double> row;
  row.reserve(columns.size());
  for (std::size_t i = 0; i < columns.size(); ++i) row.push_back(at(i, band).decay_rate());
  return row;
}

std::vector<std::complex<double>> BandStructure::eigenvalue_row(int band) const {
  std::vector<std::complex<double>> row;
  row.reserve(columns.size());
  for (std::size_t i = 0; i < columns.size(); ++i) row.push_back(at(i, band).mu);
  return row;
}

std::vector<double> uniform_k_grid(int points) {
  if (points < 2) throw ConfigError("k grid needs at least two points");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = -0.5 + static_cast<double>(i) / (points - 1);
  // Pin the symmetric points exactly.
  if (points % 2 == 1) grid[static_cast<std::size_t>(points / 2)] = 0.0;
  return grid;
}

BandStructure band_scan(const LatticeSpec& spec, std::span<const double> k_grid, int N, int bands_kept) {
  if (bands_kept < 1 || bands_kept > 2 * N + 1)
    throw ConfigError("bands_kept must lie in [1, 2N+1], got " + std::to_string(bands_kept));
  for (double k : k_grid)
    if (!(std::abs(k) <= 0.5)) throw ConfigError("band_scan: k=" + std::to_string(k) + " outside [-1/2, 1/2]");

  BandStructure result;
  result.k_grid.assign(k_grid.begin(), k_grid.end());
  result.columns.resize(k_grid.size());

  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(k_grid.size(), 1));
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < k_grid.size(); i += workers) {
            auto pairs = eigenpairs(build_operator(k_grid[i], spec, N));
            pairs.resize(static_cast<std::size_t>(bands_kept));
            result.columns[i] = std::move(pairs);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return result;
}

DecayMinimum min_decay(std::span<const double> k_grid, std::span<const double> gamma) {
  if (gamma.empty() || k_grid.size() != gamma.size()) throw DomainError("min_decay: empty or mismatched band");
  if (gamma.size() < 3) throw DomainError("min_decay: need at least three samples");

  std::size_t best = 0;
  for (std::size_t i = 1; i < gamma.size(); ++i) {
    const double ki = std::abs(k_grid[i]), kb = std::abs(k_grid[best]);
    if (gamma[i] < gamma[best] ||
        (gamma[i] == gamma[best] && (ki < kb || (ki == kb && k_grid[i] > k_grid[best]))))
      best = i;
  }
  DecayMinimum out{k_grid[best], gamma[best]};

  // gamma is even in k and 1-periodic, so a minimum on the zone edge is symmetric there.
  if (best == 0 || best + 1 == gamma.size()) return out;

  const double k0 = k_grid[best - 1], k1 = k_grid[best], k2 = k_grid[best + 1];
  const double g0 = gamma[best - 1], g1 = gamma[best], g2 = gamma[best + 1];
  const double d01 = (g1 - g0) / (k1 - k0), d12 = (g2 - g1) / (k2 - k1);
  const double curvature = (d12 - d01) / (k2 - k0);
  if (!(curvature > 0.0)) return out;
  // Parabola through the three samples: g(k) = g1 + s (k - k1) + c (k - k1)^2.
  const double slope_at_k1 = d01 + curvature * (k1 - k0);
  const double kv = std::clamp(k1 - slope_at_k1 / (2.0 * curvature), k0, k2);
  out.k_star = std::clamp(kv, -0.5, 0.5);
  const double dk = out.k_star - k1;
  out.gamma_min = g1 + slope_at_k1 * dk + curvature * dk * dk;
  return out;
}

DecayMinimum min_decay(const BandStructure& bands, int band) {
  const auto row = bands.decay_row(band);
  return min_decay(bands.k_grid, row);
}

double biorthogonality_residual(const BlochEigenpair& a, const BlochEigenpair& b) {
  if (a.coefficients.size() != b.coefficients.size())
    throw DomainError("biorthogonality_residual: eigenpairs come from different truncations");
  return std::abs((a.coefficients.transpose() * b.coefficients).value());
}

double exceptional_indicator(const BlochEigenpair& pair) {
  return std::abs((pair.coefficients.transpose() * pair.coefficients).value());
}

ComplexVector reflect_coefficients(const ComplexVector& c) { return c.reverse(); }

}  // namespace dislat
