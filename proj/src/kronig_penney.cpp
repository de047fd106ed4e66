#include "dislat/kronig_penney.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "dislat/lattice.hpp"

namespace dislat {

namespace {

using cplx = std::complex<double>;

constexpr int kMaxIterations = 100;

struct NewtonOutcome {
  cplx mu;
  cplx residual;
  int iterations = 0;
  bool converged = false;
};

cplx residual_at(cplx mu, double k, double gamma0) { return dispersion_residual<double>(mu, k, gamma0); }

// Newton with step halving whenever the full step does not reduce |F|.
NewtonOutcome damped_newton(cplx seed, double k, double gamma0) {
  NewtonOutcome out;
  out.mu = seed;
  out.residual = residual_at(seed, k, gamma0);
  for (out.iterations = 0; out.iterations < kMaxIterations; ++out.iterations) {
    if (std::abs(out.residual) < 1e-15) break;
    const cplx slope = dispersion_derivative<double>(out.mu, gamma0);
    if (slope == cplx(0) || !std::isfinite(std::abs(slope))) break;
    const cplx step = -out.residual / slope;
    bool accepted = false;
    double damping = 1.0;
    for (int h = 0; h < 50; ++h, damping *= 0.5) {
      const cplx candidate = out.mu + damping * step;
      if (candidate == cplx(0)) continue;
      const cplx f = residual_at(candidate, k, gamma0);
      if (std::isfinite(std::abs(f)) && std::abs(f) < std::abs(out.residual)) {
        out.mu = candidate;
        out.residual = f;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  out.converged = std::abs(out.residual) < kRootTolerance;
  return out;
}

double free_band(double k, int branch) {
  const double q = k + branch;
  return 0.5 * q * q;
}

// Half the distance from this branch's free-band value to the nearest distinct one.
double jump_threshold(double k, int branch) {
  const double own = free_band(k, branch);
  double spacing = std::numeric_limits<double>::infinity();
  for (int b = branch - 3; b <= branch + 3; ++b) {
    const double d = std::abs(free_band(k, b) - own);
    if (d > 1e-12) spacing = std::min(spacing, d);
  }
  for (int b = -branch - 3; b <= -branch + 3; ++b) {
    const double d = std::abs(free_band(k, b) - own);
    if (d > 1e-12) spacing = std::min(spacing, d);
  }
  return 0.5 * spacing;
}

KPRoot make_root(const NewtonOutcome& r, double k, double gamma0, int branch) {
  KPRoot root;
  root.k = k;
  root.gamma0 = gamma0;
  root.mu = r.mu;
  root.residual = r.residual;
  root.branch_index = branch;
  root.iterations = r.iterations;
  root.branch_jump = std::abs(r.mu - free_band(k, branch)) > jump_threshold(k, branch);
  return root;
}

[[noreturn]] void fail(const NewtonOutcome& r, double k, double gamma0, int branch) {
  std::ostringstream msg;
  msg.precision(17);
  msg << "Kronig-Penney root did not converge (k=" << k << ", gamma0=" << gamma0 << ", branch=" << branch
      << "); last iterate mu=" << r.mu << ", |F|=" << std::abs(r.residual);
  throw NumericError(msg.str());
}

}  // namespace

KPRoot solve_mu(double k, double gamma0, int branch_index) {
  if (!(std::abs(k) <= 0.5)) throw DomainError("solve_mu: k must lie in [-1/2, 1/2]");
  if (!(gamma0 >= 0.0)) throw DomainError("solve_mu: gamma0 must be non-negative");
  const double free = free_band(k, branch_index);
  const cplx i(0.0, 1.0);

  if (free == 0.0 && gamma0 == 0.0) {
    // The constant mode of the free particle; F is regular there but the formula is not.
    NewtonOutcome trivial{cplx(0.0), cplx(0.0), 0, true};
    return make_root(trivial, k, gamma0, branch_index);
  }

  // Where two free bands coincide (k = 0, |k| = 1/2) the free value is itself a root for every
  // Gamma0 (the nondecaying catalog) and the -i Gamma0 seed sits midway between it and its
  // decaying partner. Return the catalog root; the partner is reachable through refine_root.
  if (free != 0.0 && std::abs(residual_at(cplx(free), k, gamma0)) < kRootTolerance) {
    NewtonOutcome exact{cplx(free), residual_at(cplx(free), k, gamma0), 0, true};
    return make_root(exact, k, gamma0, branch_index);
  }

  const cplx seed = free - i * gamma0;
  NewtonOutcome r = damped_newton(seed, k, gamma0);
  for (double scale : {0.5, 2.0, 0.25}) {
    if (r.converged) break;
    r = damped_newton(free - scale * i * gamma0, k, gamma0);
  }
  if (!r.converged) fail(r, k, gamma0, branch_index);
  return make_root(r, k, gamma0, branch_index);
}

KPRoot refine_root(std::complex<double> seed, double k, double gamma0, int branch_index) {
  if (seed == cplx(0)) throw DomainError("refine_root: seed mu = 0 is singular");
  NewtonOutcome r = damped_newton(seed, k, gamma0);
  if (!r.converged) fail(r, k, gamma0, branch_index);
  return make_root(r, k, gamma0, branch_index);
}

std::vector<KPRoot> sweep_branch(std::span<const double> k_grid, double gamma0, int branch_index) {
  std::vector<KPRoot> roots;
  roots.reserve(k_grid.size());
  for (std::size_t i = 0; i < k_grid.size(); ++i) {
    if (i == 0) {
      roots.push_back(solve_mu(k_grid[0], gamma0, branch_index));
      continue;
    }
    // Predictor: follow the free-band slope d mu / dk = k + branch from the previous root.
    const double dk = k_grid[i] - k_grid[i - 1];
    const cplx seed = roots.back().mu + dk * (k_grid[i - 1] + branch_index);
    roots.push_back(refine_root(seed, k_grid[i], gamma0, branch_index));
  }
  return roots;
}

std::complex<double> NondecayingMode::profile(double x) const {
  const double norm = 1.0 / std::sqrt(kPi);
  if (k == 0.0) return norm * std::sin(n * x);
  return norm * std::polar(1.0, -0.5 * x) * std::sin((n - 0.5) * x);
}

std::complex<double> NondecayingMode::bloch_wave(double x) const { return std::polar(1.0, k * x) * profile(x); }

std::vector<NondecayingMode> nondecaying_catalog(int n_max) {
  if (n_max < 1) throw DomainError("nondecaying_catalog: n_max must be at least 1");
  std::vector<NondecayingMode> modes;
  modes.reserve(2 * static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) modes.push_back({0.0, n, 0.5 * n * n});
  for (int n = 1; n <= n_max; ++n) modes.push_back({0.5, n, 0.5 * (n - 0.5) * (n - 0.5)});
  return modes;
}

std::complex<double> mittag_leffler_sum(std::complex<double> mu, double k, int M) {
  cplx sum = 0.0;
  for (int m = -M; m <= M; ++m) sum += 1.0 / (mu - free_band(k, m));
  return sum;
}

std::complex<double> mittag_leffler_closed_form(std::complex<double> mu, double k) {
  const cplx s = std::sqrt(2.0 * mu);
  return (kPeriod / s) * detail::sin_two_pi(s) /
         (detail::cos_two_pi(cplx(k)) - detail::cos_two_pi(s));
}

std::vector<std::complex<double>> periodic_part(std::complex<double> mu, double k, double gamma0,
                                                std::span<const double> x_grid, int M) {
  if (M < 1) throw DomainError("periodic_part: cutoff M must be positive");
  for (int m = -M; m <= M; ++m) {
    if (std::abs(mu - free_band(k, m)) <= kResonanceThreshold)
      throw DomainError(
          "periodic_part: mu is resonant with a free-band pole (0/0 case); "
          "use nondecaying_catalog for this mode");
  }
  if (std::abs(residual_at(mu, k, gamma0)) > 1e-8)
    throw DomainError("periodic_part: (k, mu) is not a root of the dispersion relation");

  std::vector<cplx> weights(static_cast<std::size_t>(2 * M + 1));
  for (int m = -M; m <= M; ++m) weights[static_cast<std::size_t>(m + M)] = 1.0 / (mu - free_band(k, m));

  std::vector<cplx> u(x_grid.size());
  double peak = 0.0;
  for (std::size_t j = 0; j < x_grid.size(); ++j) {
    // Pair m and -m so the sum stays symmetric under k -> -k, x -> -x.
    cplx acc = weights[static_cast<std::size_t>(M)];
    for (int m = 1; m <= M; ++m) {
      const cplx e = std::polar(1.0, m * x_grid[j]);
      acc += weights[static_cast<std::size_t>(M + m)] * e + weights[static_cast<std::size_t>(M - m)] * std::conj(e);
    }
    u[j] = acc;
    peak = std::max(peak, std::abs(acc));
  }
  if (peak > 0.0)
    for (auto& v : u) v /= peak;
  return u;
}

}  // namespace dislat
