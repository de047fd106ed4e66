#pragma once

// Zero-width limit: the imaginary Kronig-Penney comb G(x) = 2 pi Gamma0 sum_m delta(x - 2 pi m).
// With s = sqrt(2 mu) the Bloch dispersion relation is
//   F(mu; k) = cos(2 pi k) - cos(2 pi s) + i (2 pi Gamma0 / s) sin(2 pi s) = 0,
// which is even in s, so the square-root branch never matters.

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "dislat/errors.hpp"

namespace dislat {

namespace detail {

// cos(2 pi z) and sin(2 pi z) with the real part of z reduced modulo 1 first, so that
// integer and half-integer arguments give exact zeros.
template <typename T>
std::complex<T> cos_two_pi(std::complex<T> z) {
  const T two_pi = 2 * std::numbers::pi_v<T>;
  const T a = std::remainder(z.real(), T(1));
  const T b = two_pi * z.imag();
  return {std::cos(two_pi * a) * std::cosh(b), -std::sin(two_pi * a) * std::sinh(b)};
}

template <typename T>
std::complex<T> sin_two_pi(std::complex<T> z) {
  const T two_pi = 2 * std::numbers::pi_v<T>;
  const T a = std::remainder(z.real(), T(1));
  const T b = two_pi * z.imag();
  // sin(2 pi a) vanishes exactly at a = 0 and a = +-1/2.
  const T sa = (a == T(0) || std::abs(a) == T(0.5)) ? T(0) : std::sin(two_pi * a);
  return {sa * std::cosh(b), std::cos(two_pi * a) * std::sinh(b)};
}

}  // namespace detail

/// F(mu; k, Gamma0). Throws DomainError at mu = 0.
template <typename T>
std::complex<T> dispersion_residual(std::complex<T> mu, T k, T gamma0) {
  if (mu == std::complex<T>(0)) throw DomainError("dispersion_residual: mu = 0 is a singular input");
  const T two_pi = 2 * std::numbers::pi_v<T>;
  const std::complex<T> s = std::sqrt(T(2) * mu);
  const std::complex<T> i(0, 1);
  return detail::cos_two_pi(std::complex<T>(k)) - detail::cos_two_pi(s) +
         i * (two_pi * gamma0 / s) * detail::sin_two_pi(s);
}

/// dF/dmu.
template <typename T>
std::complex<T> dispersion_derivative(std::complex<T> mu, T gamma0) {
  const T two_pi = 2 * std::numbers::pi_v<T>;
  const std::complex<T> s = std::sqrt(T(2) * mu);
  const std::complex<T> i(0, 1);
  const std::complex<T> sn = detail::sin_two_pi(s), cs = detail::cos_two_pi(s);
  const std::complex<T> dF_ds = two_pi * sn + i * two_pi * gamma0 * (two_pi * cs * s - sn) / (s * s);
  return dF_ds / s;
}

struct KPRoot {
  double k = 0.0;
  double gamma0 = 0.0;
  std::complex<double> mu;
  std::complex<double> residual;
  int branch_index = 0;
  int iterations = 0;
  /// Set when the root lies farther than half the spacing to the neighbouring free band.
  bool branch_jump = false;
};

/// Newton target on |F|.
inline constexpr double kRootTolerance = 1e-12;

/// Damped Newton from the free-band seed (k + branch)^2 / 2 - i Gamma0.
/// Requires |k| <= 1/2. Throws NumericError after 100 iterations without convergence.
KPRoot solve_mu(double k, double gamma0, int branch_index);

/// Damped Newton from an explicit seed; branch_index is only recorded.
KPRoot refine_root(std::complex<double> seed, double k, double gamma0, int branch_index);

/// Continues one branch along an ordered k grid, seeding each point from the previous root.
std::vector<KPRoot> sweep_branch(std::span<const double> k_grid, double gamma0, int branch_index);

/// Exact nondecaying eigenpair of the comb: mu = n^2/2 at k = 0, mu = (n - 1/2)^2 / 2 at k = 1/2.
struct NondecayingMode {
  double k = 0.0;
  int n = 1;
  double mu = 0.0;

  /// u(x): sin(n x) at k = 0, e^{-ix/2} sin((n - 1/2) x) at k = 1/2, unit L2 norm on [0, 2 pi].
  std::complex<double> profile(double x) const;
  /// e^{ikx} u(x).
  std::complex<double> bloch_wave(double x) const;
};

/// All k = 0 modes for n = 1..n_max, followed by all k = 1/2 modes.
std::vector<NondecayingMode> nondecaying_catalog(int n_max);

/// Truncated pole sum sum_{|m| <= M} 1 / (mu - (m + k)^2 / 2). Equals i / Gamma0 at a root.
std::complex<double> mittag_leffler_sum(std::complex<double> mu, double k, int M);

/// Closed form of the full pole sum: (2 pi / s) sin(2 pi s) / (cos(2 pi k) - cos(2 pi s)).
std::complex<double> mittag_leffler_closed_form(std::complex<double> mu, double k);

/// Minimum distance from mu to a free-band pole (m + k)^2 / 2 below which periodic_part refuses.
inline constexpr double kResonanceThreshold = 1e-6;

/// Periodic part u_k(x) ~ sum_{|m| <= M} e^{imx} / (mu - (m + k)^2 / 2), scaled to max |u| = 1.
/// Throws DomainError near a resonant pole (use nondecaying_catalog there).
std::vector<std::complex<double>> periodic_part(std::complex<double> mu, double k, double gamma0,
                                                std::span<const double> x_grid, int M);

}  // namespace dislat
