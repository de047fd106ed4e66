#pragma once

// Dissipative periodic lattice  V(x) - i G(x)  with
//   V(x) = V0 cos(2x),   G(x) = G0 sum_m exp(-(x - 2 pi m)^2 / sigma^2),
// period fixed to 2 pi.

#include <cmath>
#include <complex>
#include <numbers>

#include "dislat/errors.hpp"

namespace dislat {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kPeriod = 2.0 * kPi;

/// Half-width of the comb window in units of sigma; exp(-81) is far below double precision.
inline constexpr double kCombWindow = 9.0;

struct LatticeSpec {
  double V0 = 0.0;
  double G0 = 0.0;
  double sigma = kPi / 20.0;
  double g = 0.0;

  static constexpr double period = kPeriod;

  /// Builds a spec from the integral strength Gamma0, solving G0 = 2 sqrt(pi) Gamma0 / sigma.
  static LatticeSpec from_gamma0(double V0, double sigma, double gamma0, double g = 0.0);

  /// Gamma0 = sigma G0 / (2 sqrt(pi)); always derived, never stored.
  double gamma0() const noexcept { return sigma * G0 / (2.0 * std::sqrt(kPi)); }

  bool dissipative() const noexcept { return G0 > 0.0; }

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

/// G(x), summing only the comb terms within kCombWindow * sigma of x.
template <typename Scalar>
Scalar dissipation_value(Scalar x, const LatticeSpec& spec) {
  if (!std::isfinite(x)) throw DomainError("dissipation_value: non-finite coordinate");
  const Scalar period = static_cast<Scalar>(kPeriod);
  // Reduce into [-pi, pi] first so that G(x + 2 pi) and G(x) sum identical terms.
  const Scalar r = std::remainder(x, period);
  const Scalar window = static_cast<Scalar>(kCombWindow) * static_cast<Scalar>(spec.sigma);
  const long m_lo = static_cast<long>(std::ceil((r - window) / period));
  const long m_hi = static_cast<long>(std::floor((r + window) / period));
  Scalar sum = 0;
  for (long m = m_lo; m <= m_hi; ++m) {
    const Scalar u = (r - period * static_cast<Scalar>(m)) / static_cast<Scalar>(spec.sigma);
    sum += std::exp(-u * u);
  }
  return static_cast<Scalar>(spec.G0) * sum;
}

/// V(x) = V0 cos(2x).
template <typename Scalar>
Scalar real_potential_value(Scalar x, const LatticeSpec& spec) {
  return static_cast<Scalar>(spec.V0) * std::cos(2 * x);
}

/// The complex lattice V(x) - i G(x).
template <typename Scalar>
std::complex<Scalar> complex_potential(Scalar x, const LatticeSpec& spec) {
  return {real_potential_value(x, spec), -dissipation_value(x, spec)};
}

/// Gamma_n = (sigma G0 / (2 sqrt(pi))) exp(-(n sigma / 2)^2); G(x) = sum_n Gamma_n e^{-inx}.
double fourier_coefficient(int n, const LatticeSpec& spec);

/// Fourier component of V0 cos(2x): V0/2 at n = +-2, zero elsewhere.
double real_potential_fourier(int n, const LatticeSpec& spec);

/// Maps a quasimomentum into the zone [-1/2, 1/2]; values already inside are returned unchanged.
double wrap_quasimomentum(double k);

/// Weight 2 pi Gamma0 of the zero-width limit G(x) -> 2 pi Gamma0 sum_m delta(x - 2 pi m).
double delta_comb_strength(const LatticeSpec& spec);

}  // namespace dislat
