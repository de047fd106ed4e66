#include "dislat/lattice.hpp"

#include <string>

namespace dislat {

LatticeSpec LatticeSpec::from_gamma0(double V0, double sigma, double gamma0, double g) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive, got " + std::to_string(sigma));
  LatticeSpec spec;
  spec.V0 = V0;
  spec.sigma = sigma;
  spec.G0 = 2.0 * std::sqrt(kPi) * gamma0 / sigma;
  spec.g = g;
  spec.validate();
  return spec;
}

void LatticeSpec::validate() const {
  if (!std::isfinite(V0)) throw ConfigError("V0 must be finite");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw ConfigError("sigma must be positive and finite, got " + std::to_string(sigma));
  if (!(G0 >= 0.0) || !std::isfinite(G0))
    throw ConfigError("G0 must be non-negative and finite, got " + std::to_string(G0));
  if (!(g >= 0.0) || !std::isfinite(g))
    throw ConfigError("nonlinearity g must be non-negative, got " + std::to_string(g));
  if (!std::isfinite(gamma0())) throw ConfigError("derived Gamma0 is not finite");
}

double fourier_coefficient(int n, const LatticeSpec& spec) {
  const double a = 0.5 * static_cast<double>(n) * spec.sigma;
  return spec.gamma0() * std::exp(-a * a);
}

double real_potential_fourier(int n, const LatticeSpec& spec) {
  return (n == 2 || n == -2) ? 0.5 * spec.V0 : 0.0;
}

double wrap_quasimomentum(double k) {
  if (std::abs(k) <= 0.5) return k;
  return k - std::round(k);
}

double delta_comb_strength(const LatticeSpec& spec) { return kPeriod * spec.gamma0(); }

}  // namespace dislat
