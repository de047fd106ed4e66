#pragma once

// Strang split-step Fourier integration of
//   i psi_t = -psi_xx / 2 + (V(x) - i G(x)) psi - g |psi|^2 psi
// on a periodic box: either one lattice cell carrying the periodic part U of psi = e^{ikx} U
// ("cell" mode), or a line of P cells holding psi itself ("line" mode).

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dislat/fft.hpp"
#include "dislat/lattice.hpp"

namespace dislat {

using ComplexVector = Eigen::VectorXcd;

enum class GridMode { cell, line };

struct Grid {
  GridMode mode = GridMode::cell;
  double length = kPeriod;
  int points = 1024;
  /// Bloch quasimomentum of the stored periodic part (cell mode only).
  double quasimomentum = 0.0;

  static Grid cell(int points, double k = 0.0);
  static Grid line(int cells, int points);

  double dx() const noexcept { return length / points; }
  int cells() const noexcept;
  /// Cell mode: x_j = j dx on [0, 2 pi). Line mode: x_j = -L/2 + j dx, centred on a lattice site.
  double x(int j) const noexcept;
  /// Physical wavenumber of FFT bin m (m + k in cell mode, 2 pi m / L in line mode).
  double wavenumber(int m) const noexcept;

  /// Power-of-two size; dx <= sigma / 8 whenever the lattice is dissipative. Throws ConfigError.
  void validate(const LatticeSpec& spec) const;
};

/// Smallest power of two, at least `minimum`, that resolves the Gaussian (dx <= sigma / 8).
int resolving_points(double length, const LatticeSpec& spec, int minimum = 1024);

struct WaveField {
  Grid grid;
  ComplexVector psi;
  double time = 0.0;
};

/// e^{ikx} A sqrt(2/g) sech(A x) on a line grid. Requires g > 0.
WaveField soliton_pulse(const Grid& grid, double k, double amplitude, double g);

/// Constant periodic part U0 on a cell grid.
WaveField uniform_cell_field(const Grid& grid, std::complex<double> value = 1.0);

class SplitStepPropagator {
 public:
  SplitStepPropagator(const Grid& grid, const LatticeSpec& spec, double dt);

  /// `steps` Strang steps, with the adjoining kinetic half steps merged.
  /// Throws NumericError (with the global step index) if the field stops being finite.
  void advance(WaveField& field, long steps);
  void step(WaveField& field) { advance(field, 1); }

  double dt() const noexcept { return dt_; }
  const Grid& grid() const noexcept { return grid_; }
  long steps_taken() const noexcept { return steps_taken_; }

  /// dt (max|V - iG| + g max|psi|^2). The local factor is evaluated exactly; values below 1/2
  /// keep the splitting error well inside the second-order regime.
  double local_phase_measure(const WaveField& field) const;

 private:
  Grid grid_;
  LatticeSpec spec_;
  double dt_;
  double potential_max_ = 0.0;
  long steps_taken_ = 0;
  FftPlan fft_;
  std::vector<std::complex<double>> half_kinetic_;
  std::vector<std::complex<double>> full_kinetic_;
  std::vector<std::complex<double>> local_factor_;
  std::vector<double> phase_weight_;
};

/// Accuracy guard threshold for SplitStepPropagator::local_phase_measure.
inline constexpr double kLocalPhaseLimit = 0.5;

/// One Strang step of a copy of `field`.
WaveField step(const WaveField& field, const LatticeSpec& spec, double dt);

// Diagnostics. Integrals are rectangle sums over the periodic grid (equal to the trapezoid rule).

double norm_squared(const WaveField& field);
/// <x> = int x |psi|^2 / int |psi|^2. Throws DomainError for a zero field.
double mean_position(const WaveField& field);
/// I = int |psi| dx.
double soliton_integral(const WaveField& field);
/// ln(2 + sqrt 3): a field with I above this contains a soliton of the unperturbed NLS.
inline const double kSolitonThreshold = std::log(2.0 + std::sqrt(3.0));
inline bool has_soliton_component(const WaveField& f) { return soliton_integral(f) >= kSolitonThreshold; }
/// int |psi_x|^2 / 2 + V |psi|^2 - g |psi|^4 / 2 (physical field, spectral derivative).
double hamiltonian(const WaveField& field, const LatticeSpec& spec);

struct SpectrumSample {
  double wavenumber = 0.0;
  double amplitude = 0.0;
};

/// |psi_hat(kappa)| = dx |sum_j psi_j e^{-i kappa x_j}| for every FFT bin, ordered by wavenumber.
std::vector<SpectrumSample> spectrum(const WaveField& field);

/// The `count` largest local maxima of the spectrum, positions and heights refined by a parabola.
/// Sorted by amplitude, largest first.
std::vector<SpectrumSample> spectrum_peaks(const WaveField& field, int count);

struct EvolutionOptions {
  double dt = 1e-3;
  double t_final = 500.0;
  /// Diagnostics are recorded every `sample_every` steps (and at t_final).
  long sample_every = 1000;
  std::vector<double> snapshot_times;
  int peak_count = 4;
};

struct WaveTrajectory {
  std::vector<double> times;
  std::vector<double> rescaled_norm;
  std::vector<double> mean_x;
  std::vector<double> soliton_integral;
  std::vector<SpectrumSample> final_peaks;
  std::vector<WaveField> snapshots;
  WaveField final_state;
  std::vector<std::string> warnings;
};

/// Edge amplitude (outermost 1/128 of the box on each side) relative to max |psi|.
double boundary_ratio(const WaveField& field);
inline constexpr double kBoundaryTolerance = 1e-8;

/// Linear evolution of psi = e^{ikx} U on one cell. k is wrapped into the zone, the integer
/// part being absorbed into U. Requires spec.g == 0.
WaveTrajectory evolve_cell(double k, std::span<const std::complex<double>> U0, const LatticeSpec& spec,
                           const EvolutionOptions& options);

/// Full (nonlinear) evolution on a line grid.
WaveTrajectory evolve_line(const WaveField& psi0, const LatticeSpec& spec, const EvolutionOptions& options);

/// Least-squares slope of y against t over the samples with t >= t_from.
double fitted_slope(std::span<const double> t, std::span<const double> y, double t_from);

/// Stationarity detector for <x>(t): |slope| of a linear fit over the final `fraction` of the
/// sampled time window below `tolerance`.
inline constexpr double kStationaryFraction = 0.2;
inline constexpr double kStationarySlope = 1e-4;
bool is_stationary(std::span<const double> t, std::span<const double> y, double fraction = kStationaryFraction,
                   double tolerance = kStationarySlope);

}  // namespace dislat
