#include "dislat/propagator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

namespace dislat {

namespace {

using cplx = std::complex<double>;

bool is_power_of_two(int n) { return n > 0 && std::has_single_bit(static_cast<unsigned>(n)); }

// e^{i theta}; the series branch is exact to rounding for |theta| < 1e-3 and avoids sincos.
inline cplx rotation(double theta) {
  if (std::abs(theta) < 1e-3) {
    const double t2 = theta * theta;
    const double c = 1.0 - t2 * (0.5 - t2 * (1.0 / 24.0 - t2 / 720.0));
    const double s = theta * (1.0 - t2 * (1.0 / 6.0 - t2 * (1.0 / 120.0 - t2 / 5040.0)));
    return {c, s};
  }
  return {std::cos(theta), std::sin(theta)};
}

}  // namespace

Grid Grid::cell(int points, double k) {
  Grid g;
  g.mode = GridMode::cell;
  g.length = kPeriod;
  g.points = points;
  g.quasimomentum = k;
  return g;
}

Grid Grid::line(int cells, int points) {
  if (cells < 1) throw ConfigError("line grid needs at least one lattice cell");
  Grid g;
  g.mode = GridMode::line;
  g.length = kPeriod * cells;
  g.points = points;
  g.quasimomentum = 0.0;
  return g;
}

int Grid::cells() const noexcept { return static_cast<int>(std::lround(length / kPeriod)); }

double Grid::x(int j) const noexcept {
  const double offset = mode == GridMode::line ? -0.5 * length : 0.0;
  return offset + j * dx();
}

double Grid::wavenumber(int m) const noexcept {
  const int signed_m = m < points / 2 ? m : m - points;
  return mode == GridMode::cell ? signed_m + quasimomentum : kPeriod * signed_m / length;
}

void Grid::validate(const LatticeSpec& spec) const {
  if (!is_power_of_two(points)) throw ConfigError("grid size must be a power of two, got " + std::to_string(points));
  if (mode == GridMode::line && std::abs(length / kPeriod - cells()) > 1e-9)
    throw ConfigError("line box length must be an integer multiple of 2 pi");
  if (spec.dissipative() && dx() > spec.sigma / 8.0) {
    std::ostringstream msg;
    msg << "grid spacing dx=" << dx() << " exceeds sigma/8=" << spec.sigma / 8.0 << "; use at least "
        << resolving_points(length, spec, 1) << " points";
    throw ConfigError(msg.str());
  }
}

int resolving_points(double length, const LatticeSpec& spec, int minimum) {
  int n = std::max(1, minimum);
  n = static_cast<int>(std::bit_ceil(static_cast<unsigned>(n)));
  if (spec.dissipative())
    while (length / n > spec.sigma / 8.0) n *= 2;
  return n;
}

WaveField soliton_pulse(const Grid& grid, double k, double amplitude, double g) {
  if (!(g > 0.0)) throw ConfigError("soliton initial condition needs g > 0");
  WaveField f{grid, ComplexVector(grid.points), 0.0};
  const double height = amplitude * std::sqrt(2.0 / g);
  for (int j = 0; j < grid.points; ++j) {
    const double x = grid.x(j);
    f.psi(j) = std::polar(height / std::cosh(amplitude * x), k * x);
  }
  return f;
}

WaveField uniform_cell_field(const Grid& grid, std::complex<double> value) {
  return {grid, ComplexVector::Constant(grid.points, value), 0.0};
}

SplitStepPropagator::SplitStepPropagator(const Grid& grid, const LatticeSpec& spec, double dt)
    : grid_(grid), spec_(spec), dt_(dt), fft_(grid.points) {
  spec.validate();
  grid.validate(spec);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step must be positive");

  const int M = grid.points;
  const double inv = 1.0 / M;
  half_kinetic_.resize(M);
  full_kinetic_.resize(M);
  for (int m = 0; m < M; ++m) {
    const double kinetic = 0.5 * grid.wavenumber(m) * grid.wavenumber(m);
    half_kinetic_[m] = std::polar(inv, -0.5 * kinetic * dt);
    full_kinetic_[m] = std::polar(inv, -kinetic * dt);
  }

  local_factor_.resize(M);
  phase_weight_.resize(M);
  for (int j = 0; j < M; ++j) {
    const double x = grid.x(j);
    const double V = real_potential_value(x, spec);
    const double G = dissipation_value(x, spec);
    potential_max_ = std::max(potential_max_, std::abs(cplx(V, -G)));
    local_factor_[j] = std::polar(std::exp(-G * dt), -V * dt);
    // Exact phase integral g int_0^dt |psi|^2 e^{-2 G s} ds for the pre-step |psi|^2.
    const double decay = G * dt;
    phase_weight_[j] = spec.g * (decay > 1e-12 ? -std::expm1(-2.0 * decay) / (2.0 * G) : dt);
  }
}

double SplitStepPropagator::local_phase_measure(const WaveField& field) const {
  const double peak = field.psi.size() ? field.psi.cwiseAbs2().maxCoeff() : 0.0;
  return dt_ * (potential_max_ + spec_.g * peak);
}

void SplitStepPropagator::advance(WaveField& field, long steps) {
  if (steps <= 0) return;
  if (field.psi.size() != grid_.points) throw ConfigError("field does not match the propagator grid");
  auto data = fft_.data();
  const int M = grid_.points;
  std::copy(field.psi.data(), field.psi.data() + M, data.begin());
  const bool nonlinear = spec_.g != 0.0;

  fft_.forward();
  for (int m = 0; m < M; ++m) data[m] *= half_kinetic_[m];
  for (long s = 0; s < steps; ++s) {
    fft_.backward();
    double total = 0.0;
    if (nonlinear) {
      for (int j = 0; j < M; ++j) {
        const double intensity = std::norm(data[j]);
        total += intensity;
        data[j] *= local_factor_[j] * rotation(phase_weight_[j] * intensity);
      }
    } else {
      for (int j = 0; j < M; ++j) {
        total += std::norm(data[j]);
        data[j] *= local_factor_[j];
      }
    }
    if (!std::isfinite(total)) {
      std::ostringstream msg;
      msg << "split-step blow-up: non-finite amplitudes at step " << steps_taken_ + s + 1;
      throw NumericError(msg.str());
    }
    fft_.forward();
    const auto& kinetic = (s + 1 == steps) ? half_kinetic_ : full_kinetic_;
    for (int m = 0; m < M; ++m) data[m] *= kinetic[m];
  }
  fft_.backward();

  std::copy(data.begin(), data.end(), field.psi.data());
  steps_taken_ += steps;
  field.time += steps * dt_;
}

WaveField step(const WaveField& field, const LatticeSpec& spec, double dt) {
  SplitStepPropagator propagator(field.grid, spec, dt);
  WaveField next = field;
  propagator.step(next);
  return next;
}

double norm_squared(const WaveField& field) { return field.psi.squaredNorm() * field.grid.dx(); }

double mean_position(const WaveField& field) {
  double weight = 0.0, moment = 0.0;
  for (int j = 0; j < field.grid.points; ++j) {
    const double w = std::norm(field.psi(j));
    weight += w;
    moment += field.grid.x(j) * w;
  }
  if (!(weight > 0.0)) throw DomainError("mean_position: field has zero norm");
  return moment / weight;
}

double soliton_integral(const WaveField& field) { return field.psi.cwiseAbs().sum() * field.grid.dx(); }

double hamiltonian(const WaveField& field, const LatticeSpec& spec) {
  const int M = field.grid.points;
  const double dx = field.grid.dx();
  FftPlan fft(M);
  auto data = fft.data();
  std::copy(field.psi.data(), field.psi.data() + M, data.begin());
  fft.forward();
  double kinetic = 0.0;
  for (int m = 0; m < M; ++m) kinetic += 0.5 * std::pow(field.grid.wavenumber(m), 2) * std::norm(data[m]);
  kinetic *= dx / M;
  double potential = 0.0, interaction = 0.0;
  for (int j = 0; j < M; ++j) {
    const double rho = std::norm(field.psi(j));
    potential += real_potential_value(field.grid.x(j), spec) * rho;
    interaction += rho * rho;
  }
  return kinetic + dx * (potential - 0.5 * spec.g * interaction);
}

std::vector<SpectrumSample> spectrum(const WaveField& field) {
  const int M = field.grid.points;
  FftPlan fft(M);
  auto data = fft.data();
  std::copy(field.psi.data(), field.psi.data() + M, data.begin());
  fft.forward();
  std::vector<SpectrumSample> out(M);
  // Bins ordered from the most negative wavenumber upwards.
  for (int i = 0; i < M; ++i) {
    const int m = (i + M / 2) % M;
    out[i] = {field.grid.wavenumber(m), field.grid.dx() * std::abs(data[m])};
  }
  return out;
}

std::vector<SpectrumSample> spectrum_peaks(const WaveField& field, int count) {
  const auto spec = spectrum(field);
  const int M = static_cast<int>(spec.size());
  std::vector<SpectrumSample> peaks;
  if (M < 3 || count <= 0) return peaks;
  for (int i = 1; i + 1 < M; ++i) {
    const double a = spec[i - 1].amplitude, b = spec[i].amplitude, c = spec[i + 1].amplitude;
    if (!(b > a && b >= c)) continue;
    const double denom = a - 2.0 * b + c;
    double shift = denom < 0.0 ? 0.5 * (a - c) / denom : 0.0;
    shift = std::clamp(shift, -0.5, 0.5);
    const double dk = spec[i + 1].wavenumber - spec[i].wavenumber;
    peaks.push_back({spec[i].wavenumber + shift * dk, b - 0.25 * (a - c) * shift});
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const SpectrumSample& l, const SpectrumSample& r) { return l.amplitude > r.amplitude; });
  if (static_cast<int>(peaks.size()) > count) peaks.resize(count);
  return peaks;
}

double boundary_ratio(const WaveField& field) {
  const int M = field.grid.points;
  const int band = std::max(1, M / 128);
  const auto mag = field.psi.cwiseAbs();
  const double peak = mag.maxCoeff();
  if (!(peak > 0.0)) return 0.0;
  const double edge = std::max(mag.head(band).maxCoeff(), mag.tail(band).maxCoeff());
  return edge / peak;
}

namespace {

WaveTrajectory run(SplitStepPropagator& propagator, WaveField field, const EvolutionOptions& options,
                   bool check_boundary) {
  if (!(options.t_final >= 0.0)) throw ConfigError("t_final must be non-negative");
  if (options.sample_every < 1) throw ConfigError("sample_every must be at least 1");
  const double guard = propagator.local_phase_measure(field);
  if (!(guard < kLocalPhaseLimit)) {
    std::ostringstream msg;
    msg << "time step too large: dt*(max|V - iG| + g max|psi|^2) = " << guard << " >= " << kLocalPhaseLimit;
    throw ConfigError(msg.str());
  }

  const double dt = options.dt;
  const long total = std::lround(options.t_final / dt);
  std::vector<long> snapshot_steps;
  for (double t : options.snapshot_times) snapshot_steps.push_back(std::clamp(std::lround(t / dt), 0L, total));
  std::sort(snapshot_steps.begin(), snapshot_steps.end());
  snapshot_steps.erase(std::unique(snapshot_steps.begin(), snapshot_steps.end()), snapshot_steps.end());

  WaveTrajectory traj;
  const double norm0 = norm_squared(field);
  if (!(norm0 > 0.0)) throw DomainError("initial field has zero norm");
  bool warned = false;
  auto record = [&](long n) {
    traj.times.push_back(n * dt);
    const double nrm = norm_squared(field);
    traj.rescaled_norm.push_back(nrm / norm0);
    traj.mean_x.push_back(nrm > 0.0 ? mean_position(field) : 0.0);
    traj.soliton_integral.push_back(soliton_integral(field));
    if (check_boundary && !warned && boundary_ratio(field) > kBoundaryTolerance) {
      std::ostringstream msg;
      msg << "boundary contamination: edge amplitude " << boundary_ratio(field) << " of max |psi| at t=" << n * dt;
      traj.warnings.push_back(msg.str());
      warned = true;
    }
  };

  long done = 0;
  std::size_t next_snapshot = 0;
  auto take_snapshots = [&] {
    while (next_snapshot < snapshot_steps.size() && snapshot_steps[next_snapshot] == done) {
      WaveField snap = field;
      snap.time = done * dt;
      traj.snapshots.push_back(std::move(snap));
      ++next_snapshot;
    }
  };
  record(0);
  take_snapshots();
  while (done < total) {
    long stop = std::min(total, (done / options.sample_every + 1) * options.sample_every);
    if (next_snapshot < snapshot_steps.size()) stop = std::min(stop, snapshot_steps[next_snapshot]);
    propagator.advance(field, stop - done);
    field.time = stop * dt;
    done = stop;
    if (done % options.sample_every == 0 || done == total) record(done);
    take_snapshots();
  }
  traj.final_peaks = spectrum_peaks(field, options.peak_count);
  traj.final_state = std::move(field);
  return traj;
}

}  // namespace

WaveTrajectory evolve_cell(double k, std::span<const std::complex<double>> U0, const LatticeSpec& spec,
                           const EvolutionOptions& options) {
  if (spec.g != 0.0) throw ConfigError("evolve_cell is linear: spec.g must be 0");
  const double kw = wrap_quasimomentum(k);
  const double shift = std::round(k - kw);
  const Grid grid = Grid::cell(static_cast<int>(U0.size()), kw);
  WaveField field{grid, ComplexVector(grid.points), 0.0};
  // e^{ikx} U0 = e^{i kw x} (e^{i shift x} U0)
  for (int j = 0; j < grid.points; ++j) field.psi(j) = std::polar(1.0, shift * grid.x(j)) * U0[j];
  SplitStepPropagator propagator(grid, spec, options.dt);
  return run(propagator, std::move(field), options, false);
}

WaveTrajectory evolve_line(const WaveField& psi0, const LatticeSpec& spec, const EvolutionOptions& options) {
  if (psi0.grid.mode != GridMode::line) throw ConfigError("evolve_line needs a line-mode grid");
  SplitStepPropagator propagator(psi0.grid, spec, options.dt);
  return run(propagator, psi0, options, true);
}

double fitted_slope(std::span<const double> t, std::span<const double> y, double t_from) {
  double st = 0, sy = 0, stt = 0, sty = 0;
  int n = 0;
  for (std::size_t i = 0; i < t.size() && i < y.size(); ++i) {
    if (t[i] < t_from) continue;
    st += t[i];
    sy += y[i];
    stt += t[i] * t[i];
    sty += t[i] * y[i];
    ++n;
  }
  if (n < 2) throw DomainError("fitted_slope: need at least two samples in the window");
  const double den = n * stt - st * st;
  return (n * sty - st * sy) / den;
}

bool is_stationary(std::span<const double> t, std::span<const double> y, double fraction, double tolerance) {
  if (t.size() < 2) return false;
  const double t0 = t.front(), t1 = t.back();
  return std::abs(fitted_slope(t, y, t1 - fraction * (t1 - t0))) < tolerance;
}

}  // namespace dislat
