#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <complex>
#include <functional>
#include <limits>

#include "dislat/bloch.hpp"
#include "dislat/propagator.hpp"

using namespace dislat;
using cd = std::complex<double>;

namespace {

const LatticeSpec vacuum{0.0, 0.0, kPi / 20, 0.0};
const LatticeSpec fig1{0.1, 0.22, kPi / 20.0, 0.0};

double relative_l2(const ComplexVector& a, const ComplexVector& b) { return (a - b).norm() / b.norm(); }

WaveField cell_field(int M, double k, const std::function<cd(double)>& u) {
  Grid g = Grid::cell(M, k);
  WaveField f{g, ComplexVector(M), 0.0};
  for (int j = 0; j < M; ++j) f.psi(j) = u(g.x(j));
  return f;
}

double decay_rate(const WaveTrajectory& t, double t_from) {
  std::vector<double> ln;
  for (double v : t.rescaled_norm) ln.push_back(std::log(v));
  return -fitted_slope(t.times, ln, t_from);
}

BlochEigenpair slowest_mode(double k, const LatticeSpec& spec) {
  const auto pairs = eigenpairs(build_operator(k, spec, default_truncation(spec.sigma)));
  return *std::min_element(pairs.begin(), pairs.end(),
                           [](const auto& a, const auto& b) { return a.decay_rate() < b.decay_rate(); });
}

double gamma_min(double k, const LatticeSpec& spec) { return slowest_mode(k, spec).decay_rate(); }

// Periodic part sum_n C_n e^{-inx} of a Bloch eigenvector.
cd periodic_value(const BlochEigenpair& p, double x) {
  const int N = p.truncation();
  cd u = 0.0;
  for (int n = -N; n <= N; ++n) u += p.coefficients(n + N) * std::polar(1.0, -n * x);
  return u;
}

}  // namespace

TEST_CASE("grid geometry") {
  const Grid c = Grid::cell(8, 0.25);
  CHECK(c.dx() == doctest::Approx(kPeriod / 8));
  CHECK(c.x(0) == 0.0);
  CHECK(c.wavenumber(1) == doctest::Approx(1.25));
  CHECK(c.wavenumber(7) == doctest::Approx(-0.75));
  const Grid l = Grid::line(4, 16);
  CHECK(l.cells() == 4);
  CHECK(l.x(0) == doctest::Approx(-4 * kPi));
  CHECK(l.x(8) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(l.wavenumber(1) == doctest::Approx(0.25));
  CHECK_THROWS_AS(Grid::line(0, 16), ConfigError);
}

TEST_CASE("grid validation") {
  const LatticeSpec narrow{0.0, 1.13, kPi / 100, 0.0};
  CHECK_THROWS_AS(Grid::cell(1000).validate(vacuum), ConfigError);
  CHECK_THROWS_AS(Grid::cell(256).validate(narrow), ConfigError);
  CHECK_NOTHROW(Grid::cell(2048).validate(narrow));
  CHECK_NOTHROW(Grid::cell(256).validate(vacuum));
  CHECK(resolving_points(kPeriod, narrow) == 2048);
  CHECK(resolving_points(kPeriod, fig1) == 1024);
  CHECK(resolving_points(128 * kPeriod, narrow) == (1 << 18));
  CHECK(resolving_points(256 * kPeriod, narrow) == (1 << 19));
}

TEST_CASE("free evolution of a single mode is exact") {
  const double k = 0.3, dt = 0.01;
  for (int m : {0, 1, -3, 7}) {
    auto f = cell_field(64, k, [m](double x) { return std::polar(1.0, m * x); });
    const double n0 = norm_squared(f);
    const auto g = step(f, vacuum, dt);
    const double q = m + k;
    const cd phase = std::polar(1.0, -0.5 * q * q * dt);
    CHECK((g.psi - phase * f.psi).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(std::abs(norm_squared(g) - n0) < 1e-14 * n0);
    CHECK(g.time == doctest::Approx(dt));
  }
}

TEST_CASE("soliton is stationary up to its phase") {
  const double A = 1.0 / (10.0 * kPi), T = 100.0;
  for (double g : {1.0, 2.0}) {
    const LatticeSpec spec{0.0, 0.0, kPi / 20, g};
    const Grid grid = Grid::line(256, 1 << 13);
    // A sech(Ax) / sqrt(g) e^{i A^2 t / 2} solves i psi_t = -psi_xx / 2 - g |psi|^2 psi
    WaveField psi0{grid, ComplexVector(grid.points), 0.0};
    for (int j = 0; j < grid.points; ++j) psi0.psi(j) = A / std::sqrt(g) / std::cosh(A * grid.x(j));
    EvolutionOptions opt;
    opt.dt = 1e-2;
    opt.t_final = T;
    opt.sample_every = 1000;
    const auto traj = evolve_line(psi0, spec, opt);
    const ComplexVector exact = psi0.psi * std::polar(1.0, 0.5 * A * A * T);
    CHECK(relative_l2(traj.final_state.psi, exact) < 1e-6);
    CHECK(traj.final_state.time == doctest::Approx(T));
  }
}

TEST_CASE("the sqrt(2/g) pulse breathes") {
  const double A = 1.0 / (10.0 * kPi);
  const LatticeSpec spec{0.0, 0.0, kPi / 20, 1.0};
  const Grid grid = Grid::line(256, 1 << 13);
  const auto psi0 = soliton_pulse(grid, 0.0, A, 1.0);
  EvolutionOptions opt;
  opt.dt = 1e-2;
  opt.t_final = 100.0;
  opt.sample_every = 1000;
  const auto traj = evolve_line(psi0, spec, opt);
  const ComplexVector drift = traj.final_state.psi.cwiseAbs() - psi0.psi.cwiseAbs();
  CHECK(drift.norm() > 1e-3 * psi0.psi.norm());
  CHECK(std::abs(traj.rescaled_norm.back() - 1.0) < 1e-10);
}

TEST_CASE("Strang splitting is second order") {
  const LatticeSpec spec{1.0, 0.5, kPi / 4, 1.0};
  const auto u0 = cell_field(256, 0.2, [](double x) { return cd(1.0 + 0.5 * std::cos(x), 0.3 * std::sin(2 * x)); });
  auto run = [&](double dt) {
    SplitStepPropagator p(u0.grid, spec, dt);
    WaveField f = u0;
    p.advance(f, std::lround(1.0 / dt));
    return f.psi;
  };
  const auto a = run(0.02), b = run(0.01), c = run(0.005), d = run(0.0025);
  const double r1 = (a - b).norm() / (b - c).norm();
  const double r2 = (b - c).norm() / (c - d).norm();
  CHECK(r1 == doctest::Approx(4.0).epsilon(0.125));
  CHECK(r2 == doctest::Approx(4.0).epsilon(0.125));
}

TEST_CASE("norm is conserved without dissipation") {
  const LatticeSpec real_lattice{0.1, 0.0, kPi / 20, 0.0};
  auto f = cell_field(256, 0.17, [](double x) { return cd(std::cos(x) + 0.2, 0.5 * std::sin(3 * x)); });
  f.psi /= std::sqrt(norm_squared(f));
  SplitStepPropagator p(f.grid, real_lattice, 1e-3);
  p.advance(f, 10000);
  CHECK(std::abs(norm_squared(f) - 1.0) < 1e-10);
  CHECK(p.steps_taken() == 10000);
}

TEST_CASE("norm and energy are conserved by the nonlinear flow") {
  const LatticeSpec spec{0.1, 0.0, kPi / 20, 1.0};
  const Grid grid = Grid::line(32, 1 << 12);
  const auto psi0 = soliton_pulse(grid, 0.0, 0.5, 1.0);
  EvolutionOptions opt;
  opt.dt = 1e-3;
  opt.t_final = 100.0;
  const auto traj = evolve_line(psi0, spec, opt);
  const double h0 = hamiltonian(psi0, spec), h1 = hamiltonian(traj.final_state, spec);
  CHECK(std::abs(traj.rescaled_norm.back() - 1.0) < 1e-8);
  CHECK(std::abs(h1 - h0) < 1e-8 * std::abs(h0));
}

TEST_CASE("dissipation never increases the norm") {
  const LatticeSpec narrow{0.0, 1.13, kPi / 100, 0.0};
  const std::vector<cd> u0(2048, 1.0);
  EvolutionOptions opt;
  opt.dt = 1e-2;
  opt.t_final = 50.0;
  opt.sample_every = 5;
  for (double k : {0.25, 0.5, 1.0}) {
    const auto traj = evolve_cell(k, u0, narrow, opt);
    CHECK(traj.rescaled_norm.front() == 1.0);
    for (std::size_t i = 1; i < traj.rescaled_norm.size(); ++i)
      CHECK(traj.rescaled_norm[i] <= traj.rescaled_norm[i - 1] + 1e-12);
  }
}

TEST_CASE("cell decay rate equals twice the slowest Bloch decay rate") {
  EvolutionOptions opt;
  opt.dt = 5e-3;
  opt.t_final = 500.0;
  opt.sample_every = 200;
  const int M = resolving_points(kPeriod, fig1);
  struct Case {
    double k;
    std::function<cd(double)> u;
  };
  // Initial periodic parts overlapping the slowest mode at each k.
  const std::vector<Case> cases{
      {0.0, [](double x) { return cd(std::sin(x) + 0.3 * std::cos(x)); }},
      // several bands decay at nearly the same rate here; start close to the slowest one
      {0.25, [slow = slowest_mode(0.25, fig1)](double x) { return periodic_value(slow, x) + 0.05; }},
      {0.5, [](double x) { return std::polar(1.0, -0.5 * x) * std::sin(0.5 * x) + 0.3; }}};
  for (const auto& c : cases) {
    std::vector<cd> u0;
    const Grid g = Grid::cell(M, c.k);
    for (int j = 0; j < M; ++j) u0.push_back(c.u(g.x(j)));
    const auto traj = evolve_cell(c.k, u0, fig1, opt);
    const double ratio = decay_rate(traj, 250.0) / (2.0 * gamma_min(c.k, fig1));
    INFO("k = " << c.k << ", ratio = " << ratio);
    CHECK(ratio == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("integer shifts of k are absorbed into the periodic part") {
  const LatticeSpec narrow{0.0, 1.13, kPi / 100, 0.0};
  const int M = 2048;
  const Grid g = Grid::cell(M, 0.0);
  std::vector<cd> ones(M, 1.0), shifted;
  for (int j = 0; j < M; ++j) shifted.push_back(std::polar(1.0, g.x(j)));
  EvolutionOptions opt;
  opt.dt = 1e-2;
  opt.t_final = 5.0;
  opt.sample_every = 100;
  const auto a = evolve_cell(1.0, ones, narrow, opt);
  const auto b = evolve_cell(0.0, shifted, narrow, opt);
  REQUIRE(a.rescaled_norm.size() == b.rescaled_norm.size());
  for (std::size_t i = 0; i < a.rescaled_norm.size(); ++i)
    CHECK(a.rescaled_norm[i] == doctest::Approx(b.rescaled_norm[i]).epsilon(1e-13));
}

TEST_CASE("line runs preserve quasimomentum and drift at the group velocity") {
  const LatticeSpec spec{0.0, 0.22, kPi / 20, 1.0};
  const double k = 0.25, A = 1.0 / (10.0 * kPi);
  const Grid grid = Grid::line(256, resolving_points(256 * kPeriod, spec));
  EvolutionOptions opt;
  opt.dt = 1e-2;
  opt.t_final = 20.0;
  opt.sample_every = 100;
  const auto traj = evolve_line(soliton_pulse(grid, k, A, 1.0), spec, opt);
  CHECK(fitted_slope(traj.times, traj.mean_x, 0.0) == doctest::Approx(k).epsilon(0.1));
  // power near k + n and -(k + n)
  double inside = 0.0, total = 0.0;
  for (const auto& s : spectrum(traj.final_state)) {
    const double p = s.amplitude * s.amplitude;
    total += p;
    const double a = std::abs(s.wavenumber - k - std::round(s.wavenumber - k));
    const double b = std::abs(s.wavenumber + k - std::round(s.wavenumber + k));
    if (std::min(a, b) < 0.12) inside += p;
  }
  CHECK(inside / total > 0.999);
  // fast scattered harmonics reach the edges at a small level
  CHECK(boundary_ratio(traj.final_state) < 1e-5);
}

TEST_CASE("soliton integral") {
  for (double A : {1.0 / (10.0 * kPi), 0.5}) {
    const Grid grid = Grid::line(256, 1 << 15);
    CHECK(soliton_integral(soliton_pulse(grid, 0.3, A, 1.0)) == doctest::Approx(kPi * std::sqrt(2.0)).epsilon(1e-10));
  }
  const Grid grid = Grid::line(4, 256);
  WaveField zero{grid, ComplexVector::Zero(256), 0.0};
  CHECK(soliton_integral(zero) == 0.0);
  CHECK_FALSE(has_soliton_component(zero));
  CHECK(kSolitonThreshold == doctest::Approx(1.316958).epsilon(1e-6));
}

TEST_CASE("mean position") {
  const Grid grid = Grid::line(64, 1 << 12);
  const auto even = soliton_pulse(grid, 0.4, 0.2, 1.0);
  CHECK(std::abs(mean_position(even)) < 1e-12);
  WaveField moved = even;
  for (int j = 0; j < grid.points; ++j) moved.psi(j) = std::polar(1.0 / std::cosh(0.2 * (grid.x(j) - 10.0)), 0.1);
  CHECK(mean_position(moved) == doctest::Approx(10.0).epsilon(1e-10));
  WaveField zero{grid, ComplexVector::Zero(grid.points), 0.0};
  CHECK_THROWS_AS(mean_position(zero), DomainError);
}

TEST_CASE("spectrum peaks") {
  const Grid grid = Grid::line(64, 1 << 12);
  const auto pulse = soliton_pulse(grid, 0.5, 0.1, 1.0);
  const auto peaks = spectrum_peaks(pulse, 2);
  REQUIRE(!peaks.empty());
  CHECK(peaks[0].wavenumber == doctest::Approx(0.5).epsilon(1e-3));
  if (peaks.size() > 1) CHECK(peaks[1].amplitude < 1e-3 * peaks[0].amplitude);

  WaveField real_field = pulse;
  for (int j = 0; j < grid.points; ++j) real_field.psi(j) = std::cos(0.7 * grid.x(j)) / std::cosh(0.1 * grid.x(j));
  const auto sym = spectrum_peaks(real_field, 2);
  REQUIRE(sym.size() == 2);
  CHECK(sym[0].wavenumber == doctest::Approx(-sym[1].wavenumber).epsilon(1e-12));
  CHECK(std::abs(sym[0].amplitude - sym[1].amplitude) < 1e-12 * sym[0].amplitude);
  CHECK(std::abs(std::abs(sym[0].wavenumber) - 0.7) < 1e-2);
}

TEST_CASE("Hamiltonian of a plane wave") {
  auto f = cell_field(64, 0.3, [](double x) { return std::polar(1.0, 2.0 * x); });
  CHECK(hamiltonian(f, vacuum) == doctest::Approx(0.5 * 2.3 * 2.3 * kPeriod).epsilon(1e-12));
}

TEST_CASE("failure modes") {
  auto f = cell_field(64, 0.0, [](double) { return cd(1.0); });
  f.psi(3) = cd(std::numeric_limits<double>::quiet_NaN(), 0.0);
  SplitStepPropagator p(f.grid, vacuum, 1e-3);
  CHECK_THROWS_AS(p.advance(f, 1), NumericError);
  CHECK_THROWS_AS(SplitStepPropagator(Grid::cell(64), vacuum, 0.0), ConfigError);

  const std::vector<cd> u0(64, 1.0);
  EvolutionOptions opt;
  opt.t_final = 1.0;
  CHECK_THROWS_AS(evolve_cell(0.5, u0, LatticeSpec{0.0, 0.0, 1.0, 1.0}, opt), ConfigError);
  const auto cellf = cell_field(64, 0.0, [](double) { return cd(1.0); });
  CHECK_THROWS_AS(evolve_line(cellf, vacuum, opt), ConfigError);
  CHECK_THROWS_AS(soliton_pulse(Grid::line(4, 256), 0.0, 0.1, 0.0), ConfigError);

  // dt (max|V - iG|) far above the accuracy limit
  opt.dt = 1.0;
  CHECK_THROWS_AS(evolve_cell(0.5, std::vector<cd>(2048, 1.0), LatticeSpec{0.0, 1.13, kPi / 100, 0.0}, opt), ConfigError);
}

TEST_CASE("boundary contamination is reported") {
  const LatticeSpec spec{0.0, 0.0, kPi / 20, 1.0};
  const Grid grid = Grid::line(16, 1 << 11);
  EvolutionOptions opt;
  opt.dt = 1e-2;
  opt.t_final = 1.0;
  opt.sample_every = 10;
  const auto traj = evolve_line(soliton_pulse(grid, 0.5, 1.0 / (10 * kPi), 1.0), spec, opt);
  REQUIRE(traj.warnings.size() == 1);
  CHECK(traj.warnings[0].find("boundary") != std::string::npos);
  CHECK(boundary_ratio(traj.final_state) > kBoundaryTolerance);
}

TEST_CASE("snapshots and sampling") {
  const std::vector<cd> u0(1024, 1.0);
  EvolutionOptions opt;
  opt.dt = 1e-2;
  opt.t_final = 2.05;
  opt.sample_every = 50;
  opt.snapshot_times = {0.0, 1.0, 2.05};
  const auto traj = evolve_cell(0.25, u0, fig1, opt);
  REQUIRE(traj.times.size() == 6);
  CHECK(traj.times.back() == doctest::Approx(2.05));
  REQUIRE(traj.snapshots.size() == 3);
  CHECK(traj.snapshots[1].time == doctest::Approx(1.0));
}

TEST_CASE("slope fit and stationarity") {
  std::vector<double> t, y, flat;
  for (int i = 0; i <= 100; ++i) {
    t.push_back(i);
    y.push_back(3.0 - 0.25 * i);
    flat.push_back(i < 50 ? std::sin(0.3 * i) : 1.0);
  }
  CHECK(fitted_slope(t, y, 0.0) == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK_FALSE(is_stationary(t, y));
  CHECK(is_stationary(t, flat));
  CHECK_THROWS_AS(fitted_slope(t, y, 1000.0), DomainError);
}
