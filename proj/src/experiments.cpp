#include "dislat/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <Eigen/Core>
#include <fftw3.h>
#include <json.hpp>

#include "dislat/bloch.hpp"
#include "dislat/csv.hpp"
#include "dislat/errors.hpp"
#include "dislat/kronig_penney.hpp"
#include "dislat/propagator.hpp"

namespace dislat {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// expr := factor (('*' | '/') factor)* ; factor := ['-'] (number | 'pi' | '(' expr ')')
class NumberParser {
 public:
  explicit NumberParser(const std::string& text) : s_(text) {}

  double parse() {
    const double v = expr();
    skip();
    if (pos_ != s_.size()) fail();
    return v;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  [[noreturn]] void fail() const { throw ConfigError("cannot parse number '" + s_ + "'"); }

  double expr() {
    double v = factor();
    for (;;) {
      skip();
      if (pos_ < s_.size() && s_[pos_] == '*') {
        ++pos_;
        v *= factor();
      } else if (pos_ < s_.size() && s_[pos_] == '/') {
        ++pos_;
        v /= factor();
      } else {
        return v;
      }
    }
  }

  double factor() {
    skip();
    if (pos_ >= s_.size()) fail();
    if (s_[pos_] == '-') {
      ++pos_;
      return -factor();
    }
    if (s_[pos_] == '(') {
      ++pos_;
      const double v = expr();
      skip();
      if (pos_ >= s_.size() || s_[pos_] != ')') fail();
      ++pos_;
      return v;
    }
    if (s_.compare(pos_, 2, "pi") == 0) {
      pos_ += 2;
      return kPi;
    }
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail();
    pos_ += static_cast<std::size_t>(end - begin);
    return v;
  }

  std::string s_;
  std::size_t pos_ = 0;
};

long parse_integer(const std::string& text) {
  const double v = parse_number(text);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) throw ConfigError("expected an integer, got '" + text + "'");
  return static_cast<long>(v);
}

std::string label_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::bands: return "bands";
    case RunMode::kp: return "kp";
    case RunMode::cell: return "cell";
    case RunMode::line: return "line";
  }
  return "?";
}

RunMode parse_mode(const std::string& name) {
  for (RunMode m : {RunMode::bands, RunMode::kp, RunMode::cell, RunMode::line})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown mode '" + name + "' (expected bands, kp, cell or line)");
}

double parse_number(const std::string& text) { return NumberParser(trim(text)).parse(); }

LatticeSpec ExperimentConfig::lattice() const {
  if (g0.has_value() == gamma0.has_value()) throw ConfigError("exactly one of g0 and gamma0 must be given");
  LatticeSpec spec = g0 ? LatticeSpec{v0, *g0, sigma, nonlin} : LatticeSpec::from_gamma0(v0, sigma, *gamma0, nonlin);
  spec.validate();
  return spec;
}

int ExperimentConfig::truncation() const { return n_trunc > 0 ? n_trunc : default_truncation(sigma); }

double ExperimentConfig::box_length() const { return mode == RunMode::line ? box_cells * kPeriod : kPeriod; }

int ExperimentConfig::grid_points() const {
  if (grid > 0) return grid;
  return resolving_points(box_length(), lattice());
}

long ExperimentConfig::resolved_sample_every() const {
  if (sample_every > 0) return sample_every;
  return std::max(1L, std::lround(1.0 / dt));
}

void set_field(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  auto number = [&] { return parse_number(value); };
  auto integer = [&] { return parse_integer(value); };
  auto numbers = [&] {
    std::vector<double> out;
    for (auto& item : split_list(value)) out.push_back(parse_number(item));
    return out;
  };
  try {
    if (key == "mode") c.mode = parse_mode(value);
    else if (key == "label") c.label = value;
    else if (key == "v0") c.v0 = number();
    else if (key == "sigma") c.sigma = number();
    else if (key == "g0") c.g0 = number();
    else if (key == "gamma0") c.gamma0 = number();
    else if (key == "nonlin" || key == "g") c.nonlin = number();
    else if (key == "n_trunc") c.n_trunc = static_cast<int>(integer());
    else if (key == "k_points") c.k_points = static_cast<int>(integer());
    else if (key == "bands_kept") c.bands_kept = static_cast<int>(integer());
    else if (key == "vector_k") c.vector_k = numbers();
    else if (key == "vector_bands") c.vector_bands = static_cast<int>(integer());
    else if (key == "branches") {
      c.branches.clear();
      for (auto& item : split_list(value)) c.branches.push_back(static_cast<int>(parse_integer(item)));
    } else if (key == "k") c.k = number();
    else if (key == "dt") c.dt = number();
    else if (key == "t_final") c.t_final = number();
    else if (key == "grid") c.grid = static_cast<int>(integer());
    else if (key == "box_cells") c.box_cells = static_cast<int>(integer());
    else if (key == "amp") c.amp = number();
    else if (key == "sample_every") c.sample_every = integer();
    else if (key == "snapshot_times") c.snapshot_times = numbers();
    else if (key == "profile_points") c.profile_points = static_cast<int>(integer());
    else if (key == "spectrum_window") c.spectrum_window = number();
    else if (key == "out") c.out_dir = value;
    else throw ConfigError("unknown key");
  } catch (const ConfigError& e) {
    throw ConfigError("field '" + key + "': " + e.what());
  }
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    try {
      set_field(base, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

double isolation_estimate(const ExperimentConfig& c) {
  // Initial pulse edge relative to its peak; the profile is sech(A x) about the box centre.
  return 1.0 / std::cosh(c.amp * 0.5 * c.box_length());
}

std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> findings;
  auto finding = [&](const std::string& s) { findings.push_back(s); };
  std::ostringstream msg;
  auto flush = [&] {
    finding(msg.str());
    msg.str({});
  };

  std::optional<LatticeSpec> spec;
  try {
    spec = c.lattice();
  } catch (const ConfigError& e) {
    finding(e.what());
  }
  if (c.label.empty() || c.label.find('/') != std::string::npos) finding("label must be a non-empty name without '/'");

  switch (c.mode) {
    case RunMode::bands: {
      if (c.k_points < 2) finding("k_points must be at least 2");
      if (spec && spec->dissipative() && c.truncation() < minimum_truncation(c.sigma)) {
        msg << "N=" << c.truncation() << " below N_min=" << minimum_truncation(c.sigma) << " for sigma=" << c.sigma;
        flush();
      }
      if (c.bands_kept < 1 || c.bands_kept > 2 * c.truncation() + 1) finding("bands_kept must lie in [1, 2N+1]");
      if (c.vector_bands < 0 || c.vector_bands > c.bands_kept) finding("vector_bands must lie in [0, bands_kept]");
      break;
    }
    case RunMode::kp: {
      if (c.k_points < 1) finding("k_points must be at least 1");
      if (c.branches.empty()) finding("branches must not be empty");
      break;
    }
    case RunMode::cell:
    case RunMode::line: {
      if (!(c.dt > 0.0)) finding("dt must be positive");
      if (!(c.t_final >= 0.0)) finding("t_final must be non-negative");
      if (c.sample_every < 0) finding("sample_every must be non-negative");
      if (c.profile_points < 0) finding("profile_points must be non-negative");
      if (c.mode == RunMode::cell && c.nonlin != 0.0) finding("cell runs are linear: nonlin must be 0");
      if (c.mode == RunMode::line) {
        if (!(c.nonlin > 0.0)) finding("line runs start from the soliton profile and need nonlin > 0");
        if (c.box_cells < 1) finding("box_cells must be at least 1");
        if (!(c.amp > 0.0)) finding("amp must be positive");
      }
      if (!spec || findings.size() > 0) break;
      const int M = c.grid_points();
      const double dx = c.box_length() / M;
      if (!is_power_of_two(M)) {
        msg << "grid M=" << M << " is not a power of two";
        flush();
      }
      if (spec->dissipative() && dx > c.sigma / 8.0) {
        msg << "dx=" << dx << " > sigma/8=" << c.sigma / 8.0 << " (grid M=" << M << ")";
        flush();
      }
      if (c.mode == RunMode::line) {
        const double iso = isolation_estimate(c);
        if (iso > kIsolationTolerance) {
          msg << "box of " << c.box_cells << " cells leaves initial edge amplitude " << iso << " > "
              << kIsolationTolerance;
          flush();
        }
      }
      const double peak = c.mode == RunMode::line ? 2.0 * c.amp * c.amp : 0.0;
      const double guard = c.dt * (std::hypot(c.v0, spec->G0) + c.nonlin * peak);
      if (!(guard < kLocalPhaseLimit)) {
        msg << "dt*(max|V - iG| + g max|psi|^2) = " << guard << " >= " << kLocalPhaseLimit;
        flush();
      }
      break;
    }
  }
  return findings;
}

// ---------------------------------------------------------------------------------------------
// presets

namespace {

ExperimentConfig bands_preset(const std::string& label, double v0, double g0, double sigma) {
  ExperimentConfig c;
  c.mode = RunMode::bands;
  c.label = label;
  c.v0 = v0;
  c.g0 = g0;
  c.sigma = sigma;
  c.k_points = 101;
  c.bands_kept = 8;
  c.vector_k = {0.0, 0.25, 0.5};
  c.vector_bands = 4;
  return c;
}

ExperimentConfig cell_preset(double k, double g0, double sigma, const std::string& tag) {
  ExperimentConfig c;
  c.mode = RunMode::cell;
  c.label = "k" + label_number(k) + "_" + tag;
  c.g0 = g0;
  c.sigma = sigma;
  c.k = k;
  c.dt = 1e-3;
  c.t_final = 500.0;
  return c;
}

// Soliton runs: the box keeps the initial sech tail below the isolation tolerance.
ExperimentConfig line_preset(double k, double amp, double g0, double sigma, const std::string& tag) {
  ExperimentConfig c;
  c.mode = RunMode::line;
  c.g0 = g0;
  c.sigma = sigma;
  c.nonlin = 1.0;
  c.k = k;
  c.amp = amp;
  c.box_cells = amp * kPi > 0.5 ? 64 : 256;
  c.dt = 5e-3;
  c.t_final = 500.0;
  c.label = "k" + label_number(k) + "_A" + (amp * kPi > 0.5 ? "1" : "0.1") + "_" + tag;
  return c;
}

struct DissipationCase {
  double g0;
  double sigma;
  const char* tag;
};

const DissipationCase kNarrow{1.13, kPi / 100.0, "s100"};
const DissipationCase kMedium{0.22, kPi / 20.0, "s20"};
const DissipationCase kWide{0.045, kPi / 4.0, "s4"};

}  // namespace

std::vector<std::string> preset_names() {
  return {"fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11"};
}

std::vector<ExperimentConfig> preset(const std::string& name) {
  std::vector<ExperimentConfig> runs;
  if (name == "fig1" || name == "fig2") {
    runs.push_back(bands_preset(name, 0.1, 0.22, kPi / 20.0));
  } else if (name == "fig3" || name == "fig4") {
    runs.push_back(bands_preset(name, 0.0, 1.6, kPi / 100.0));
  } else if (name == "fig5") {
    runs.push_back(bands_preset(name, 0.0, 1.12, kPi / 10.0));
  } else if (name == "fig6") {
    runs.push_back(bands_preset(name, 0.0, 0.13, kPi / 10.0));
  } else if (name == "fig7") {
    for (double k : {1.0, 0.5, 0.25}) runs.push_back(cell_preset(k, kNarrow.g0, kNarrow.sigma, kNarrow.tag));
    for (double k : {1.0, 0.5}) runs.push_back(cell_preset(k, kWide.g0, kWide.sigma, kWide.tag));
  } else if (name == "fig8") {
    auto c = cell_preset(0.5, kNarrow.g0, kNarrow.sigma, kNarrow.tag);
    c.snapshot_times = {0.0, 500.0};
    runs.push_back(c);
  } else if (name == "fig9") {
    for (double amp : {1.0 / kPi, 1.0 / (10.0 * kPi)})
      for (const auto& d : {kNarrow, kMedium, kWide})
        for (double k : {1.0, 0.5, 0.25}) runs.push_back(line_preset(k, amp, d.g0, d.sigma, d.tag));
  } else if (name == "fig10") {
    auto c = line_preset(0.5, 1.0 / (10.0 * kPi), kNarrow.g0, kNarrow.sigma, kNarrow.tag);
    c.snapshot_times = {0.0, 500.0};
    runs.push_back(c);
  } else if (name == "fig11") {
    for (double k : {0.5, 1.0}) runs.push_back(line_preset(k, 1.0 / (10.0 * kPi), kNarrow.g0, kNarrow.sigma, kNarrow.tag));
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return runs;
}

std::filesystem::path default_output_root() {
  const char* env = std::getenv("DISLAT_OUT_ROOT");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("runs");
}

// ---------------------------------------------------------------------------------------------
// runner

namespace {

using json = nlohmann::ordered_json;

struct Outputs {
  std::filesystem::path dir;
  std::map<std::string, std::string> checksums;
  void save(const std::string& name, const CsvWriter& table) { checksums[name] = hex64(table.save(dir / name)); }
};

void write_bands(const ExperimentConfig& c, const LatticeSpec& spec, Outputs& out, json& resolved) {
  const int N = c.truncation();
  const auto k_grid = uniform_k_grid(c.k_points);
  const BandStructure bands = band_scan(spec, k_grid, N, c.bands_kept);
  CsvWriter table{"k", "band_index", "re_mu", "im_mu"};
  for (std::size_t i = 0; i < k_grid.size(); ++i)
    for (int b = 1; b <= bands.bands_kept(); ++b) {
      const auto mu = bands.at(i, b).mu;
      table.row({k_grid[i], double(b), mu.real(), mu.imag()});
    }
  out.save("bands.csv", table);

  for (double k : c.vector_k) {
    const auto pairs = eigenpairs(build_operator(k, spec, N));
    for (int b = 1; b <= c.vector_bands; ++b) {
      const auto& pair = pairs.at(b - 1);
      CsvWriter vec{"fourier_index", "re_c", "im_c"};
      for (int r = 0; r < pair.coefficients.size(); ++r)
        vec.row({double(r - N), pair.coefficients(r).real(), pair.coefficients(r).imag()});
      out.save("bloch_vec_" + label_number(k) + "_" + std::to_string(b) + ".csv", vec);
    }
  }
  resolved["n_trunc"] = N;
  resolved["n_min"] = minimum_truncation(c.sigma);
  resolved["k_points"] = c.k_points;
  resolved["bands_kept"] = c.bands_kept;
  resolved["vector_k"] = c.vector_k;
  resolved["vector_bands"] = c.vector_bands;
}

void write_kp(const ExperimentConfig& c, const LatticeSpec& spec, Outputs& out, json& resolved,
              std::vector<std::string>& warnings) {
  const double gamma0 = spec.gamma0();
  const auto k_grid = uniform_k_grid(std::max(c.k_points, 2));
  CsvWriter table{"k", "branch", "re_mu", "im_mu", "abs_residual"};
  for (int b : c.branches)
    for (double k : k_grid) {
      const KPRoot root = solve_mu(k, gamma0, b);
      if (root.branch_jump) warnings.push_back("branch jump at k=" + format_double(k) + " branch " + std::to_string(b));
      table.row({k, double(b), root.mu.real(), root.mu.imag(), std::abs(root.residual)});
    }
  out.save("kp_dispersion.csv", table);
  resolved["k_points"] = k_grid.size();
  resolved["branches"] = c.branches;
}

void write_profile(const WaveField& field, int row_cap, Outputs& out) {
  const int M = field.grid.points;
  const int stride = row_cap > 0 ? std::max(1, M / row_cap) : 1;
  const bool cell = field.grid.mode == GridMode::cell;
  CsvWriter table{"x", "re_psi", "im_psi", "abs_psi"};
  for (int j = 0; j < M; j += stride) {
    const double x = field.grid.x(j);
    // Cell mode stores the periodic part; write the physical field.
    const std::complex<double> psi = cell ? std::polar(1.0, field.grid.quasimomentum * x) * field.psi(j) : field.psi(j);
    table.row({x, psi.real(), psi.imag(), std::abs(psi)});
  }
  out.save("profile_" + label_number(field.time) + ".csv", table);
}

void write_trajectory(const ExperimentConfig& c, const WaveTrajectory& traj, Outputs& out) {
  CsvWriter diag{"t", "rescaled_norm", "mean_x", "soliton_integral"};
  for (std::size_t i = 0; i < traj.times.size(); ++i)
    diag.row({traj.times[i], traj.rescaled_norm[i], traj.mean_x[i], traj.soliton_integral[i]});
  out.save("diag.csv", diag);
  for (const auto& snap : traj.snapshots) write_profile(snap, c.profile_points, out);
}

void write_evolution(const ExperimentConfig& c, const LatticeSpec& spec, Outputs& out, json& resolved,
                     std::vector<std::string>& warnings) {
  EvolutionOptions options;
  options.dt = c.dt;
  options.t_final = c.t_final;
  options.sample_every = c.resolved_sample_every();
  options.snapshot_times = c.snapshot_times.empty() ? std::vector<double>{0.0, c.t_final} : c.snapshot_times;
  const int M = c.grid_points();

  WaveTrajectory traj;
  if (c.mode == RunMode::cell) {
    const std::vector<std::complex<double>> U0(M, 1.0);
    traj = evolve_cell(c.k, U0, spec, options);
  } else {
    const Grid grid = Grid::line(c.box_cells, M);
    traj = evolve_line(soliton_pulse(grid, c.k, c.amp, c.nonlin), spec, options);
    CsvWriter table{"wavenumber", "amplitude"};
    for (const auto& s : spectrum(traj.final_state))
      if (std::abs(s.wavenumber) <= c.spectrum_window) table.row({s.wavenumber, s.amplitude});
    out.save("spectrum_final.csv", table);
  }
  write_trajectory(c, traj, out);
  warnings.insert(warnings.end(), traj.warnings.begin(), traj.warnings.end());

  json peaks = json::array();
  for (const auto& p : traj.final_peaks) peaks.push_back({{"wavenumber", p.wavenumber}, {"amplitude", p.amplitude}});
  resolved["k"] = c.k;
  resolved["dt"] = c.dt;
  resolved["t_final"] = c.t_final;
  resolved["grid"] = M;
  resolved["length"] = c.box_length();
  resolved["dx"] = c.box_length() / M;
  resolved["sample_every"] = options.sample_every;
  resolved["snapshot_times"] = options.snapshot_times;
  if (c.mode == RunMode::line) {
    resolved["box_cells"] = c.box_cells;
    resolved["amp"] = c.amp;
    resolved["isolation_estimate"] = isolation_estimate(c);
  }
  resolved["final_peaks"] = peaks;
}

std::string fftw_version_string() {
  std::string v = fftw_version;
  return v;
}

}  // namespace

RunRecord run(const ExperimentConfig& config) {
  const auto findings = validate(config);
  if (!findings.empty()) {
    std::string msg = "invalid config '" + config.label + "':";
    for (const auto& f : findings) msg += "\n  " + f;
    throw ConfigError(msg);
  }
  const LatticeSpec spec = config.lattice();
  Outputs out;
  out.dir = config.out_dir.empty() ? default_output_root() / config.label : config.out_dir;
  std::filesystem::create_directories(out.dir);

  json resolved;
  resolved["mode"] = to_string(config.mode);
  resolved["label"] = config.label;
  resolved["v0"] = spec.V0;
  resolved["sigma"] = spec.sigma;
  resolved["g0"] = spec.G0;
  resolved["gamma0"] = spec.gamma0();
  resolved["gamma0_derived"] = config.g0.has_value();
  resolved["nonlin"] = spec.g;

  std::vector<std::string> warnings;
  try {
    switch (config.mode) {
      case RunMode::bands: write_bands(config, spec, out, resolved); break;
      case RunMode::kp: write_kp(config, spec, out, resolved, warnings); break;
      case RunMode::cell:
      case RunMode::line: write_evolution(config, spec, out, resolved, warnings); break;
    }
  } catch (const NumericError& e) {
    throw NumericError("run '" + config.label + "' (" + to_string(config.mode) + "): " + e.what());
  }

  json manifest;
  manifest["run"] = resolved;
  manifest["versions"] = {
      {"dislat", kVersion},
      {"modules",
       {{"lattice", kVersion}, {"bloch_solver", kVersion}, {"kronig_penney", kVersion}, {"propagator", kVersion},
        {"experiments_cli", kVersion}}},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"fftw", fftw_version_string()}};
  manifest["files"] = out.checksums;
  manifest["warnings"] = warnings;
  std::ofstream(out.dir / "manifest.json") << manifest.dump(2) << '\n';

  return RunRecord{out.dir, out.checksums, warnings};
}

}  // namespace dislat
