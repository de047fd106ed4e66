#pragma once

// Experiment configuration, validation, named presets and the artifact-writing runner.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dislat/lattice.hpp"

namespace dislat {

inline constexpr const char* kVersion = "1.0.0";

enum class RunMode { bands, kp, cell, line };

std::string to_string(RunMode mode);
/// Throws ConfigError for an unknown name.
RunMode parse_mode(const std::string& name);

struct ExperimentConfig {
  RunMode mode = RunMode::bands;
  std::string label = "run";

  // Lattice. Exactly one of g0 / gamma0.
  double v0 = 0.0;
  double sigma = kPi / 20.0;
  std::optional<double> g0;
  std::optional<double> gamma0;
  double nonlin = 0.0;

  // bands / kp
  int n_trunc = 0;  // 0: default_truncation(sigma)
  int k_points = 101;
  int bands_kept = 8;
  std::vector<double> vector_k;
  int vector_bands = 0;
  std::vector<int> branches{-2, -1, 0, 1, 2};

  // cell / line
  double k = 0.5;
  double dt = 1e-3;
  double t_final = 500.0;
  int grid = 0;  // 0: smallest resolving power of two
  int box_cells = 128;
  double amp = 1.0 / (10.0 * kPi);
  long sample_every = 0;  // 0: one sample per unit time
  std::vector<double> snapshot_times;
  int profile_points = 65536;  // row cap for profile_<t>.csv, 0 writes every grid point
  double spectrum_window = 3.0;

  std::filesystem::path out_dir;

  /// The lattice with the missing member of (G0, Gamma0) derived. Throws ConfigError.
  LatticeSpec lattice() const;
  int truncation() const;
  /// Resolved grid size for cell / line runs.
  int grid_points() const;
  double box_length() const;
  long resolved_sample_every() const;
};

/// Parses flat `key = value` text; `#` starts a comment. Numbers accept `pi`, `*`, `/` and
/// parentheses, lists are comma separated. Throws ConfigError naming the offending line.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Sets one key; shared by the config parser and the CLI flags. Throws ConfigError.
void set_field(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Evaluates a number such as `0.5`, `pi/100` or `1/(10*pi)`. Throws ConfigError.
double parse_number(const std::string& text);

/// Precondition findings (empty when the config can run).
std::vector<std::string> validate(const ExperimentConfig& config);

/// Edge amplitude of the initial line pulse relative to its peak.
double isolation_estimate(const ExperimentConfig& config);
inline constexpr double kIsolationTolerance = 1e-8;

std::vector<std::string> preset_names();
/// The runs of one named preset. Throws ConfigError for an unknown name.
std::vector<ExperimentConfig> preset(const std::string& name);

struct RunRecord {
  std::filesystem::path directory;
  std::map<std::string, std::string> checksums;
  std::vector<std::string> warnings;
};

/// Runs one config into config.out_dir (created if needed) and writes manifest.json.
/// Throws ConfigError listing the findings of validate() for an invalid config.
RunRecord run(const ExperimentConfig& config);

/// DISLAT_OUT_ROOT, or "runs".
std::filesystem::path default_output_root();

}  // namespace dislat
