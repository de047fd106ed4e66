// dislat: band structures, Kronig-Penney roots and split-step runs for dissipative lattices.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "dislat/errors.hpp"
#include "dislat/experiments.hpp"

namespace {

// Flags mirror config keys; values are kept as strings so that `pi/100` etc. parse the same
// way as in config files.
struct FlagSet {
  std::string config_file;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key = value config file (flags override it)");
    add(app, "--label", "label", "run label / output subdirectory");
    add(app, "--v0", "v0", "real lattice depth V0");
    add(app, "--sigma", "sigma", "Gaussian width of the dissipation sites");
    auto* g0 = add(app, "--g0", "g0", "peak dissipation G0");
    auto* gamma0 = add(app, "--gamma0", "gamma0", "integral dissipation strength Gamma0");
    g0->excludes(gamma0);
    add(app, "--nonlin", "nonlin", "nonlinearity g");
    add(app, "--k", "k", "Bloch index / carrier wavenumber");
    add(app, "--n-trunc", "n_trunc", "Fourier truncation N (matrix size 2N+1)");
    add(app, "--k-points", "k_points", "number of k points across the zone");
    add(app, "--bands", "bands_kept", "bands kept per k");
    add(app, "--vector-k", "vector_k", "comma separated k values for eigenvector output");
    add(app, "--vector-bands", "vector_bands", "bands per vector_k written as bloch_vec files");
    add(app, "--branches", "branches", "comma separated Kronig-Penney branch indices");
    add(app, "--dt", "dt", "time step");
    add(app, "--t-final", "t_final", "final time");
    add(app, "--grid", "grid", "grid points M (power of two)");
    add(app, "--box-cells", "box_cells", "line box length in lattice periods");
    add(app, "--amp", "amp", "soliton amplitude A");
    add(app, "--sample-every", "sample_every", "steps between diagnostic samples");
    add(app, "--snapshots", "snapshot_times", "comma separated profile snapshot times");
    add(app, "--out", "out", "output directory");
  }

  CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    return app->add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }

  dislat::ExperimentConfig resolve(dislat::ExperimentConfig base) const {
    if (!config_file.empty()) base = dislat::load_config(config_file, std::move(base));
    for (const auto& [key, value] : values) {
      // A flag for one of G0 / Gamma0 replaces whichever the config file set.
      if (key == "g0") base.gamma0.reset();
      if (key == "gamma0") base.g0.reset();
      dislat::set_field(base, key, value);
    }
    return base;
  }
};

int report(const dislat::RunRecord& record) {
  std::cout << "wrote " << record.directory.string() << '\n';
  for (const auto& [name, sum] : record.checksums) std::cout << "  " << name << "  " << sum << '\n';
  for (const auto& w : record.warnings) std::cerr << "warning: " << w << '\n';
  return 0;
}

int print_findings(const std::string& label, const std::vector<std::string>& findings) {
  if (findings.empty()) {
    std::cout << label << ": ok\n";
    return 0;
  }
  for (const auto& f : findings) std::cout << label << ": " << f << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Complex Bloch bands, Kronig-Penney roots and split-step propagation in dissipative lattices"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dislat::kVersion));

  std::map<dislat::RunMode, FlagSet> run_flags;
  std::map<dislat::RunMode, CLI::App*> run_commands;
  const std::map<dislat::RunMode, std::string> descriptions{
      {dislat::RunMode::bands, "complex band structure scan (bands.csv)"},
      {dislat::RunMode::kp, "imaginary Kronig-Penney dispersion (kp_dispersion.csv)"},
      {dislat::RunMode::cell, "linear plane-wave evolution on one cell (diag.csv, profiles)"},
      {dislat::RunMode::line, "nonlinear soliton evolution on a line (diag.csv, profiles, spectrum)"}};
  for (const auto& [mode, text] : descriptions) {
    auto* sub = app.add_subcommand(dislat::to_string(mode), text);
    run_flags[mode].attach(sub);
    run_commands[mode] = sub;
  }

  auto* preset_cmd = app.add_subcommand("preset", "run every configuration of a named preset");
  std::string preset_name;
  std::string preset_out;
  bool list_presets = false;
  preset_cmd->add_option("name", preset_name, "fig1 .. fig11");
  preset_cmd->add_option("--out", preset_out, "output root (default $DISLAT_OUT_ROOT or ./runs)");
  preset_cmd->add_flag("--list", list_presets, "list preset names and their runs");

  auto* validate_cmd = app.add_subcommand("validate", "check a configuration or preset without running it");
  std::string validate_preset;
  std::string validate_mode = "bands";
  FlagSet validate_flags;
  validate_cmd->add_option("--preset", validate_preset, "preset name");
  validate_cmd->add_option("--mode", validate_mode, "bands, kp, cell or line")->check(CLI::IsMember({"bands", "kp", "cell", "line"}));
  validate_flags.attach(validate_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [mode, sub] : run_commands) {
      if (!sub->parsed()) continue;
      dislat::ExperimentConfig base;
      base.mode = mode;
      base.label = dislat::to_string(mode);
      auto config = run_flags[mode].resolve(base);
      config.mode = mode;
      return report(dislat::run(config));
    }

    if (preset_cmd->parsed()) {
      if (list_presets || preset_name.empty()) {
        for (const auto& name : dislat::preset_names()) {
          std::cout << name << ':';
          for (const auto& c : dislat::preset(name)) std::cout << ' ' << c.label;
          std::cout << '\n';
        }
        return 0;
      }
      const auto root = (preset_out.empty() ? dislat::default_output_root() : std::filesystem::path(preset_out)) / preset_name;
      for (auto config : dislat::preset(preset_name)) {
        config.out_dir = root / config.label;
        std::cout << "running " << preset_name << '/' << config.label << std::endl;
        report(dislat::run(config));
      }
      return 0;
    }

    if (validate_cmd->parsed()) {
      if (!validate_preset.empty()) {
        int status = 0;
        for (const auto& c : dislat::preset(validate_preset))
          status |= print_findings(validate_preset + "/" + c.label, dislat::validate(c));
        return status;
      }
      dislat::ExperimentConfig base;
      base.mode = dislat::parse_mode(validate_mode);
      const auto config = validate_flags.resolve(base);
      return print_findings(config.label, dislat::validate(config));
    }
  } catch (const dislat::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
