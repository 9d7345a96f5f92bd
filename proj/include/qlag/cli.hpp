// Run configuration and the three pipeline stages behind the qlag tool.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "qlag/commute.hpp"
#include "qlag/eigen_states.hpp"
#include "qlag/monte_carlo.hpp"

namespace qlag {

/// INI file with sections [model], [eigen], [commute] and [simulate]. Relative
/// paths are resolved against the directory of the config file.
struct RunConfig {
  // [model]
  double lambda_dB = 0.16;
  double omega_rel = 0.5;
  double L = 10.0;
  double r_min = 0.75;
  // [eigen]
  EigenGridSpec eigen_grid;
  SolverKind solver = SolverKind::direct;
  std::filesystem::path eigen_path = "eigen.qlag";
  // [commute]
  std::size_t n_p = 64;
  double kinetic_cap = 50.0;
  bool harmonic_baseline = false;
  std::string table_pattern = "commute_b{beta}.qlag";  // {beta} is replaced by beta*hbar*omega
  // [simulate]
  double beta_hbar_omega = 1.0;
  std::size_t n_particles = 4;
  McParams mc;
  std::filesystem::path output_prefix = "run";

  std::filesystem::path base_dir = ".";  // directory of the config file

  /// Model constants at the given beta*hbar*omega.
  ModelParams model(double beta_hbar_omega) const;
  std::filesystem::path table_path(double beta_hbar_omega) const;
};

/// Throws ParameterError on unreadable files, unknown keys or invalid values.
RunConfig load_run_config(const std::filesystem::path& path);

/// Worker count from QLAG_THREADS, else the hardware concurrency.
unsigned worker_threads();

/// Stage entry points; they print a summary to `log` and throw on failure.
void cmd_eigen(const RunConfig& config, std::ostream& log, unsigned threads);
std::filesystem::path cmd_commute(const RunConfig& config, double beta_hbar_omega, std::ostream& log,
                                  unsigned threads);
void cmd_simulate(const RunConfig& config, const std::filesystem::path& table_path, std::ostream& log);

/// Exit code for an exception escaping a stage: 2 for configuration and file
/// errors, 3 for numerical failures.
int exit_code_for(const std::exception& e);

}  // namespace qlag
