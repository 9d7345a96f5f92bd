#include "qlag/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "qlag/errors.hpp"

namespace qlag {

namespace fs = std::filesystem;

ModelParams RunConfig::model(double bho) const {
  ModelParams p = derive_reduced_units(lambda_dB, omega_rel);
  p.L = L;
  p.r_min = r_min;
  p = with_beta_hbar_omega(p, bho);
  p.validate();
  return p;
}

fs::path RunConfig::table_path(double bho) const {
  std::ostringstream b;
  b << bho;
  std::string name = table_pattern;
  const auto pos = name.find("{beta}");
  if (pos != std::string::npos) name.replace(pos, 6, b.str());
  return base_dir / name;
}

namespace {

const std::map<std::string, std::set<std::string>> kKnownKeys{
    {"model", {"lambda_dB", "omega_rel", "L", "r_min"}},
    {"eigen", {"n_neighbor", "n_r", "n_states", "solver", "output"}},
    {"commute", {"n_p", "kinetic_cap", "baseline", "output"}},
    {"simulate", {"beta_hbar_omega", "n_particles", "n_equil", "n_sample", "dq_max", "dp_max", "seed",
                  "block_count", "n_bins", "output_prefix"}},
};

class IniReader {
public:
  explicit IniReader(const fs::path& path) {
    try {
      boost::property_tree::ini_parser::read_ini(path.string(), tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ParameterError(std::string("config: ") + e.what());
    }
    for (const auto& [section, keys] : tree_) {
      const auto known = kKnownKeys.find(section);
      if (known == kKnownKeys.end()) throw ParameterError("config: unknown section [" + section + "]");
      for (const auto& kv : keys)
        if (!known->second.count(kv.first))
          throw ParameterError("config: unknown key " + section + "." + kv.first);
    }
  }

  template <typename T>
  void read(const std::string& key, T& target) const {
    const auto value = tree_.get_optional<std::string>(boost::property_tree::ptree::path_type(key, '.'));
    if (!value) return;
    try {
      if constexpr (std::is_unsigned_v<T>) {
        if (value->find('-') != std::string::npos) throw boost::bad_lexical_cast();
      }
      target = boost::lexical_cast<T>(*value);
    } catch (const boost::bad_lexical_cast&) {
      throw ParameterError("config: bad value for " + key + ": '" + *value + "'");
    }
  }

private:
  boost::property_tree::ptree tree_;
};

}  // namespace

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw ParameterError("config file not found: " + path.string());
  const IniReader ini(path);
  RunConfig c;
  ini.read("model.lambda_dB", c.lambda_dB);
  ini.read("model.omega_rel", c.omega_rel);
  ini.read("model.L", c.L);
  ini.read("model.r_min", c.r_min);

  ini.read("eigen.n_neighbor", c.eigen_grid.n_neighbor);
  ini.read("eigen.n_r", c.eigen_grid.n_r);
  ini.read("eigen.n_states", c.eigen_grid.n_states);
  std::string solver = "direct";
  ini.read("eigen.solver", solver);
  if (solver == "direct") {
    c.solver = SolverKind::direct;
  } else if (solver == "relaxation") {
    c.solver = SolverKind::relaxation;
  } else {
    throw ParameterError("config: eigen.solver must be direct or relaxation");
  }
  std::string eigen_out = c.eigen_path.string();
  ini.read("eigen.output", eigen_out);

  ini.read("commute.n_p", c.n_p);
  ini.read("commute.kinetic_cap", c.kinetic_cap);
  std::string baseline = "exact";
  ini.read("commute.baseline", baseline);
  if (baseline != "exact" && baseline != "harmonic")
    throw ParameterError("config: commute.baseline must be exact or harmonic");
  c.harmonic_baseline = baseline == "harmonic";
  ini.read("commute.output", c.table_pattern);

  ini.read("simulate.beta_hbar_omega", c.beta_hbar_omega);
  ini.read("simulate.n_particles", c.n_particles);
  ini.read("simulate.n_equil", c.mc.n_equil);
  ini.read("simulate.n_sample", c.mc.n_sample);
  ini.read("simulate.dq_max", c.mc.dq_max);
  ini.read("simulate.dp_max", c.mc.dp_max);
  ini.read("simulate.seed", c.mc.seed);
  ini.read("simulate.block_count", c.mc.block_count);
  ini.read("simulate.n_bins", c.mc.n_bins);
  std::string prefix = c.output_prefix.string();
  ini.read("simulate.output_prefix", prefix);

  const fs::path base = fs::absolute(path).parent_path();
  c.base_dir = base;
  c.eigen_path = base / eigen_out;
  c.output_prefix = base / prefix;

  c.model(c.beta_hbar_omega);
  if (c.eigen_grid.n_neighbor < 2) throw ParameterError("config: eigen.n_neighbor must be at least 2");
  if (c.eigen_grid.n_r < 16) throw ParameterError("config: eigen.n_r must be at least 16");
  if (c.eigen_grid.n_states == 0 || c.eigen_grid.n_states > c.eigen_grid.n_r / 2)
    throw ParameterError("config: eigen.n_states must lie in [1, n_r/2]");
  if (c.n_p < 32) throw ParameterError("config: commute.n_p must be at least 32");
  if (!(c.kinetic_cap > 0)) throw ParameterError("config: commute.kinetic_cap must be positive");
  if (c.n_particles < 2) throw ParameterError("config: simulate.n_particles must be at least 2");
  c.mc.validate();
  return c;
}

unsigned worker_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("QLAG_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    } catch (const std::exception&) {
      throw ParameterError("QLAG_THREADS must be a positive integer");
    }
  }
  return n;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void require_same_model(const ModelParams& file, const ModelParams& config, const std::string& what) {
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); };
  if (!close(file.L, config.L) || !close(file.r_min, config.r_min) || !close(file.hbar, config.hbar) ||
      !close(file.omega, config.omega))
    throw FormatError(what + " was built for different model parameters than the config");
}

}  // namespace

void cmd_eigen(const RunConfig& config, std::ostream& log, unsigned threads) {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelParams params = config.model(config.beta_hbar_omega);
  SolverOptions options;
  options.kind = config.solver;
  const EigenTable table = build_eigen_table(params, config.eigen_grid, options, threads);

  const std::size_t n = config.eigen_grid.n_neighbor;
  std::size_t feasible = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) feasible += interior_feasible(table.neighbors.left(i), table.neighbors.right(k), params);
  double e_lo = 1e300, e_hi = -1e300;
  std::size_t solved = 0;
  auto scan = [&](const std::optional<EigenSet>& c) {
    if (!c) return;
    ++solved;
    e_lo = std::min(e_lo, c->energies.front());
    e_hi = std::max(e_hi, c->energies.front());
  };
  for (const auto& c : table.interior) scan(c);
  for (const auto& c : table.terminal_left) scan(c);
  for (const auto& c : table.terminal_right) scan(c);

  log << "eigen: " << feasible << " feasible interior cells of " << n * n << ", " << 2 * n
      << " terminal cells, " << solved << " solved, " << table.failures.size() << " failed\n";
  for (const auto& f : table.failures)
    log << "  failed " << f.where << " (" << f.i << ", " << f.k << "): " << f.message << '\n';
  if (solved == 0) throw ConvergenceError("no cell was solved", {});
  log << "  ground energies in [" << e_lo / params.hbar_omega() << ", " << e_hi / params.hbar_omega()
      << "] hbar omega\n";
  write_eigen_table(table, config.eigen_path.string());
  log << "  wrote " << config.eigen_path.string() << " in " << std::fixed << std::setprecision(1)
      << seconds_since(t0) << " s\n" << std::defaultfloat;
}

fs::path cmd_commute(const RunConfig& config, double bho, std::ostream& log, unsigned threads) {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelParams params = config.model(bho);
  const EigenTable eigen = read_eigen_table(config.eigen_path.string());
  require_same_model(eigen.params, params, "eigen table");
  if (eigen.spec.n_neighbor != config.eigen_grid.n_neighbor || eigen.spec.n_r != config.eigen_grid.n_r ||
      eigen.spec.n_states != config.eigen_grid.n_states)
    throw FormatError("eigen table grid does not match the [eigen] section of the config");

  const MomentumGrid p_grid = make_momentum_grid(params.beta, config.n_p, params, config.kinetic_cap);
  const CommutationTable table = config.harmonic_baseline
                                     ? harmonic_baseline_table(eigen, params.beta, p_grid, threads)
                                     : build_commutation_table(eigen, params.beta, p_grid, threads);
  const fs::path out = config.table_path(bho);
  write_commutation_table(table, out.string());
  const std::size_t nodes = table.node_count();
  const std::size_t flagged = table.flagged_count();
  log << "commute: beta hbar omega = " << bho << (config.harmonic_baseline ? " (harmonic baseline)" : "")
      << ", " << nodes << " nodes, " << flagged << " flagged ("
      << 100.0 * static_cast<double>(flagged) / static_cast<double>(std::max<std::size_t>(nodes, 1)) << "%)\n";
  log << "  wrote " << out.string() << " in " << std::fixed << std::setprecision(1) << seconds_since(t0)
      << " s\n" << std::defaultfloat;
  return out;
}

void cmd_simulate(const RunConfig& config, const fs::path& table_path, std::ostream& log) {
  const ModelParams params = config.model(config.beta_hbar_omega);
  const CommutationTable table = read_commutation_table(table_path.string(), params.beta);
  require_same_model(table.params, params, "commutation table");
  const SimulationResult result = run_simulation(table, config.n_particles, config.mc);

  const std::string prefix = config.output_prefix.string();
  write_averages_csv(result, params, config.n_particles, config.mc, prefix + "_averages.csv");
  write_density_csv(result.report.density, prefix + "_density.csv");

  std::ostringstream summary;
  summary << "simulate: N = " << config.n_particles << ", beta hbar omega = " << config.beta_hbar_omega
          << ", seed = " << config.mc.seed << '\n'
          << "  sweeps: " << config.mc.n_equil << " equilibration, " << result.report.samples << " sampled in "
          << result.report.n_blocks << " blocks\n"
          << "  acceptance: " << result.equilibration.acceptance() << " (equilibration), "
          << result.sampling.acceptance() << " (sampling), rejected outside support: "
          << result.sampling.out_of_support << '\n'
          << "  time: " << result.seconds << " s\n";
  for (const auto& r : result.report.results)
    summary << "  " << std::setw(26) << std::left << variant_name(r.variant) << std::right
            << " <H>/hbar omega = " << r.mean / params.hbar_omega() << " +- " << r.error / params.hbar_omega()
            << '\n';
  log << summary.str();
  std::ofstream run_log(prefix + "_run.log");
  run_log << summary.str();
  if (!run_log) throw ParameterError("cannot write " + prefix + "_run.log");
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParameterError*>(&e) || dynamic_cast<const FormatError*>(&e)) return 2;
  return 3;
}

}  // namespace qlag
