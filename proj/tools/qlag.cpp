// qlag: eigen -> commute -> simulate pipeline driver.
#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "qlag/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Phase-space Monte Carlo of a Lennard-Jones chain with local-field commutation tables"};
  app.require_subcommand(1);

  std::string config_path;
  double beta_hbar_omega = 0.0;
  std::string table_path;

  auto* eigen = app.add_subcommand("eigen", "solve single-particle states for every neighbour cell");
  eigen->add_option("--config", config_path, "run configuration (INI)")->required();

  auto* commute = app.add_subcommand("commute", "build the commutation table at one temperature");
  commute->add_option("--config", config_path, "run configuration (INI)")->required();
  commute->add_option("--beta", beta_hbar_omega, "temperature as beta*hbar*omega")->required();

  auto* simulate = app.add_subcommand("simulate", "Metropolis sampling with a commutation table");
  simulate->add_option("--config", config_path, "run configuration (INI)")->required();
  simulate->add_option("--table", table_path, "commutation table file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const qlag::RunConfig config = qlag::load_run_config(config_path);
    if (eigen->parsed()) {
      qlag::cmd_eigen(config, std::cout, qlag::worker_threads());
    } else if (commute->parsed()) {
      qlag::cmd_commute(config, beta_hbar_omega, std::cout, qlag::worker_threads());
    } else {
      qlag::cmd_simulate(config, table_path, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "qlag: " << e.what() << '\n';
    return qlag::exit_code_for(e);
  }
  return 0;
}
