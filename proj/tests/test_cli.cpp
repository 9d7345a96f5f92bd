#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "qlag/cli.hpp"
#include "qlag/errors.hpp"

using namespace qlag;
namespace fs = std::filesystem;

namespace {

const std::string kTool = QLAG_TOOL_PATH;

struct Workdir {
  fs::path dir;
  explicit Workdir(const std::string& name) : dir(fs::temp_directory_path() / ("qlag_test_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workdir() { fs::remove_all(dir); }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name) << text;
    return dir / name;
  }
};

std::string small_config(double bho = 1.0, std::size_t n_particles = 2) {
  std::ostringstream s;
  s << "[model]\nlambda_dB = 0.16\nomega_rel = 0.5\n"
    << "[eigen]\nn_neighbor = 8\nn_r = 40\nn_states = 12\noutput = eigen.qlag\n"
    << "[commute]\nn_p = 32\noutput = commute_b{beta}.qlag\n"
    << "[simulate]\nbeta_hbar_omega = " << bho << "\nn_particles = " << n_particles
    << "\nn_equil = 200\nn_sample = 3200\nblock_count = 8\nn_bins = 40\nseed = 17\noutput_prefix = run\n";
  return s.str();
}

int run_tool(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" + kTool + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<char> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("config parsing") {
  Workdir w("config");
  const RunConfig c = load_run_config(w.write("a.ini", small_config(0.7, 3)));
  CHECK(c.eigen_grid.n_neighbor == 8);
  CHECK(c.eigen_grid.n_r == 40);
  CHECK(c.n_p == 32);
  CHECK(c.kinetic_cap == 50.0);
  CHECK(c.beta_hbar_omega == 0.7);
  CHECK(c.n_particles == 3);
  CHECK(c.mc.seed == 17);
  CHECK(c.eigen_path == w.dir / "eigen.qlag");
  CHECK(c.table_path(0.7) == w.dir / "commute_b0.7.qlag");
  CHECK(c.table_path(2) == w.dir / "commute_b2.qlag");
  CHECK(c.model(0.7).beta_hbar_omega() == doctest::Approx(0.7));

  const RunConfig d = load_run_config(w.write("empty.ini", ""));
  CHECK(d.eigen_grid.n_neighbor == 32);
  CHECK(d.mc.block_count == 32);

  CHECK_THROWS_AS(load_run_config(w.write("b.ini", "[model]\nlambda = 0.2\n")), ParameterError);
  CHECK_THROWS_AS(load_run_config(w.write("c.ini", "[extra]\nx = 1\n")), ParameterError);
  CHECK_THROWS_AS(load_run_config(w.write("d.ini", "[model]\nL = 7.5\n")), ParameterError);
  CHECK_THROWS_AS(load_run_config(w.write("e.ini", "[simulate]\nn_particles = 1\n")), ParameterError);
  CHECK_THROWS_AS(load_run_config(w.write("f.ini", "[eigen]\nn_r = abc\n")), ParameterError);
  CHECK_THROWS_AS(load_run_config(w.write("g.ini", "[eigen]\nn_states = -3\n")), ParameterError);
  CHECK_THROWS_AS(load_run_config(w.write("h.ini", "[eigen]\nsolver = magic\n")), ParameterError);
  CHECK_THROWS_AS(load_run_config(w.dir / "missing.ini"), ParameterError);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ParameterError("x")) == 2);
  CHECK(exit_code_for(FormatError("x")) == 2);
  CHECK(exit_code_for(ConvergenceError("x", {})) == 3);
  CHECK(exit_code_for(DomainError("x")) == 3);
}

TEST_CASE("pipeline through the tool") {
  Workdir w("pipeline");
  const fs::path cfg = w.write("run.ini", small_config(1.0));
  const std::string c = "--config \"" + cfg.string() + "\"";

  REQUIRE(run_tool("eigen " + c) == 0);
  const auto eigen_bytes = slurp(w.dir / "eigen.qlag");
  REQUIRE(!eigen_bytes.empty());
  REQUIRE(run_tool("eigen " + c, "QLAG_THREADS=1") == 0);
  CHECK(slurp(w.dir / "eigen.qlag") == eigen_bytes);
  REQUIRE(run_tool("eigen " + c, "QLAG_THREADS=3") == 0);
  CHECK(slurp(w.dir / "eigen.qlag") == eigen_bytes);

  REQUIRE(run_tool("commute " + c + " --beta 1") == 0);
  REQUIRE(run_tool("commute " + c + " --beta 0.5") == 0);
  const fs::path t1 = w.dir / "commute_b1.qlag", t05 = w.dir / "commute_b0.5.qlag";
  CHECK(slurp(t1) != slurp(t05));
  const CommutationTable a = read_commutation_table(t1.string());
  const CommutationTable b = read_commutation_table(t05.string());
  CHECK(a.params.beta_hbar_omega() == doctest::Approx(1.0));
  CHECK(b.params.beta_hbar_omega() == doctest::Approx(0.5));
  const auto table_bytes = slurp(t1);
  REQUIRE(run_tool("commute " + c + " --beta 1", "QLAG_THREADS=2") == 0);
  CHECK(slurp(t1) == table_bytes);

  REQUIRE(run_tool("simulate " + c + " --table \"" + t1.string() + "\"") == 0);
  const auto averages = slurp(w.dir / "run_averages.csv");
  const auto density = slurp(w.dir / "run_density.csv");
  CHECK(!averages.empty());
  CHECK(!density.empty());
  CHECK(fs::exists(w.dir / "run_run.log"));
  REQUIRE(run_tool("simulate " + c + " --table \"" + t1.string() + "\"") == 0);
  CHECK(slurp(w.dir / "run_averages.csv") == averages);
  CHECK(slurp(w.dir / "run_density.csv") == density);
  // Earlier stages are left alone.
  CHECK(slurp(w.dir / "eigen.qlag") == eigen_bytes);
  CHECK(slurp(t1) == table_bytes);

  std::ifstream csv(w.dir / "run_averages.csv");
  std::string header, line;
  std::getline(csv, header);
  CHECK(header.rfind("variant,beta_hbar_omega,n_particles,energy_hbar_omega", 0) == 0);
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 6);

  // Table temperature differs from the config temperature.
  CHECK(run_tool("simulate " + c + " --table \"" + t05.string() + "\"") == 2);
  // Too few particles, bad box, missing table, missing arguments.
  const fs::path one = w.write("one.ini", small_config(1.0, 1));
  CHECK(run_tool("simulate --config \"" + one.string() + "\" --table \"" + t1.string() + "\"") == 2);
  const fs::path narrow = w.write("narrow.ini", "[model]\nL = 6\n");
  CHECK(run_tool("eigen --config \"" + narrow.string() + "\"") == 2);
  CHECK(run_tool("simulate " + c + " --table \"" + (w.dir / "none.qlag").string() + "\"") == 2);
  CHECK(run_tool("commute " + c) == 2);
  CHECK(run_tool("") == 2);

  // A different model in the config than in the eigen file.
  std::string text = small_config(1.0);
  text.replace(text.find("omega_rel = 0.5"), 15, "omega_rel = 0.4");
  const fs::path other = w.write("other.ini", text);
  CHECK(run_tool("commute --config \"" + other.string() + "\" --beta 1") == 2);
}

TEST_CASE("far terminal cell is an oscillator") {
  Workdir w("sho");
  const fs::path cfg = w.write("sho.ini", "[eigen]\nn_neighbor = 4\nn_r = 300\nn_states = 10\n");
  REQUIRE(run_tool("eigen --config \"" + cfg.string() + "\"") == 0);
  const EigenTable t = read_eigen_table((w.dir / "eigen.qlag").string());
  // The first particle with its neighbour at the far wall barely feels it.
  const auto& cell = t.terminal_left.back();
  REQUIRE(cell);
  for (std::size_t n = 0; n < 10; ++n)
    CHECK(cell->energies[n] == doctest::Approx(sho_reference(n, t.params)).epsilon(0.01));
}

TEST_CASE("quantum exponent is flatter in momentum than the classical one") {
  Workdir w("flat");
  const fs::path cfg = w.write("flat.ini", "[eigen]\nn_neighbor = 9\nn_r = 80\nn_states = 40\n[commute]\nn_p = 48\n");
  REQUIRE(run_tool("eigen --config \"" + cfg.string() + "\"") == 0);
  REQUIRE(run_tool("commute --config \"" + cfg.string() + "\" --beta 0.5") == 0);
  const CommutationTable t = read_commutation_table((w.dir / "commute_b0.5.qlag").string(), std::nullopt);
  const ModelParams& p = t.params;
  // Symmetric neighbours: q' = -q''.
  const CellRef cell{CellKind::interior, 2, 6};
  REQUIRE(t.present(cell));
  const auto ctx = t.context(cell);
  REQUIRE(*ctx.left == doctest::Approx(-*ctx.right));
  const std::size_t mid = t.n_q / 2;
  const double q = t.q_grid(cell)->node(mid);
  for (std::size_t ip = 4; ip < t.n_p(); ip += 4) {
    const double pp = t.p_grid.node(ip);
    const double quantum = t.at(cell, mid, ip).real() - t.at(cell, mid, 0).real();
    const double classical = -p.beta * (singlet_hamiltonian(q, pp, ctx, p) - singlet_hamiltonian(q, 0.0, ctx, p));
    CHECK(quantum > classical);
  }
}

TEST_CASE("flagged nodes on default grids") {
  Workdir w("flags");
  const fs::path cfg = w.write("default.ini", "");
  REQUIRE(run_tool("eigen --config \"" + cfg.string() + "\"") == 0);
  REQUIRE(run_tool("commute --config \"" + cfg.string() + "\" --beta 1") == 0);
  const CommutationTable t = read_commutation_table((w.dir / "commute_b1.qlag").string());
  CHECK(static_cast<double>(t.flagged_count()) < 1e-3 * static_cast<double>(t.node_count()));
}
