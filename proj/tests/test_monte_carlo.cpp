#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "qlag/errors.hpp"
#include "qlag/monte_carlo.hpp"

using namespace qlag;

namespace {

ModelParams standard(double bho = 1.0) { return with_beta_hbar_omega(derive_reduced_units(0.16, 0.5), bho); }

EigenTable small_eigen_table(const ModelParams& p) {
  EigenGridSpec spec;
  spec.n_neighbor = 40;
  spec.n_r = 100;
  spec.n_states = 50;
  return build_eigen_table(p, spec, {}, 4);
}

const EigenTable& shared_eigen() {
  static const EigenTable t = small_eigen_table(standard());
  return t;
}

CommutationTable quantum_table(double bho) {
  const ModelParams p = standard(bho);
  return build_commutation_table(shared_eigen(), p.beta, make_momentum_grid(p.beta, 48, p), 4);
}

McParams short_run(std::uint64_t seed, std::size_t n_sample = 16000) {
  McParams mc;
  mc.n_equil = 2000;
  mc.n_sample = n_sample;
  mc.dq_max = 0.1;
  mc.dp_max = 0.5;
  mc.seed = seed;
  mc.block_count = 16;
  mc.n_bins = 100;
  return mc;
}

// Stationary frequencies of a Metropolis chain on a ring of states with
// nearest-neighbour proposals.
std::vector<double> ring_frequencies(const std::vector<double>& log_w, std::size_t steps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = log_w.size();
  std::vector<double> count(n, 0.0);
  std::size_t s = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t trial = unit(rng) < 0.5 ? (s + 1) % n : (s + n - 1) % n;
    if (metropolis_accept(log_w[trial] - log_w[s], unit(rng))) s = trial;
    count[s] += 1.0;
  }
  for (double& c : count) c /= static_cast<double>(steps);
  return count;
}

// Plain Metropolis sampling of exp(-beta U) over positions. Only the
// admissible region is taken from the table, as an indicator.
double plain_boltzmann_energy(const CommutationTable& table, std::size_t n, std::size_t sweeps, std::uint64_t seed,
                              double& error) {
  const ModelParams& p = table.params;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PhaseConfig c = lattice_config(n, p);
  auto admissible = [&](const PhaseConfig& x) {
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(x.positions[j]) > p.half_span()) return false;
      if (j > 0 && !(x.positions[j] > x.positions[j - 1])) return false;
    }
    return try_umbrella_log_weight(x, table).has_value();
  };
  double u = total_potential(c.positions, p);
  const std::size_t n_blocks = 20, per_block = sweeps / n_blocks;
  std::vector<double> block(n_blocks, 0.0);
  for (std::size_t s = 0; s < 2000 + per_block * n_blocks; ++s) {
    for (std::size_t j = 0; j < n; ++j) {
      const double old = c.positions[j];
      c.positions[j] += 0.15 * (2.0 * unit(rng) - 1.0);
      const double r = unit(rng);
      if (!admissible(c)) {
        c.positions[j] = old;
        continue;
      }
      const double u_new = total_potential(c.positions, p);
      if (metropolis_accept(-p.beta * (u_new - u), r))
        u = u_new;
      else
        c.positions[j] = old;
    }
    if (s >= 2000) block[(s - 2000) / per_block] += u / static_cast<double>(per_block);
  }
  const double mean = std::accumulate(block.begin(), block.end(), 0.0) / static_cast<double>(n_blocks);
  double ss = 0.0;
  for (double b : block) ss += (b - mean) * (b - mean);
  error = 2.0 * std::sqrt(ss / static_cast<double>(n_blocks - 1) / static_cast<double>(n_blocks));
  return mean + 0.5 * static_cast<double>(n) / p.beta;
}

}  // namespace

TEST_CASE("mc parameter checks") {
  McParams mc;
  CHECK_NOTHROW(mc.validate());
  mc.n_sample = 0;
  CHECK_THROWS_AS(mc.validate(), ParameterError);
  mc = McParams{};
  mc.block_count = 1;
  CHECK_THROWS_AS(mc.validate(), ParameterError);
  mc = McParams{};
  mc.dq_max = -0.1;
  CHECK_THROWS_AS(mc.validate(), ParameterError);
}

TEST_CASE("metropolis rule") {
  CHECK(metropolis_accept(0.0, 0.999));
  CHECK(metropolis_accept(1.0, 0.999));
  CHECK(metropolis_accept(std::log(0.5), 0.49));
  CHECK(!metropolis_accept(std::log(0.5), 0.51));
  CHECK(!metropolis_accept(-800.0, 0.0 + 1e-300));
}

TEST_CASE("detailed balance on small state spaces") {
  const std::vector<double> two{0.0, std::log(3.0)};
  const auto f2 = ring_frequencies(two, 400000, 1);
  // Correlated samples, so the tolerance is several independent-sample sigmas.
  CHECK(f2[1] == doctest::Approx(0.75).epsilon(0.01));

  const std::vector<double> ring{0.0, 1.0, -0.5, 0.3, 2.0};
  double z = 0.0;
  for (double lw : ring) z += std::exp(lw);
  const auto f = ring_frequencies(ring, 2000000, 2);
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const double expected = std::exp(ring[i]) / z;
    const double sigma = std::sqrt(expected * (1 - expected) / 2000000.0);
    CHECK(std::abs(f[i] - expected) < 10 * sigma);
  }
}

TEST_CASE("umbrella weight") {
  const CommutationTable t = quantum_table(1.0);
  const ModelParams& p = t.params;

  // Two particles: no beyond-neighbour term, only the two terminal cells.
  const PhaseConfig pair{{-0.6, 0.55}, {0.3, -0.2}};
  const double expected = interpolate_w(t, -0.6, 0.3, pair.neighbors(0)).real() +
                          interpolate_w(t, 0.55, -0.2, pair.neighbors(1)).real();
  CHECK(umbrella_log_weight(pair, t) == doctest::Approx(expected).epsilon(1e-14));

  // Moving particle 0 only changes singlets 0 and 1 and the beyond-neighbour sum.
  PhaseConfig c = lattice_config(5, p);
  c.momenta = {0.2, -0.4, 0.1, 0.0, 0.5};
  PhaseConfig moved = c;
  moved.positions[0] += 0.07;
  moved.momenta[0] -= 0.3;
  for (std::size_t j = 2; j < 5; ++j)
    CHECK(interpolate_w(t, c.positions[j], c.momenta[j], c.neighbors(j)) ==
          interpolate_w(t, moved.positions[j], moved.momenta[j], moved.neighbors(j)));
  double local = -p.beta * (nnn_potential(moved, p) - nnn_potential(c, p));
  for (std::size_t j = 0; j < 2; ++j)
    local += interpolate_w(t, moved.positions[j], moved.momenta[j], moved.neighbors(j)).real() -
             interpolate_w(t, c.positions[j], c.momenta[j], c.neighbors(j)).real();
  CHECK(umbrella_log_weight(moved, t) - umbrella_log_weight(c, t) == doctest::Approx(local).epsilon(1e-10));

  PhaseConfig far = c;
  far.momenta[2] = 10 * t.p_grid.p_max;
  CHECK(!try_umbrella_log_weight(far, t));
  CHECK_THROWS_AS(umbrella_log_weight(far, t), OutOfSupport);
}

TEST_CASE("sweeps keep the cached weight and the ordering") {
  const CommutationTable t = quantum_table(1.0);
  ChainState s = make_chain_state(lattice_config(4, t.params), t);
  std::mt19937_64 rng(9);
  McParams mc = short_run(9);
  mc.dq_max = 0.3;
  MoveStats total;
  for (int sweep = 0; sweep < 500; ++sweep) {
    total += metropolis_sweep(s, t, mc, rng);
    CHECK(std::is_sorted(s.config.positions.begin(), s.config.positions.end()));
  }
  CHECK(total.attempted == 2000);
  CHECK(total.accepted > 0);
  CHECK(s.log_weight == doctest::Approx(umbrella_log_weight(s.config, t)).epsilon(1e-9));
  const ChainState fresh = make_chain_state(s.config, t);
  for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(fresh.w[j] - s.w[j]) < 1e-12);
}

TEST_CASE("zero moves are always accepted") {
  const CommutationTable t = quantum_table(1.0);
  ChainState s = make_chain_state(lattice_config(4, t.params), t);
  McParams mc = short_run(3);
  mc.dq_max = 0.0;
  mc.dp_max = 0.0;
  std::mt19937_64 rng(3);
  MoveStats total;
  for (int sweep = 0; sweep < 50; ++sweep) total += metropolis_sweep(s, t, mc, rng);
  CHECK(total.acceptance() == 1.0);
}

TEST_CASE("acceptance falls with the move size") {
  const CommutationTable t = quantum_table(1.0);
  double previous = 1.0;
  for (double dq : {0.02, 0.05, 0.1, 0.2, 0.4}) {
    McParams mc = short_run(21, 1600);
    mc.n_equil = 200;
    mc.dq_max = dq;
    mc.dp_max = 0.0;
    const double a = run_simulation(t, 4, mc).sampling.acceptance();
    CHECK(a < previous);
    previous = a;
  }
}

TEST_CASE("classical stub makes the variants coincide") {
  const ModelParams p = standard(1.0);
  const CommutationTable t = classical_table(shared_eigen(), p.beta, make_momentum_grid(p.beta, 48, p));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> jitter(0.0, 0.03), mom(0.0, 0.4);
  int tried = 0;
  for (int trial = 0; trial < 50; ++trial) {
    PhaseConfig c = lattice_config(4, p);
    for (double& q : c.positions) q += jitter(rng);
    for (double& m : c.momenta) m = mom(rng);
    if (!try_umbrella_log_weight(c, t)) continue;
    ++tried;
    ChainState s = make_chain_state(c, t);
    // Exactly the stub value w = -beta H1, independent of interpolation.
    for (std::size_t j = 0; j < 4; ++j)
      s.w[j] = -p.beta * singlet_hamiltonian(c.positions[j], c.momenta[j], c.neighbors(j), p);
    const auto w = variant_weights(s, t);
    for (std::size_t v = 0; v < 3; ++v) CHECK(std::abs(w[v] - w[v + 3]) < 1e-12 * std::abs(w[v]) + 1e-15);
    CHECK(w[0] == std::complex<double>(1.0, 0.0));
  }
  CHECK(tried > 25);
  // At table nodes the stub holds the classical singlet value.
  const CellRef cell{CellKind::interior, 10, 16};
  REQUIRE(t.present(cell));
  const auto ctx = NeighborContext::interior(t.neighbors.left(10), t.neighbors.right(16));
  const double lo = *ctx.left + p.r_min, hi = *ctx.right - p.r_min;
  for (std::size_t iq : {3u, 30u}) {
    const double q = lo + (hi - lo) * static_cast<double>(iq) / static_cast<double>(t.n_q - 1);
    CHECK(t.at(cell, iq, 5).real() == doctest::Approx(-p.beta * singlet_hamiltonian(q, t.p_grid.node(5), ctx, p)));
    CHECK(t.at(cell, iq, 5).imag() == 0.0);
  }
}

TEST_CASE("accumulator and finalize") {
  AverageSet acc(4, 10, 20, 5.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.1, 2.0), x(-4.0, 4.0);
  CHECK_THROWS_AS(finalize(acc), ParameterError);
  for (int s = 0; s < 40; ++s) {
    std::array<std::complex<double>, kVariantCount> w{};
    for (auto& z : w) z = {u(rng), 0.3 * (u(rng) - 1.0)};
    const std::vector<double> q{x(rng), x(rng), x(rng)};
    acc.accumulate(-2.5, q, w);
  }
  CHECK(acc.completed_blocks() == 4);
  std::array<std::complex<double>, kVariantCount> one{};
  one.fill(1.0);
  CHECK_THROWS_AS(acc.accumulate(0.0, std::vector<double>{0.0}, one), ParameterError);
  const Report r = finalize(acc);
  for (const auto& v : r.results) {
    CHECK(v.mean == doctest::Approx(-2.5).epsilon(1e-13));
    CHECK(v.error < 1e-13);
  }
  for (std::size_t v = 0; v < kVariantCount; ++v) {
    double integral = 0.0;
    for (double d : r.density.density[v]) integral += d * r.density.bin_width;
    CHECK(integral == doctest::Approx(3.0).epsilon(1e-12));
  }
}

TEST_CASE("simulation report") {
  const CommutationTable t = quantum_table(1.0);
  const SimulationResult res = run_simulation(t, 4, short_run(7));
  const Report& r = res.report;
  CHECK(r.n_blocks == 16);
  CHECK(r.samples == 16000);
  CHECK(res.sampling.attempted == 4 * 16000);
  CHECK(r[Variant::quantum_distinguishable].denominator.real() > 0.0);
  for (const auto& v : r.results) {
    double integral = 0.0;
    for (double d : r.density.density[static_cast<std::size_t>(v.variant)]) integral += d * r.density.bin_width;
    CHECK(integral == doctest::Approx(4.0).epsilon(1e-10));
    CHECK(std::isfinite(v.mean));
    CHECK(v.error > 0.0);
  }
  // Real observables: the imaginary parts of the denominators vanish on average.
  for (Variant v : {Variant::quantum_boson, Variant::quantum_fermion}) {
    const auto& x = r[v];
    CHECK(std::abs(x.denominator.imag()) <= x.denominator_imag_error);
  }
  // Same seed, same chain.
  const SimulationResult again = run_simulation(t, 4, short_run(7));
  CHECK(again.report[Variant::quantum_boson].mean == r[Variant::quantum_boson].mean);

  McParams bad = short_run(7);
  CHECK_THROWS_AS(run_simulation(t, 1, bad), ParameterError);
  CHECK_THROWS_AS(run_simulation(t, 3, bad, lattice_config(4, t.params)), ParameterError);
}

TEST_CASE("classical variant against plain Boltzmann sampling") {
  const CommutationTable t = quantum_table(0.1);
  McParams mc = short_run(11, 256000);
  mc.dq_max = 0.3;
  mc.dp_max = 2.0;
  const auto r = run_simulation(t, 3, mc).report[Variant::classical_distinguishable];
  double oracle_error = 0.0;
  const double oracle = plain_boltzmann_energy(t, 3, 256000, 12, oracle_error);
  MESSAGE("classical ", r.mean, " +- ", r.error, ", plain ", oracle, " +- ", oracle_error);
  CHECK(std::abs(r.mean - oracle) < std::hypot(r.error, oracle_error));
}

TEST_CASE("umbrella consistency between move sizes") {
  const CommutationTable t = quantum_table(1.0);
  McParams a = short_run(31, 32000), b = short_run(32, 32000);
  b.dq_max = 0.2;
  b.dp_max = 1.0;
  const Report ra = run_simulation(t, 3, a).report, rb = run_simulation(t, 3, b).report;
  for (std::size_t v = 0; v < kVariantCount; ++v) {
    const auto &x = ra.results[v], &y = rb.results[v];
    INFO(variant_name(x.variant), ": ", x.mean, " +- ", x.error, " vs ", y.mean, " +- ", y.error);
    CHECK(std::abs(x.mean - y.mean) < 3 * std::hypot(x.error, y.error));
  }
}

TEST_CASE("reference energies") {
  const ModelParams p = standard();
  const double unit = p.hbar_omega();
  CHECK(p.omega_lj() / p.omega == doctest::Approx(16.97).epsilon(6e-4));
  CHECK(ground_state_estimate(4, p) / unit == doctest::Approx(-13.1).epsilon(0.05 / 13.1));
  CHECK(ground_state_estimate(5, p) / unit == doctest::Approx(-18.6).epsilon(0.05 / 18.6));
  // Independent evaluation of the same local-field estimate.
  const double big = std::sqrt(p.omega * p.omega + 72.0 / p.mass);
  const double pair = std::sqrt(p.omega * p.omega + 36.0 / p.mass);
  CHECK(ground_state_estimate(3, p) == doctest::Approx(-2.0 + 0.5 * p.hbar * big + p.hbar * pair).epsilon(1e-13));
  CHECK_THROWS_AS(ground_state_estimate(1, p), ParameterError);

  ModelParams free = p;
  free.omega = 0.0;
  const ClassicalMinimum two = classical_ground_energy(2, free);
  CHECK(two.energy == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(two.positions[1] - two.positions[0] == doctest::Approx(1.0).epsilon(1e-9));

  const double nn4 = classical_ground_energy(4, p, PairRange::nearest_neighbors).energy / unit;
  const double nn5 = classical_ground_energy(5, p, PairRange::nearest_neighbors).energy / unit;
  CHECK(nn4 == doctest::Approx(-33.3).epsilon(0.005));
  CHECK(nn5 == doctest::Approx(-38.6).epsilon(0.005));
  // The longer-range pairs only deepen the minimum.
  CHECK(classical_ground_energy(4, p).energy / unit < nn4);
  CHECK_THROWS_AS(classical_ground_energy(1, p), ParameterError);
}
