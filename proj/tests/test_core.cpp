#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "qlag/core.hpp"
#include "qlag/errors.hpp"

using namespace qlag;

namespace {

ModelParams standard() { return derive_reduced_units(0.16, 0.5); }

PhaseConfig random_config(std::size_t n, std::mt19937_64& rng, const ModelParams& p) {
  std::uniform_real_distribution<double> gap(0.8, 1.4), mom(-3.0, 3.0);
  PhaseConfig c;
  double q = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    c.positions.push_back(q);
    c.momenta.push_back(mom(rng));
    q += gap(rng);
  }
  const double shift = 0.5 * (c.positions.front() + c.positions.back());
  for (double& x : c.positions) x -= shift;
  c.validate(p);
  return c;
}

}  // namespace

TEST_CASE("reduced units") {
  const ModelParams p = standard();
  CHECK(p.hbar == doctest::Approx(0.16 / std::pow(2.0, 1.0 / 6.0)).epsilon(1e-14));
  CHECK(p.hbar == doctest::Approx(0.14254).epsilon(1e-4));
  CHECK(p.epsilon / p.hbar_omega() == doctest::Approx(14.03).epsilon(1e-3));
  CHECK(p.omega_lj() / p.omega == doctest::Approx(16.97).epsilon(5e-4));
  CHECK(derive_reduced_units(std::pow(2.0, 1.0 / 6.0), 1.0).hbar == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_NOTHROW(p.validate());

  CHECK_THROWS_AS(derive_reduced_units(0.0, 0.5), ParameterError);
  CHECK_THROWS_AS(derive_reduced_units(0.16, -1.0), ParameterError);
  CHECK_THROWS_AS(with_beta_hbar_omega(p, 0.0), ParameterError);

  const ModelParams b = with_beta_hbar_omega(p, 2.0);
  CHECK(b.beta_hbar_omega() == doctest::Approx(2.0).epsilon(1e-14));

  ModelParams bad = p;
  bad.L = 7.9;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = p;
  bad.r_min = 1.0;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = p;
  bad.hbar = 0.0;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("trap potential") {
  const ModelParams p = standard();
  CHECK(sho_potential(0.0, p) == 0.0);
  CHECK(sho_potential(1.0, p) == doctest::Approx(0.125));
  for (double r : {0.3, 1.7, 4.2}) CHECK(sho_potential(-r, p) == sho_potential(r, p));
  CHECK(sho_potential_d2(p) == doctest::Approx(0.25));
}

TEST_CASE("lennard-jones pair") {
  const ModelParams p = standard();
  CHECK(lj_pair(1.0, p) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(std::abs(lj_pair(1e4, p)) < 1e-20);
  CHECK(std::abs(lj_pair(std::pow(2.0, -1.0 / 6.0), p)) < 1e-13);
  CHECK_THROWS_AS(lj_pair(0.0, p), DomainError);
  CHECK_THROWS_AS(lj_pair(-1.0, p), DomainError);
  CHECK_THROWS_AS(lj_pair_d1(0.0, p), DomainError);

  double prev = lj_pair(0.7, p);
  for (double d = 0.701; d < 1.0; d += 0.001) {
    const double u = lj_pair(d, p);
    CHECK(u < prev);
    prev = u;
  }
  prev = lj_pair(1.0, p);
  for (double d = 1.001; d < 4.0; d += 0.001) {
    const double u = lj_pair(d, p);
    CHECK(u > prev);
    prev = u;
  }
  CHECK(lj_pair_d2(1.0, p) == doctest::Approx(72.0));
}

TEST_CASE("derivatives against central differences") {
  const ModelParams p = standard();
  const double h = 1e-5;
  for (double d : {0.8, 1.0, 1.3, 2.5}) {
    const double fd1 = (lj_pair(d + h, p) - lj_pair(d - h, p)) / (2 * h);
    const double fd2 = (lj_pair(d + h, p) - 2 * lj_pair(d, p) + lj_pair(d - h, p)) / (h * h);
    CHECK(lj_pair_d1(d, p) == doctest::Approx(fd1).epsilon(1e-6).scale(1.0));
    CHECK(lj_pair_d2(d, p) == doctest::Approx(fd2).epsilon(1e-4).scale(1.0));
  }
  const auto ctx = NeighborContext::interior(-1.1, 0.9);
  for (double r : {-0.2, 0.0, 0.1}) {
    const double fd1 = (local_pair_field(r + h, ctx, p) - local_pair_field(r - h, ctx, p)) / (2 * h);
    const double fd2 =
        (local_pair_field(r + h, ctx, p) - 2 * local_pair_field(r, ctx, p) + local_pair_field(r - h, ctx, p)) / (h * h);
    CHECK(local_pair_field_d1(r, ctx, p) == doctest::Approx(fd1).epsilon(1e-6).scale(1.0));
    CHECK(local_pair_field_d2(r, ctx, p) == doctest::Approx(fd2).epsilon(1e-4).scale(1.0));
    CHECK(local_field_d2(r, ctx, p) == doctest::Approx(fd2 + 0.25).epsilon(1e-4).scale(1.0));
  }
}

TEST_CASE("local field examples") {
  const ModelParams p = standard();
  CHECK(local_field(0.0, NeighborContext::interior(-1.0, 1.0), p) == doctest::Approx(-1.0).epsilon(1e-15));
  const double q2 = 1.5;
  CHECK(local_field(q2 - 1.0, NeighborContext::right_only(q2), p) ==
        doctest::Approx(sho_potential(q2 - 1.0, p) - 0.5).epsilon(1e-15));
  CHECK(local_field(-0.5, NeighborContext::left_only(-1.5), p) == doctest::Approx(sho_potential(-0.5, p) - 0.5));

  CHECK_THROWS_AS(local_field(-1.2, NeighborContext::interior(-1.0, 1.0), p), DomainError);
  CHECK_THROWS_AS(local_field(1.0, NeighborContext::interior(-1.0, 1.0), p), DomainError);
  CHECK_THROWS_AS(NeighborContext::interior(-0.5, 0.5).validate(p), DomainError);
  CHECK_THROWS_AS(NeighborContext{}.validate(p), DomainError);
  CHECK_NOTHROW(NeighborContext::interior(-0.75, 0.75).validate(p));
}

TEST_CASE("singlet hamiltonian") {
  const ModelParams p = with_beta_hbar_omega(standard(), 0.5);
  const auto ctx = NeighborContext::interior(-1.0, 1.0);
  CHECK(singlet_hamiltonian(0.2, 0.0, ctx, p) == local_field(0.2, ctx, p));
  const double pk = std::sqrt(2.0 * p.mass * 2.0 / p.beta);
  CHECK(singlet_hamiltonian(0.0, pk, ctx, p) == doctest::Approx(2.0 / p.beta - 1.0).epsilon(1e-13));
  CHECK(singlet_hamiltonian(0.1, -1.7, ctx, p) == singlet_hamiltonian(0.1, 1.7, ctx, p));
}

TEST_CASE("beyond nearest neighbour potential") {
  const ModelParams p = standard();
  const std::vector<double> two{-0.5, 0.5};
  CHECK(nnn_potential(two, p) == 0.0);
  const std::vector<double> three{-1.0, 0.0, 1.0};
  CHECK(nnn_potential(three, p) == doctest::Approx(lj_pair(2.0, p)));
  CHECK(nnn_potential(three, p) == doctest::Approx(-0.0308).epsilon(2e-3));
  const std::vector<double> four{-1.5, -0.4, 0.6, 1.7};
  const double expected = lj_pair(four[2] - four[0], p) + lj_pair(four[3] - four[1], p) + lj_pair(four[3] - four[0], p);
  CHECK(nnn_potential(four, p) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("singlet decomposition reproduces the full hamiltonian") {
  const ModelParams p = standard();
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 5);
    const PhaseConfig c = random_config(n, rng, p);
    double kin = 0.0, singlets = 0.0, fields = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      kin += kinetic_energy(c.momenta[j], p);
      singlets += singlet_hamiltonian(c.positions[j], c.momenta[j], c.neighbors(j), p);
      fields += local_field(c.positions[j], c.neighbors(j), p);
    }
    const double h = classical_hamiltonian(c, p);
    const double u = total_potential(c.positions, p);
    const double scale = std::max({std::abs(h), kin, 1.0});
    CHECK(std::abs(singlets + nnn_potential(c, p) - h) < 1e-12 * scale);
    CHECK(std::abs(fields + nnn_potential(c, p) - u) < 1e-12 * std::max(std::abs(u), 1.0));
  }
}

TEST_CASE("mirror invariance of the interior field") {
  const ModelParams p = standard();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> left(-3.0, -0.5), width(1.6, 3.0), frac(0.05, 0.95);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = left(rng), b = a + width(rng);
    const double lo = a + p.r_min, hi = b - p.r_min;
    const double r = lo + frac(rng) * (hi - lo);
    const double direct = local_field(r, NeighborContext::interior(a, b), p);
    const double mirrored = local_field(-r, NeighborContext::interior(-b, -a), p);
    CHECK(mirrored == doctest::Approx(direct).epsilon(1e-13).scale(1.0));
  }
}

TEST_CASE("phase configuration checks") {
  const ModelParams p = standard();
  PhaseConfig c{{-1.0, 0.0, 1.0}, {0.0, 0.0, 0.0}};
  CHECK_NOTHROW(c.validate(p));
  CHECK(!c.neighbors(0).left);
  CHECK(*c.neighbors(0).right == 0.0);
  CHECK(c.neighbors(1).is_interior());
  CHECK(!c.neighbors(2).right);

  PhaseConfig unordered{{0.0, -1.0}, {0.0, 0.0}};
  CHECK_THROWS_AS(unordered.validate(p), DomainError);
  PhaseConfig outside{{-6.0, 0.0}, {0.0, 0.0}};
  CHECK_THROWS_AS(outside.validate(p), DomainError);
  PhaseConfig single{{0.0}, {0.0}};
  CHECK_THROWS_AS(single.validate(p), ParameterError);
}
