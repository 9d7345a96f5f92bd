#include "qlag/core.hpp"

#include <cmath>
#include <sstream>

#include "qlag/errors.hpp"

namespace qlag {

double ModelParams::omega_lj() const {
  return std::sqrt(72.0 * epsilon / (r_e * r_e) / mass);
}

void ModelParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ParameterError(what);
  };
  require(epsilon > 0 && r_e > 0 && mass > 0 && hbar > 0, "model scales must be positive");
  require(omega > 0 && beta > 0, "omega and beta must be positive");
  require(L > 0 && r_min > 0, "L and r_min must be positive");
  require(r_min < r_e, "r_min must be below r_e");
  require(L >= 8.0 * r_e, "L must be at least 8 r_e");
  require(pair_share > 0 && pair_share < 1, "pair_share must lie in (0, 1)");
}

ModelParams derive_reduced_units(double lambda_dB, double omega_rel) {
  if (!(lambda_dB > 0) || !(omega_rel > 0))
    throw ParameterError("lambda_dB and omega_rel must be positive");
  ModelParams p;
  p.hbar = lambda_dB / std::pow(2.0, 1.0 / 6.0);
  p.omega = omega_rel;
  p.beta = 1.0 / p.hbar_omega();
  return p;
}

ModelParams with_beta_hbar_omega(ModelParams params, double beta_hbar_omega) {
  if (!(beta_hbar_omega > 0)) throw ParameterError("beta*hbar*omega must be positive");
  params.beta = beta_hbar_omega / params.hbar_omega();
  return params;
}

double sho_potential(double r, const ModelParams& p) {
  return 0.5 * p.mass * p.omega * p.omega * r * r;
}

double sho_potential_d1(double r, const ModelParams& p) {
  return p.mass * p.omega * p.omega * r;
}

double sho_potential_d2(const ModelParams& p) { return p.mass * p.omega * p.omega; }

double lj_pair(double d, const ModelParams& p) {
  if (!(d > 0)) throw DomainError("lj_pair: separation must be positive");
  const double s6 = std::pow(p.r_e / d, 6);
  return p.epsilon * (s6 * s6 - 2.0 * s6);
}

double lj_pair_d1(double d, const ModelParams& p) {
  if (!(d > 0)) throw DomainError("lj_pair_d1: separation must be positive");
  const double s6 = std::pow(p.r_e / d, 6);
  return p.epsilon * (-12.0 * s6 * s6 + 12.0 * s6) / d;
}

double lj_pair_d2(double d, const ModelParams& p) {
  if (!(d > 0)) throw DomainError("lj_pair_d2: separation must be positive");
  const double s6 = std::pow(p.r_e / d, 6);
  return p.epsilon * (156.0 * s6 * s6 - 84.0 * s6) / (d * d);
}

void NeighborContext::validate(const ModelParams& params) const {
  if (!left && !right) throw DomainError("neighbour context needs at least one neighbour");
  if (left && right && *right - *left < 2.0 * params.r_min)
    throw DomainError("neighbours closer than 2 r_min");
}

namespace {

void check_between(double r, const NeighborContext& ctx) {
  if ((ctx.left && !(r > *ctx.left)) || (ctx.right && !(r < *ctx.right))) {
    std::ostringstream os;
    os << "position " << r << " not strictly between its neighbours";
    throw DomainError(os.str());
  }
}

}  // namespace

double local_pair_field(double r, const NeighborContext& ctx, const ModelParams& p) {
  check_between(r, ctx);
  double u = 0.0;
  if (ctx.left) u += lj_pair(r - *ctx.left, p);
  if (ctx.right) u += lj_pair(*ctx.right - r, p);
  return p.pair_share * u;
}

double local_pair_field_d1(double r, const NeighborContext& ctx, const ModelParams& p) {
  check_between(r, ctx);
  double du = 0.0;
  if (ctx.left) du += lj_pair_d1(r - *ctx.left, p);
  if (ctx.right) du -= lj_pair_d1(*ctx.right - r, p);
  return p.pair_share * du;
}

double local_pair_field_d2(double r, const NeighborContext& ctx, const ModelParams& p) {
  check_between(r, ctx);
  double d2u = 0.0;
  if (ctx.left) d2u += lj_pair_d2(r - *ctx.left, p);
  if (ctx.right) d2u += lj_pair_d2(*ctx.right - r, p);
  return p.pair_share * d2u;
}

double local_field(double r, const NeighborContext& ctx, const ModelParams& p) {
  return sho_potential(r, p) + local_pair_field(r, ctx, p);
}

double local_field_d2(double r, const NeighborContext& ctx, const ModelParams& p) {
  return sho_potential_d2(p) + local_pair_field_d2(r, ctx, p);
}

double kinetic_energy(double momentum, const ModelParams& p) {
  return 0.5 * momentum * momentum / p.mass;
}

double singlet_hamiltonian(double q, double momentum, const NeighborContext& ctx,
                           const ModelParams& p) {
  return kinetic_energy(momentum, p) + local_field(q, ctx, p);
}

NeighborContext PhaseConfig::neighbors(std::size_t j) const {
  NeighborContext ctx;
  if (j > 0) ctx.left = positions[j - 1];
  if (j + 1 < positions.size()) ctx.right = positions[j + 1];
  return ctx;
}

void PhaseConfig::validate(const ModelParams& params) const {
  if (positions.size() < 2) throw ParameterError("configuration needs at least two particles");
  if (momenta.size() != positions.size())
    throw ParameterError("positions and momenta differ in length");
  for (std::size_t j = 0; j < positions.size(); ++j) {
    if (std::abs(positions[j]) > params.half_span())
      throw DomainError("particle outside [-L/2, L/2]");
    if (j > 0 && !(positions[j] > positions[j - 1]))
      throw DomainError("positions must be strictly increasing");
  }
}

double nnn_potential(std::span<const double> q, const ModelParams& p) {
  double u = 0.0;
  for (std::size_t j = 0; j + 2 < q.size(); ++j)
    for (std::size_t k = j + 2; k < q.size(); ++k) u += lj_pair(q[k] - q[j], p);
  return u;
}

double total_potential(std::span<const double> q, const ModelParams& p) {
  double u = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    u += sho_potential(q[j], p);
    for (std::size_t k = j + 1; k < q.size(); ++k) u += lj_pair(std::abs(q[k] - q[j]), p);
  }
  return u;
}

double classical_hamiltonian(const PhaseConfig& config, const ModelParams& p) {
  double k = 0.0;
  for (double pj : config.momenta) k += kinetic_energy(pj, p);
  return k + total_potential(config.positions, p);
}

}  // namespace qlag
