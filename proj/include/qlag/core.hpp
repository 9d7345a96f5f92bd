// Reduced-unit model of a 1D Lennard-Jones chain in a harmonic trap.
//
// Energies are in units of the LJ well depth, lengths in units of the LJ
// minimum position and masses in units of the particle mass, so
// epsilon = r_e = mass = 1 internally. hbar and omega are derived from the
// de Broglie parameter and the relative trap frequency.
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace qlag {

struct ModelParams {
  double epsilon = 1.0;
  double r_e = 1.0;
  double mass = 1.0;
  double hbar = 1.0;
  double omega = 0.5;
  double beta = 1.0;   // 1/k_B T in units of 1/epsilon
  double L = 10.0;     // span of the system, positions in [-L/2, L/2]
  double r_min = 0.75; // closest approach to a fixed neighbour
  // Fraction of a pair potential felt by the variable particle. Identical
  // masses give 1/2; unequal masses would use m_k / (m_j + m_k).
  double pair_share = 0.5;

  double hbar_omega() const { return hbar * omega; }
  double beta_hbar_omega() const { return beta * hbar * omega; }
  /// sqrt(u''(r_e)/m) of the LJ pair, 72 epsilon / r_e^2 for this LJ form.
  double omega_lj() const;
  double half_span() const { return 0.5 * L; }

  /// Throws ParameterError unless all invariants hold.
  void validate() const;
};

/// Reduced units from Lambda_dB = 2^{1/6} hbar / (r_e sqrt(m eps)) and
/// omega_rel = omega r_e sqrt(m / eps).
ModelParams derive_reduced_units(double lambda_dB, double omega_rel);

/// Copy of `params` with beta set from a value of beta*hbar*omega.
ModelParams with_beta_hbar_omega(ModelParams params, double beta_hbar_omega);

double sho_potential(double r, const ModelParams& params);
double sho_potential_d1(double r, const ModelParams& params);
double sho_potential_d2(const ModelParams& params);

/// eps [(r_e/d)^12 - 2 (r_e/d)^6]; throws DomainError for d <= 0.
double lj_pair(double d, const ModelParams& params);
double lj_pair_d1(double d, const ModelParams& params);
double lj_pair_d2(double d, const ModelParams& params);

/// Fixed neighbour positions of a variable particle. Interior particles have
/// both, chain ends have one.
struct NeighborContext {
  std::optional<double> left;   // q'
  std::optional<double> right;  // q''

  static NeighborContext interior(double left, double right) {
    return {left, right};
  }
  static NeighborContext right_only(double right) { return {std::nullopt, right}; }
  static NeighborContext left_only(double left) { return {left, std::nullopt}; }

  bool is_interior() const { return left && right; }
  void validate(const ModelParams& params) const;
};

/// Pair part of the effective local field, pair_share * [u2(r-q') + u2(q''-r)].
double local_pair_field(double r, const NeighborContext& ctx, const ModelParams& params);
double local_pair_field_d1(double r, const NeighborContext& ctx, const ModelParams& params);
double local_pair_field_d2(double r, const NeighborContext& ctx, const ModelParams& params);

/// Effective one-body potential u1(r) + pair part. Throws DomainError when r is
/// not strictly between the neighbours.
double local_field(double r, const NeighborContext& ctx, const ModelParams& params);
double local_field_d2(double r, const NeighborContext& ctx, const ModelParams& params);

double kinetic_energy(double p, const ModelParams& params);

/// p^2/2m + local_field(q).
double singlet_hamiltonian(double q, double p, const NeighborContext& ctx,
                           const ModelParams& params);

/// Ordered phase-space point q_1 < ... < q_N with momenta.
struct PhaseConfig {
  std::vector<double> positions;
  std::vector<double> momenta;

  std::size_t size() const { return positions.size(); }
  /// Neighbours of particle j (0-based); chain ends get a single neighbour.
  NeighborContext neighbors(std::size_t j) const;
  void validate(const ModelParams& params) const;
};

/// Pair potential summed over non-nearest neighbours of an ordered chain.
double nnn_potential(std::span<const double> positions, const ModelParams& params);
inline double nnn_potential(const PhaseConfig& config, const ModelParams& params) {
  return nnn_potential(config.positions, params);
}

/// Full potential energy: trap on every particle plus all LJ pairs.
double total_potential(std::span<const double> positions, const ModelParams& params);

/// Sum p^2/2m + U(q).
double classical_hamiltonian(const PhaseConfig& config, const ModelParams& params);

}  // namespace qlag
