// Combined singlet commutation function tables.
//
// For a particle in the local field of fixed neighbours,
//   exp(w(q,p)) = sum_n exp(-beta E_n) phi_n(q) phi_n~(p) / <q|p>,
// with <q|p> = exp(i p q / hbar) and phi_n~(p) = int dr exp(i p r / hbar) phi_n(r).
// w already contains the classical -beta H1 part and tends to it as beta -> 0.
#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qlag/core.hpp"
#include "qlag/eigen_states.hpp"

namespace qlag {

using Complex = std::complex<double>;

/// Uniform momentum grid on [0, p_max]; negative p follow by conjugation.
struct MomentumGrid {
  double p_max = 1.0;
  std::size_t n_points = 64;

  double spacing() const { return p_max / static_cast<double>(n_points - 1); }
  double node(std::size_t i) const { return spacing() * static_cast<double>(i); }
};

/// p_max chosen so that beta p_max^2 / 2m equals `kinetic_cap`.
MomentumGrid make_momentum_grid(double beta, std::size_t n_points, const ModelParams& params,
                                double kinetic_cap = 50.0);

/// Trapezoid quadrature of phi(r) exp(i p r / hbar).
Complex momentum_projection(std::span<const double> phi, const SpatialGrid& grid, double p,
                            const ModelParams& params);

/// w at one phase-space point; q may lie between grid nodes (phi is linearly
/// interpolated). Empty when the spectral sum underflows.
std::optional<Complex> combined_w_point(const EigenSet& eigs, double beta, double q, double p,
                                        const ModelParams& params);

/// Values of w for one cell on its own r-grid times the momentum grid,
/// row-major [n_q][n_p]. The wall nodes, where every eigenfunction vanishes,
/// are filled by linear extrapolation from the two neighbouring nodes.
/// Underflowed nodes hold NaN.
Eigen::MatrixXcd combined_w_cell(const EigenSet& eigs, double beta, const MomentumGrid& p_grid,
                                 const ModelParams& params);

/// Same quantity for a harmonic local field u0 + m Omega^2 (r - r0)^2 / 2, using
/// the first `n_states` oscillator states evaluated analytically on `grid`.
Eigen::MatrixXcd harmonic_w_cell(double r0, double u0, double big_omega, std::size_t n_states,
                                 const SpatialGrid& grid, double beta, const MomentumGrid& p_grid,
                                 const ModelParams& params);

/// Closed-form <q|exp(-beta H)|p> / <q|p> for the oscillator above, from the
/// Mehler kernel. Returns its logarithm.
Complex harmonic_w_exact(double q, double p, double r0, double u0, double big_omega, double beta,
                         const ModelParams& params);

/// Quadratic fit of a cell's local field at its minimum inside the band.
struct HarmonicFit {
  double r0;
  double u0;
  double big_omega;
};
std::optional<HarmonicFit> fit_harmonic(const NeighborContext& ctx, const ModelParams& params);

enum class CellKind { interior, terminal_left, terminal_right };

/// Identifies one neighbour cell of a table. Terminal cells use `i` only: the
/// q'' index for terminal_left (first particle), the q' index for terminal_right.
struct CellRef {
  CellKind kind = CellKind::interior;
  std::size_t i = 0;
  std::size_t k = 0;
};

struct CommutationTable {
  ModelParams params;  // beta is the table temperature
  std::size_t n_q = 0;
  NeighborGrids neighbors;
  MomentumGrid p_grid;
  double kinetic_cap = 50.0;
  // Axis order (q, p, q', q'') for interior and (q, p, neighbour) for terminals.
  std::vector<Complex> interior;
  std::vector<Complex> terminal_left;
  std::vector<Complex> terminal_right;

  std::size_t n_p() const { return p_grid.n_points; }
  std::size_t n_nbr() const { return neighbors.n; }

  Complex& at(const CellRef& c, std::size_t iq, std::size_t ip);
  const Complex& at(const CellRef& c, std::size_t iq, std::size_t ip) const;

  NeighborContext context(const CellRef& c) const;
  /// The cell's q-grid (its band), or empty for an infeasible interior cell.
  std::optional<SpatialGrid> q_grid(const CellRef& c) const;
  /// Whether the cell holds data (feasible and solved).
  bool present(const CellRef& c) const;
  std::vector<CellRef> cells() const;

  /// Number of NaN nodes inside present cells.
  std::size_t flagged_count() const;
  std::size_t node_count() const;
};

/// Builds w for every present cell of the eigen table.
CommutationTable build_commutation_table(const EigenTable& eigen, double beta,
                                         const MomentumGrid& p_grid, unsigned threads = 1);

/// Harmonic local field approximation on the same grids.
CommutationTable harmonic_baseline_table(const EigenTable& eigen, double beta,
                                         const MomentumGrid& p_grid, unsigned threads = 1);

/// Table holding w = -beta H1 exactly; the quantum corrections vanish.
CommutationTable classical_table(const EigenTable& eigen, double beta, const MomentumGrid& p_grid);

/// Multilinear interpolation in (q, |p|, q', q''). Throws OutOfSupport outside the
/// tabulated region or next to an absent cell.
Complex interpolate_w(const CommutationTable& table, double q, double p, const NeighborContext& ctx);
std::optional<Complex> try_interpolate_w(const CommutationTable& table, double q, double p,
                                         const NeighborContext& ctx);

/// Commutation table file (magic "QLAG-CMT1").
void write_commutation_table(const CommutationTable& table, const std::string& path);
/// Reads a table; when `expected_beta` is given a header mismatch is a FormatError.
CommutationTable read_commutation_table(const std::string& path,
                                        std::optional<double> expected_beta = std::nullopt);

/// Position-integrated weight int dq exp(w(q,p)) for every p node. Equals the
/// thermal momentum density <p|exp(-beta H)|p>, which is real and non-negative.
std::vector<Complex> momentum_marginal(const CommutationTable& table, const CellRef& cell);

/// Momentum-integrated weight (1/2 pi hbar) int dp exp(w(q,p)) for every q node,
/// using the conjugate symmetry in p. Equals the thermal position density. Wall
/// nodes are reported as zero.
std::vector<double> position_marginal(const CommutationTable& table, const CellRef& cell);

}  // namespace qlag
