// Single-particle eigenstates in the effective local field of fixed neighbours.
#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qlag/core.hpp"

namespace qlag {

/// Uniform grid with both endpoints included; endpoints carry Dirichlet zeros.
struct SpatialGrid {
  double r_lo = 0.0;
  double r_hi = 1.0;
  std::size_t n_points = 16;

  double spacing() const { return (r_hi - r_lo) / static_cast<double>(n_points - 1); }
  double node(std::size_t i) const { return r_lo + spacing() * static_cast<double>(i); }
  double width() const { return r_hi - r_lo; }
};

SpatialGrid make_grid(double r_lo, double r_hi, std::size_t n_points);

/// Band q'+r_min <= r <= q''-r_min allowed for the variable particle; chain ends
/// are bounded by the walls at +-L/2 instead.
SpatialGrid band_grid(const NeighborContext& ctx, std::size_t n_points, const ModelParams& params);

/// Symmetric tridiagonal matrix acting on the interior (non-boundary) nodes.
struct TridiagonalHamiltonian {
  SpatialGrid grid;
  std::vector<double> diagonal;      // n_points - 2
  std::vector<double> off_diagonal;  // n_points - 3

  std::size_t dimension() const { return diagonal.size(); }
  Eigen::MatrixXd to_dense() const;
};

using Potential = std::function<double(double)>;

TridiagonalHamiltonian assemble_hamiltonian(const Potential& potential, const SpatialGrid& grid,
                                            const ModelParams& params);
TridiagonalHamiltonian assemble_hamiltonian(const NeighborContext& ctx, const SpatialGrid& grid,
                                            const ModelParams& params);

/// Lowest eigenpairs. Wavefunctions are real, sampled on every grid node
/// (zeros at the ends) and orthonormal under trapezoid quadrature.
struct EigenSet {
  SpatialGrid grid;
  std::vector<double> energies;
  std::vector<double> wavefunctions;  // row-major [n_states][n_points]

  std::size_t n_states() const { return energies.size(); }
  std::span<const double> state(std::size_t n) const {
    return {wavefunctions.data() + n * grid.n_points, grid.n_points};
  }
  std::span<double> state(std::size_t n) {
    return {wavefunctions.data() + n * grid.n_points, grid.n_points};
  }
};

enum class SolverKind { direct, relaxation };

struct SolverOptions {
  SolverKind kind = SolverKind::direct;
  std::size_t max_iterations = 10000;  // per state, relaxation only
  double tolerance = 1e-9;             // residual norm, relaxation only
};

EigenSet solve_states(const TridiagonalHamiltonian& h, std::size_t n_states,
                      const SolverOptions& options = {});

/// Trapezoid overlap <a|b> on a grid.
double overlap(std::span<const double> a, std::span<const double> b, const SpatialGrid& grid);

/// (n + 1/2) hbar omega.
double sho_reference(std::size_t n, const ModelParams& params);

struct EigenGridSpec {
  std::size_t n_neighbor = 32;  // points on each of the q' and q'' axes
  std::size_t n_r = 100;
  std::size_t n_states = 50;
};

/// Neighbour coordinate grids: q' in [-L/2, L/2 - r_e], q'' in [-L/2 + r_e, L/2].
struct NeighborGrids {
  double left_lo = 0.0;
  double right_lo = 0.0;
  double step = 0.0;
  std::size_t n = 0;

  double left(std::size_t i) const { return left_lo + step * static_cast<double>(i); }
  double right(std::size_t k) const { return right_lo + step * static_cast<double>(k); }
};

NeighborGrids make_neighbor_grids(const ModelParams& params, std::size_t n);

/// Whether a cell with neighbours q', q'' leaves a usable band.
bool interior_feasible(double left, double right, const ModelParams& params);

struct CellFailure {
  std::string where;  // "interior", "terminal_left" or "terminal_right"
  std::size_t i = 0;
  std::size_t k = 0;
  std::string message;
};

/// Solved cells for every neighbour placement. `terminal_left` holds the first
/// particle of the chain (right neighbour only, indexed by q''), `terminal_right`
/// the last (left neighbour only, indexed by q'). Infeasible or failed cells are
/// empty.
struct EigenTable {
  ModelParams params;
  EigenGridSpec spec;
  NeighborGrids neighbors;
  std::vector<std::optional<EigenSet>> interior;  // [i'][i'']
  std::vector<std::optional<EigenSet>> terminal_left;
  std::vector<std::optional<EigenSet>> terminal_right;
  std::vector<CellFailure> failures;

  const std::optional<EigenSet>& cell(std::size_t i, std::size_t k) const {
    return interior[i * spec.n_neighbor + k];
  }
  std::size_t feasible_interior_count() const;
};

EigenTable build_eigen_table(const ModelParams& params, const EigenGridSpec& spec,
                             const SolverOptions& options = {}, unsigned threads = 1);

/// Eigen table file (magic "QLAG-EIG1").
void write_eigen_table(const EigenTable& table, const std::string& path);
EigenTable read_eigen_table(const std::string& path);

/// Power-series coefficients g_n of the core solution
/// psi(r) = sum_n g_n (r/r_e)^n exp(a (r_e/r)^5) for a particle of energy E in
/// weight * LJ. g_0..g_2 = 0, g_3 = 1.
std::vector<double> core_asymptote_coeffs(double energy, std::size_t n_terms,
                                          const ModelParams& params, double weight = 1.0);

/// a = -sqrt(2 m weight eps r_e^2 / (25 hbar^2)).
double core_exponent(const ModelParams& params, double weight = 1.0);

/// psi and psi'' of the truncated core series at r (distance from the core centre).
struct CoreValue {
  double psi;
  double psi_d2;
};
CoreValue core_asymptote_value(std::span<const double> coeffs, double r, const ModelParams& params,
                               double weight = 1.0);

/// Non-symmetric tridiagonal operator, stored by bands over the interior nodes.
struct TridiagonalOperator {
  SpatialGrid grid;
  std::vector<double> lower;  // n-1, entry (i+1, i)
  std::vector<double> diagonal;
  std::vector<double> upper;  // n-1, entry (i, i+1)

  Eigen::MatrixXd to_dense() const;
  /// Applies the operator to values on all grid nodes (ends treated as zero).
  std::vector<double> apply(std::span<const double> values) const;
};

/// Singlet operator exact to quadratic order in beta:
/// H1 + (beta hbar^2 / 4m) u2'' + (beta hbar^2 / 2m) u2' d/dr, where u2 is the
/// pair part of the local field.
TridiagonalOperator assemble_quadratic_hamiltonian(const NeighborContext& ctx,
                                                   const SpatialGrid& grid, double beta,
                                                   const ModelParams& params);

/// Test function of N coordinates for the operator identity.
using ManyBodyFunction = std::function<double(std::span<const double>)>;

/// Max-norm residual of (H(r)^2 - H(r|q)^2) psi + 2 Delta2 psi at r = q, with
/// the left side from nested finite differences of the full and effective
/// Hamiltonians and Delta2 from the assembled quadratic correction.
/// `pair_scale` multiplies the pair potential (0 switches it off).
double verify_quadratic_identity(std::span<const double> config, const ManyBodyFunction& psi,
                                 const ModelParams& params, double spacing,
                                 double pair_scale = 1.0);

}  // namespace qlag
