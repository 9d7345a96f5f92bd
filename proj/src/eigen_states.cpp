#include "qlag/eigen_states.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "binary_io.hpp"
#include "parallel.hpp"
#include "qlag/errors.hpp"

namespace qlag {

SpatialGrid make_grid(double r_lo, double r_hi, std::size_t n_points) {
  if (n_points < 16) throw ParameterError("spatial grid needs at least 16 points");
  if (!(r_hi > r_lo)) throw DomainError("spatial grid must have positive width");
  return {r_lo, r_hi, n_points};
}

SpatialGrid band_grid(const NeighborContext& ctx, std::size_t n_points, const ModelParams& p) {
  ctx.validate(p);
  const double lo = ctx.left ? *ctx.left + p.r_min : -p.half_span();
  const double hi = ctx.right ? *ctx.right - p.r_min : p.half_span();
  if (!(hi > lo)) throw DomainError("band narrower than 2 r_min");
  return make_grid(lo, hi, n_points);
}

Eigen::MatrixXd TridiagonalHamiltonian::to_dense() const {
  const auto n = static_cast<Eigen::Index>(dimension());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = diagonal[static_cast<std::size_t>(i)];
    if (i + 1 < n) m(i, i + 1) = m(i + 1, i) = off_diagonal[static_cast<std::size_t>(i)];
  }
  return m;
}

TridiagonalHamiltonian assemble_hamiltonian(const Potential& potential, const SpatialGrid& grid,
                                            const ModelParams& p) {
  const double h = grid.spacing();
  const double kin = p.hbar * p.hbar / (p.mass * h * h);
  const std::size_t n = grid.n_points - 2;
  TridiagonalHamiltonian out{grid, std::vector<double>(n), std::vector<double>(n - 1, -0.5 * kin)};
  for (std::size_t i = 0; i < n; ++i) out.diagonal[i] = kin + potential(grid.node(i + 1));
  return out;
}

TridiagonalHamiltonian assemble_hamiltonian(const NeighborContext& ctx, const SpatialGrid& grid,
                                            const ModelParams& p) {
  ctx.validate(p);
  if ((ctx.left && grid.r_lo < *ctx.left + p.r_min - 1e-12) ||
      (ctx.right && grid.r_hi > *ctx.right - p.r_min + 1e-12))
    throw DomainError("grid extends past the allowed band");
  return assemble_hamiltonian([&](double r) { return local_field(r, ctx, p); }, grid, p);
}

double overlap(std::span<const double> a, std::span<const double> b, const SpatialGrid& grid) {
  const std::size_t n = a.size();
  double s = 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]);
  for (std::size_t i = 1; i + 1 < n; ++i) s += a[i] * b[i];
  return s * grid.spacing();
}

namespace {

// Fixes the overall sign: first clearly non-zero node is positive.
void canonical_sign(std::span<double> phi) {
  double peak = 0.0;
  for (double v : phi) peak = std::max(peak, std::abs(v));
  for (double v : phi) {
    if (std::abs(v) > 1e-6 * peak) {
      if (v < 0) std::transform(phi.begin(), phi.end(), phi.begin(), [](double x) { return -x; });
      return;
    }
  }
}

EigenSet solve_direct(const TridiagonalHamiltonian& h, std::size_t n_states) {
  const auto n = static_cast<Eigen::Index>(h.dimension());
  Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(h.diagonal.data(), n);
  Eigen::VectorXd sub = Eigen::Map<const Eigen::VectorXd>(h.off_diagonal.data(), n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw ConvergenceError("tridiagonal QL iteration failed", {});

  const std::size_t np = h.grid.n_points;
  const double norm = 1.0 / std::sqrt(h.grid.spacing());
  EigenSet out{h.grid, std::vector<double>(n_states), std::vector<double>(n_states * np, 0.0)};
  for (std::size_t s = 0; s < n_states; ++s) {
    const auto col = static_cast<Eigen::Index>(s);
    out.energies[s] = solver.eigenvalues()(col);
    auto phi = out.state(s);
    for (Eigen::Index i = 0; i < n; ++i) phi[static_cast<std::size_t>(i) + 1] = norm * solver.eigenvectors()(i, col);
    canonical_sign(phi);
  }
  return out;
}

// Relaxation of the Rayleigh quotient, one state at a time. Each step moves the
// wavefunction along the local force -(H - E)psi and the previous step, with the
// best combination picked by Rayleigh-Ritz, and keeps it orthogonal to the lower
// states by Gram-Schmidt.
EigenSet solve_relaxation(const TridiagonalHamiltonian& h, std::size_t n_states,
                          const SolverOptions& opt) {
  const auto n = static_cast<Eigen::Index>(h.dimension());
  const Eigen::Map<const Eigen::VectorXd> diag(h.diagonal.data(), n);
  const Eigen::Map<const Eigen::VectorXd> off(h.off_diagonal.data(), n - 1);
  auto apply = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd y = diag.cwiseProduct(x);
    y.head(n - 1) += off.cwiseProduct(x.tail(n - 1));
    y.tail(n - 1) += off.cwiseProduct(x.head(n - 1));
    return y;
  };

  std::vector<Eigen::VectorXd> found;
  std::vector<double> energies;
  auto deflate = [&](Eigen::VectorXd& v) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& u : found) v -= u.dot(v) * u;
  };

  for (std::size_t s = 0; s < n_states; ++s) {
    Eigen::VectorXd x(n);
    const double k = static_cast<double>(s + 1) * M_PI / static_cast<double>(n + 1);
    for (Eigen::Index i = 0; i < n; ++i)
      x(i) = std::sin(k * static_cast<double>(i + 1)) + 1e-3 * std::cos(0.37 * static_cast<double>(i));
    deflate(x);
    x.normalize();

    double rho = x.dot(apply(x));
    Eigen::VectorXd prev_step;
    double residual = 0.0;
    bool converged = false;
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
      if (it % 25 == 24) {
        deflate(x);
        x.normalize();
      }
      const Eigen::VectorXd hx = apply(x);
      rho = x.dot(hx);
      Eigen::VectorXd g = hx - rho * x;
      deflate(g);
      residual = g.norm();
      if (residual < opt.tolerance) {
        converged = true;
        break;
      }
      // Orthonormal basis of span{x, g, previous step}.
      std::vector<Eigen::VectorXd> basis{x};
      for (Eigen::VectorXd v : {g, prev_step}) {
        if (v.size() != n) continue;
        deflate(v);
        const double before = v.norm();
        for (int pass = 0; pass < 2; ++pass)
          for (const auto& b : basis) v -= b.dot(v) * b;
        if (v.norm() <= 1e-10 * before) continue;
        basis.push_back(v.normalized());
      }
      const auto m = static_cast<Eigen::Index>(basis.size());
      std::vector<Eigen::VectorXd> images;
      for (const auto& b : basis) images.push_back(apply(b));
      Eigen::MatrixXd small(m, m);
      for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b)
          small(a, b) = 0.5 * (basis[a].dot(images[b]) + basis[b].dot(images[a]));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(small);
      const Eigen::VectorXd c = ritz.eigenvectors().col(0);
      Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
      for (Eigen::Index a = 1; a < m; ++a) step += c(a) * basis[a];
      x = c(0) * x + step;
      const double nx = x.norm();
      x /= nx;
      prev_step = step / nx;
    }
    if (!converged) {
      std::vector<double> residuals(energies.size(), 0.0);
      residuals.push_back(residual);
      std::ostringstream os;
      os << "relaxation did not converge for state " << s << " (residual " << residual << ")";
      throw ConvergenceError(os.str(), std::move(residuals));
    }
    found.push_back(x);
    energies.push_back(rho);
  }

  // Gram-Schmidt may leave states slightly out of order when levels are close.
  std::vector<std::size_t> order(n_states);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return energies[a] < energies[b]; });

  const std::size_t np = h.grid.n_points;
  const double norm = 1.0 / std::sqrt(h.grid.spacing());
  EigenSet out{h.grid, std::vector<double>(n_states), std::vector<double>(n_states * np, 0.0)};
  for (std::size_t s = 0; s < n_states; ++s) {
    out.energies[s] = energies[order[s]];
    auto phi = out.state(s);
    for (Eigen::Index i = 0; i < n; ++i) phi[static_cast<std::size_t>(i) + 1] = norm * found[order[s]](i);
    canonical_sign(phi);
  }
  return out;
}

}  // namespace

EigenSet solve_states(const TridiagonalHamiltonian& h, std::size_t n_states,
                      const SolverOptions& options) {
  if (n_states == 0 || n_states > h.grid.n_points / 2)
    throw ParameterError("n_states must lie in [1, n_points/2]");
  return options.kind == SolverKind::direct ? solve_direct(h, n_states)
                                            : solve_relaxation(h, n_states, options);
}

double sho_reference(std::size_t n, const ModelParams& p) {
  return (static_cast<double>(n) + 0.5) * p.hbar_omega();
}

NeighborGrids make_neighbor_grids(const ModelParams& p, std::size_t n) {
  if (n < 2) throw ParameterError("neighbour grid needs at least two points");
  const double span = p.L - p.r_e;
  return {-p.half_span(), -p.half_span() + p.r_e, span / static_cast<double>(n - 1), n};
}

bool interior_feasible(double left, double right, const ModelParams& p) {
  return right - left > 2.0 * p.r_min + 1e-9 * p.r_e;
}

std::size_t EigenTable::feasible_interior_count() const {
  return static_cast<std::size_t>(
      std::count_if(interior.begin(), interior.end(), [](const auto& c) { return c.has_value(); }));
}

EigenTable build_eigen_table(const ModelParams& params, const EigenGridSpec& spec,
                             const SolverOptions& options, unsigned threads) {
  params.validate();
  if (spec.n_states == 0 || spec.n_states > spec.n_r / 2)
    throw ParameterError("n_states must lie in [1, n_r/2]");
  EigenTable table;
  table.params = params;
  table.spec = spec;
  table.neighbors = make_neighbor_grids(params, spec.n_neighbor);
  const std::size_t n = spec.n_neighbor;
  table.interior.resize(n * n);
  table.terminal_left.resize(n);
  table.terminal_right.resize(n);

  // Job list: interior cells, then chain-start cells, then chain-end cells.
  const std::size_t jobs = n * n + 2 * n;
  std::vector<std::string> errors(jobs);
  detail::parallel_for(jobs, threads, [&](std::size_t job) {
    NeighborContext ctx;
    std::optional<EigenSet>* slot = nullptr;
    if (job < n * n) {
      const double left = table.neighbors.left(job / n);
      const double right = table.neighbors.right(job % n);
      if (!interior_feasible(left, right, params)) return;
      ctx = NeighborContext::interior(left, right);
      slot = &table.interior[job];
    } else if (job < n * n + n) {
      ctx = NeighborContext::right_only(table.neighbors.right(job - n * n));
      slot = &table.terminal_left[job - n * n];
    } else {
      ctx = NeighborContext::left_only(table.neighbors.left(job - n * n - n));
      slot = &table.terminal_right[job - n * n - n];
    }
    try {
      const SpatialGrid grid = band_grid(ctx, spec.n_r, params);
      *slot = solve_states(assemble_hamiltonian(ctx, grid, params), spec.n_states, options);
    } catch (const std::exception& e) {
      errors[job] = e.what();
    }
  });

  for (std::size_t job = 0; job < jobs; ++job) {
    if (errors[job].empty()) continue;
    CellFailure f;
    if (job < n * n) {
      f = {"interior", job / n, job % n, errors[job]};
    } else if (job < n * n + n) {
      f = {"terminal_left", job - n * n, 0, errors[job]};
    } else {
      f = {"terminal_right", job - n * n - n, 0, errors[job]};
    }
    table.failures.push_back(std::move(f));
  }
  return table;
}

namespace {

constexpr std::string_view kEigenMagic = "QLAG-EIG1";

void write_cell(detail::BinaryWriter& w, const std::optional<EigenSet>& cell,
                const EigenGridSpec& spec) {
  w.u8(cell ? 1 : 0);
  if (cell) {
    w.f64_range(cell->energies.begin(), cell->energies.end());
    w.f64_range(cell->wavefunctions.begin(), cell->wavefunctions.end());
  } else {
    for (std::size_t i = 0; i < spec.n_states * (1 + spec.n_r); ++i) w.f64(0.0);
  }
}

std::optional<EigenSet> read_cell(detail::BinaryReader& r, const EigenGridSpec& spec,
                                  const NeighborContext& ctx, const ModelParams& p) {
  const std::uint8_t present = r.u8();
  if (present > 1) throw FormatError("bad feasibility byte");
  EigenSet set;
  set.energies.resize(spec.n_states);
  set.wavefunctions.resize(spec.n_states * spec.n_r);
  for (auto& e : set.energies) e = r.f64();
  for (auto& v : set.wavefunctions) v = r.f64();
  if (!present) return std::nullopt;
  set.grid = band_grid(ctx, spec.n_r, p);
  return set;
}

}  // namespace

void write_eigen_table(const EigenTable& t, const std::string& path) {
  if (t.params.pair_share != 0.5)
    throw FormatError("eigen table format stores equal-mass (pair_share = 1/2) tables only");
  detail::BinaryWriter w(path);
  w.magic(kEigenMagic);
  for (std::size_t d : {t.spec.n_neighbor, t.spec.n_neighbor, t.spec.n_states, t.spec.n_r})
    w.u32(static_cast<std::uint32_t>(d));
  const auto& p = t.params;
  for (double v : {p.L, p.r_min, p.hbar, p.omega, p.epsilon, p.r_e, p.mass}) w.f64(v);
  for (const auto& c : t.interior) write_cell(w, c, t.spec);
  for (const auto& c : t.terminal_left) write_cell(w, c, t.spec);
  for (const auto& c : t.terminal_right) write_cell(w, c, t.spec);
  w.finish();
}

EigenTable read_eigen_table(const std::string& path) {
  detail::BinaryReader r(path);
  r.expect_magic(kEigenMagic);
  EigenTable t;
  const std::uint32_t n_left = r.u32();
  const std::uint32_t n_right = r.u32();
  if (n_left != n_right) throw FormatError("eigen table neighbour axes must have equal size");
  t.spec.n_neighbor = n_left;
  t.spec.n_states = r.u32();
  t.spec.n_r = r.u32();
  auto& p = t.params;
  p.L = r.f64();
  p.r_min = r.f64();
  p.hbar = r.f64();
  p.omega = r.f64();
  p.epsilon = r.f64();
  p.r_e = r.f64();
  p.mass = r.f64();
  p.beta = 1.0 / p.hbar_omega();
  try {
    p.validate();
  } catch (const ParameterError& e) {
    throw FormatError(std::string("eigen table header: ") + e.what());
  }
  if (t.spec.n_r < 16 || t.spec.n_states == 0 || t.spec.n_states > t.spec.n_r / 2)
    throw FormatError("eigen table header: inconsistent dimensions");
  t.neighbors = make_neighbor_grids(p, t.spec.n_neighbor);
  const std::size_t n = t.spec.n_neighbor;
  t.interior.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const double left = t.neighbors.left(i);
      const double right = t.neighbors.right(k);
      const NeighborContext ctx = NeighborContext::interior(left, right);
      auto cell = read_cell(r, t.spec, ctx, p);
      if (cell && !interior_feasible(left, right, p)) throw FormatError("infeasible cell marked present");
      t.interior.push_back(std::move(cell));
    }
  for (std::size_t k = 0; k < n; ++k)
    t.terminal_left.push_back(read_cell(r, t.spec, NeighborContext::right_only(t.neighbors.right(k)), p));
  for (std::size_t i = 0; i < n; ++i)
    t.terminal_right.push_back(read_cell(r, t.spec, NeighborContext::left_only(t.neighbors.left(i)), p));
  r.expect_end();
  return t;
}

double core_exponent(const ModelParams& p, double weight) {
  return -std::sqrt(2.0 * p.mass * weight * p.epsilon * p.r_e * p.r_e / (25.0 * p.hbar * p.hbar));
}

std::vector<double> core_asymptote_coeffs(double energy, std::size_t n_terms, const ModelParams& p,
                                          double weight) {
  if (n_terms == 0) throw ParameterError("core series needs at least one term");
  const double a = core_exponent(p, weight);
  const double k6 = 4.0 * p.mass * weight * p.epsilon * p.r_e * p.r_e / (p.hbar * p.hbar);
  const double ke = 2.0 * p.mass * energy * p.r_e * p.r_e / (p.hbar * p.hbar);
  std::vector<double> g(n_terms, 0.0);
  if (n_terms > 3) g[3] = 1.0;
  auto at = [&](long idx) { return idx < 0 ? 0.0 : g[static_cast<std::size_t>(idx)]; };
  // g_{n+7} from g_{n+6}, g_{n+2}, g_n for n >= -3.
  for (long n = -3; n + 7 < static_cast<long>(n_terms); ++n) {
    const double nn = static_cast<double>(n);
    g[static_cast<std::size_t>(n + 7)] =
        (k6 * at(n + 6) + (nn + 2.0) * (nn + 1.0) * at(n + 2) + ke * at(n)) / (10.0 * a * (nn + 4.0));
  }
  return g;
}

CoreValue core_asymptote_value(std::span<const double> g, double r, const ModelParams& p,
                               double weight) {
  const double a = core_exponent(p, weight);
  const double x = r / p.r_e;
  double s = 0.0, s1 = 0.0, s2 = 0.0;  // series and its x-derivatives
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double dn = static_cast<double>(n);
    s += g[n] * std::pow(x, dn);
    if (n >= 1) s1 += g[n] * dn * std::pow(x, dn - 1);
    if (n >= 2) s2 += g[n] * dn * (dn - 1) * std::pow(x, dn - 2);
  }
  const double e = std::exp(a * std::pow(x, -5));
  const double psi = s * e;
  // psi'' = [g'' - 10 a x^-6 g' + 30 a x^-7 g + 25 a^2 x^-12 g] e, in x units.
  const double d2 = (s2 - 10.0 * a * std::pow(x, -6) * s1 + 30.0 * a * std::pow(x, -7) * s +
                     25.0 * a * a * std::pow(x, -12) * s) * e;
  return {psi, d2 / (p.r_e * p.r_e)};
}

Eigen::MatrixXd TridiagonalOperator::to_dense() const {
  const auto n = static_cast<Eigen::Index>(diagonal.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    m(i, i) = diagonal[u];
    if (i + 1 < n) {
      m(i, i + 1) = upper[u];
      m(i + 1, i) = lower[u];
    }
  }
  return m;
}

std::vector<double> TridiagonalOperator::apply(std::span<const double> v) const {
  const std::size_t n = diagonal.size();
  std::vector<double> out(n + 2, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = diagonal[i] * v[i + 1];
    if (i > 0) s += lower[i - 1] * v[i];
    if (i + 1 < n) s += upper[i] * v[i + 2];
    out[i + 1] = s;
  }
  return out;
}

namespace {

// Row of the beta-linear correction (beta hbar^2/4m) u2'' + (beta hbar^2/2m) u2' d/dr
// with a centred first difference.
struct QuadraticStencil {
  double lower;
  double diagonal;
  double upper;
};

QuadraticStencil quadratic_correction(double u2_d1, double u2_d2, double h, double beta,
                                      const ModelParams& p) {
  const double c = beta * p.hbar * p.hbar / p.mass;
  const double grad = 0.5 * c * u2_d1 / (2.0 * h);
  return {-grad, 0.25 * c * u2_d2, grad};
}

}  // namespace

TridiagonalOperator assemble_quadratic_hamiltonian(const NeighborContext& ctx,
                                                   const SpatialGrid& grid, double beta,
                                                   const ModelParams& p) {
  if (!(beta >= 0)) throw ParameterError("beta must be non-negative");
  const TridiagonalHamiltonian base = assemble_hamiltonian(ctx, grid, p);
  const std::size_t n = base.dimension();
  TridiagonalOperator op{grid, base.off_diagonal, base.diagonal, base.off_diagonal};
  const double h = grid.spacing();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = grid.node(i + 1);
    const QuadraticStencil s = quadratic_correction(local_pair_field_d1(r, ctx, p),
                                                    local_pair_field_d2(r, ctx, p), h, beta, p);
    op.diagonal[i] += s.diagonal;
    if (i > 0) op.lower[i - 1] += s.lower;
    if (i + 1 < n) op.upper[i] += s.upper;
  }
  return op;
}

double verify_quadratic_identity(std::span<const double> config, const ManyBodyFunction& psi,
                                 const ModelParams& params, double spacing, double pair_scale) {
  const std::size_t n = config.size();
  if (n < 2 || n > 3) throw ParameterError("identity check supports 2 or 3 particles");
  ModelParams p = params;
  p.epsilon *= pair_scale;
  const std::vector<double> q(config.begin(), config.end());
  const double h = spacing;
  const double kin = -p.hbar * p.hbar / (2.0 * p.mass);

  auto lj = [&](double d) { return pair_scale == 0.0 ? 0.0 : lj_pair(std::abs(d), p); };
  auto u_exact = [&](std::span<const double> r) {
    double u = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      u += sho_potential(r[j], p);
      for (std::size_t k = j + 1; k < n; ++k) u += lj(r[j] - r[k]);
    }
    return u;
  };
  auto u_effective = [&](std::span<const double> r) {
    double u = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      u += sho_potential(r[j], p);
      for (std::size_t k = 0; k < n; ++k)
        if (k != j) u += p.pair_share * lj(r[j] - q[k]);
    }
    return u;
  };
  auto hamiltonian = [&](auto&& potential, const ManyBodyFunction& f) -> ManyBodyFunction {
    return [&, f, potential](std::span<const double> r) {
      std::vector<double> x(r.begin(), r.end());
      const double f0 = f(x);
      double lap = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        x[j] = r[j] + h;
        const double fp = f(x);
        x[j] = r[j] - h;
        const double fm = f(x);
        x[j] = r[j];
        lap += (fp - 2.0 * f0 + fm) / (h * h);
      }
      return kin * lap + potential(r) * f0;
    };
  };

  const double lhs = hamiltonian(u_exact, hamiltonian(u_exact, psi))(q) -
                     hamiltonian(u_effective, hamiltonian(u_effective, psi))(q);

  // -2 Delta2 psi from the same stencil used by the quadratic operator, at unit beta.
  double delta2 = 0.0;
  std::vector<double> x = q;
  const double psi0 = psi(x);
  for (std::size_t j = 0; j < n; ++j) {
    double d1 = 0.0, d2 = 0.0;
    if (pair_scale != 0.0)
      for (std::size_t k = 0; k < n; ++k) {
        if (k == j) continue;
        const double d = q[j] - q[k];
        const double sgn = d > 0 ? 1.0 : -1.0;
        d1 += p.pair_share * sgn * lj_pair_d1(std::abs(d), p);
        d2 += p.pair_share * lj_pair_d2(std::abs(d), p);
      }
    const QuadraticStencil s = quadratic_correction(d1, d2, h, 1.0, p);
    x[j] = q[j] + h;
    const double fp = psi(x);
    x[j] = q[j] - h;
    const double fm = psi(x);
    x[j] = q[j];
    delta2 += s.lower * fm + s.diagonal * psi0 + s.upper * fp;
  }
  return std::abs(lhs + 2.0 * delta2);
}

}  // namespace qlag
