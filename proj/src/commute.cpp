#include "qlag/commute.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/tools/minima.hpp>

#include "binary_io.hpp"
#include "parallel.hpp"
#include "qlag/errors.hpp"

namespace qlag {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const Complex kMissing{kNaN, kNaN};
// Spectral sums below this (relative to the scaled ground term) are flagged.
constexpr double kUnderflowFloor = 1e-280;

bool is_missing(const Complex& z) { return std::isnan(z.real()) || std::isnan(z.imag()); }

double wrap_toward(double value, double reference) {
  const double two_pi = 2.0 * std::numbers::pi;
  return value - two_pi * std::round((value - reference) / two_pi);
}

std::vector<double> trapezoid_weights(const SpatialGrid& grid) {
  std::vector<double> w(grid.n_points, grid.spacing());
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

// Takes the spectral sums S(q,p) * exp(-i p q / hbar), returns w with the phase
// unwrapped along p and the wall rows extrapolated.
Eigen::MatrixXcd log_of_sums(const Eigen::MatrixXcd& sums, double shift, bool extrapolate_walls) {
  const Eigen::Index nq = sums.rows();
  const Eigen::Index np = sums.cols();
  Eigen::MatrixXcd w(nq, np);
  for (Eigen::Index iq = 0; iq < nq; ++iq) {
    double last_phase = 0.0;
    bool have_phase = false;
    for (Eigen::Index ip = 0; ip < np; ++ip) {
      const Complex s = sums(iq, ip);
      const double mag = std::abs(s);
      if (!std::isfinite(mag) || mag < kUnderflowFloor) {
        w(iq, ip) = kMissing;
        continue;
      }
      double phase = std::arg(s);
      if (have_phase) phase = wrap_toward(phase, last_phase);
      last_phase = phase;
      have_phase = true;
      w(iq, ip) = {std::log(mag) + shift, phase};
    }
  }
  if (extrapolate_walls && nq >= 4) {
    w.row(0) = 2.0 * w.row(1) - w.row(2);
    w.row(nq - 1) = 2.0 * w.row(nq - 2) - w.row(nq - 3);
  }
  return w;
}

Eigen::MatrixXcd phase_kernel(const SpatialGrid& grid, const MomentumGrid& p_grid,
                              std::span<const double> weights, const ModelParams& params,
                              double sign) {
  const auto nr = static_cast<Eigen::Index>(grid.n_points);
  const auto np = static_cast<Eigen::Index>(p_grid.n_points);
  Eigen::MatrixXcd k(nr, np);
  for (Eigen::Index ir = 0; ir < nr; ++ir) {
    const double r = grid.node(static_cast<std::size_t>(ir));
    const double wr = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(ir)];
    for (Eigen::Index ip = 0; ip < np; ++ip)
      k(ir, ip) = wr * std::polar(1.0, sign * p_grid.node(static_cast<std::size_t>(ip)) * r / params.hbar);
  }
  return k;
}

// S(q,p) exp(-ipq/hbar) from wavefunctions on the grid (rows = states), their
// momentum projections (rows = states) and scaled Boltzmann factors.
Eigen::MatrixXcd spectral_sums(const Eigen::MatrixXd& phi, const Eigen::MatrixXcd& projections,
                               const Eigen::VectorXd& boltzmann, const SpatialGrid& grid,
                               const MomentumGrid& p_grid, const ModelParams& params) {
  Eigen::MatrixXcd sums =
      phi.transpose().cast<Complex>() * (boltzmann.cast<Complex>().asDiagonal() * projections);
  return sums.cwiseProduct(phase_kernel(grid, p_grid, {}, params, -1.0));
}

// Normalized Hermite functions h_0..h_{n-1} at x.
void hermite_functions(double x, std::span<double> out) {
  const double h0 = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
  out[0] = h0;
  if (out.size() > 1) out[1] = std::numbers::sqrt2 * x * h0;
  for (std::size_t n = 1; n + 1 < out.size(); ++n) {
    const double dn = static_cast<double>(n);
    out[n + 1] = std::sqrt(2.0 / (dn + 1.0)) * x * out[n] - std::sqrt(dn / (dn + 1.0)) * out[n - 1];
  }
}

}  // namespace

MomentumGrid make_momentum_grid(double beta, std::size_t n_points, const ModelParams& params,
                                double kinetic_cap) {
  if (n_points < 32) throw ParameterError("momentum grid needs at least 32 points");
  if (!(beta > 0) || !(kinetic_cap > 0)) throw ParameterError("beta and kinetic cap must be positive");
  return {std::sqrt(2.0 * params.mass * kinetic_cap / beta), n_points};
}

Complex momentum_projection(std::span<const double> phi, const SpatialGrid& grid, double p,
                            const ModelParams& params) {
  const auto w = trapezoid_weights(grid);
  Complex s{0.0, 0.0};
  for (std::size_t i = 0; i < grid.n_points; ++i)
    s += w[i] * phi[i] * std::polar(1.0, p * grid.node(i) / params.hbar);
  return s;
}

std::optional<Complex> combined_w_point(const EigenSet& eigs, double beta, double q, double p,
                                        const ModelParams& params) {
  const SpatialGrid& g = eigs.grid;
  if (q < g.r_lo || q > g.r_hi) throw DomainError("q outside the cell grid");
  const double x = (q - g.r_lo) / g.spacing();
  const std::size_t i0 = std::min(static_cast<std::size_t>(x), g.n_points - 2);
  const double f = x - static_cast<double>(i0);
  Complex sum{0.0, 0.0};
  for (std::size_t n = 0; n < eigs.n_states(); ++n) {
    const auto phi = eigs.state(n);
    const double at_q = (1.0 - f) * phi[i0] + f * phi[i0 + 1];
    sum += std::exp(-beta * (eigs.energies[n] - eigs.energies[0])) * at_q *
           momentum_projection(phi, g, p, params);
  }
  sum *= std::polar(1.0, -p * q / params.hbar);
  const double mag = std::abs(sum);
  if (!std::isfinite(mag) || mag < kUnderflowFloor) return std::nullopt;
  return Complex{std::log(mag) - beta * eigs.energies[0], std::arg(sum)};
}

Eigen::MatrixXcd combined_w_cell(const EigenSet& eigs, double beta, const MomentumGrid& p_grid,
                                 const ModelParams& params) {
  const auto ns = static_cast<Eigen::Index>(eigs.n_states());
  const auto nr = static_cast<Eigen::Index>(eigs.grid.n_points);
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      phi(eigs.wavefunctions.data(), ns, nr);
  const auto weights = trapezoid_weights(eigs.grid);
  const Eigen::MatrixXcd projections =
      phi.cast<Complex>() * phase_kernel(eigs.grid, p_grid, weights, params, 1.0);
  Eigen::VectorXd boltzmann(ns);
  for (Eigen::Index n = 0; n < ns; ++n)
    boltzmann(n) = std::exp(-beta * (eigs.energies[static_cast<std::size_t>(n)] - eigs.energies[0]));
  const Eigen::MatrixXcd sums = spectral_sums(phi, projections, boltzmann, eigs.grid, p_grid, params);
  return log_of_sums(sums, -beta * eigs.energies[0], true);
}

Eigen::MatrixXcd harmonic_w_cell(double r0, double u0, double big_omega, std::size_t n_states,
                                 const SpatialGrid& grid, double beta, const MomentumGrid& p_grid,
                                 const ModelParams& params) {
  if (!(big_omega > 0)) throw ParameterError("oscillator frequency must be positive");
  const auto ns = static_cast<Eigen::Index>(n_states);
  const auto nr = static_cast<Eigen::Index>(grid.n_points);
  const auto np = static_cast<Eigen::Index>(p_grid.n_points);
  const double ell = std::sqrt(params.hbar / (params.mass * big_omega));
  std::vector<double> h(n_states);

  Eigen::MatrixXd phi(ns, nr);
  for (Eigen::Index ir = 0; ir < nr; ++ir) {
    hermite_functions((grid.node(static_cast<std::size_t>(ir)) - r0) / ell, h);
    for (Eigen::Index n = 0; n < ns; ++n) phi(n, ir) = h[static_cast<std::size_t>(n)] / std::sqrt(ell);
  }
  // int exp(ipr/hbar) phi_n = exp(ipr0/hbar) sqrt(2 pi ell) i^n h_n(p ell / hbar)
  Eigen::MatrixXcd projections(ns, np);
  const std::array<Complex, 4> i_pow{Complex{1, 0}, Complex{0, 1}, Complex{-1, 0}, Complex{0, -1}};
  for (Eigen::Index ip = 0; ip < np; ++ip) {
    const double p = p_grid.node(static_cast<std::size_t>(ip));
    hermite_functions(p * ell / params.hbar, h);
    const Complex shift = std::polar(std::sqrt(2.0 * std::numbers::pi * ell), p * r0 / params.hbar);
    for (Eigen::Index n = 0; n < ns; ++n)
      projections(n, ip) = shift * i_pow[static_cast<std::size_t>(n) % 4] * h[static_cast<std::size_t>(n)];
  }
  Eigen::VectorXd boltzmann(ns);
  const double tau = beta * params.hbar * big_omega;
  for (Eigen::Index n = 0; n < ns; ++n) boltzmann(n) = std::exp(-tau * static_cast<double>(n));
  const Eigen::MatrixXcd sums = spectral_sums(phi, projections, boltzmann, grid, p_grid, params);
  return log_of_sums(sums, -beta * (u0 + 0.5 * params.hbar * big_omega), false);
}

Complex harmonic_w_exact(double q, double p, double r0, double u0, double big_omega, double beta,
                         const ModelParams& params) {
  const double m = params.mass;
  const double hb = params.hbar;
  const double tau = beta * hb * big_omega;
  const double sh = std::sinh(tau);
  const double ch = std::cosh(tau);
  const double x = q - r0;
  const double a = m * big_omega * ch / (2.0 * hb * sh);
  const Complex b{m * big_omega * x / (hb * sh), p / hb};
  const double c = -m * big_omega * x * x * ch / (2.0 * hb * sh);
  const double log_pref =
      0.5 * std::log(m * big_omega / (2.0 * std::numbers::pi * hb * sh)) + 0.5 * std::log(std::numbers::pi / a);
  return log_pref + b * b / (4.0 * a) + c - Complex{0.0, p * x / hb} - beta * u0;
}

std::optional<HarmonicFit> fit_harmonic(const NeighborContext& ctx, const ModelParams& params) {
  const double lo = ctx.left ? *ctx.left + params.r_min : -params.half_span();
  const double hi = ctx.right ? *ctx.right - params.r_min : params.half_span();
  if (!(hi > lo)) return std::nullopt;
  auto u = [&](double r) { return local_field(r, ctx, params); };
  constexpr int kSamples = 400;
  int best = 0;
  double best_u = u(lo);
  for (int i = 1; i <= kSamples; ++i) {
    const double v = u(lo + (hi - lo) * i / kSamples);
    if (v < best_u) {
      best_u = v;
      best = i;
    }
  }
  if (best == 0 || best == kSamples) return std::nullopt;
  const double step = (hi - lo) / kSamples;
  const double a = lo + step * (best - 1);
  const double b = lo + step * (best + 1);
  const auto [r0, u0] = boost::math::tools::brent_find_minima(u, a, b, 40);
  const double curvature = local_field_d2(r0, ctx, params);
  if (!(curvature > 0)) return std::nullopt;
  return HarmonicFit{r0, u0, std::sqrt(curvature / params.mass)};
}

Complex& CommutationTable::at(const CellRef& c, std::size_t iq, std::size_t ip) {
  return const_cast<Complex&>(std::as_const(*this).at(c, iq, ip));
}

const Complex& CommutationTable::at(const CellRef& c, std::size_t iq, std::size_t ip) const {
  const std::size_t n = n_nbr();
  const std::size_t qp = iq * n_p() + ip;
  switch (c.kind) {
    case CellKind::interior:
      return interior[(qp * n + c.i) * n + c.k];
    case CellKind::terminal_left:
      return terminal_left[qp * n + c.i];
    case CellKind::terminal_right:
      break;
  }
  return terminal_right[qp * n + c.i];
}

NeighborContext CommutationTable::context(const CellRef& c) const {
  switch (c.kind) {
    case CellKind::interior:
      return NeighborContext::interior(neighbors.left(c.i), neighbors.right(c.k));
    case CellKind::terminal_left:
      return NeighborContext::right_only(neighbors.right(c.i));
    case CellKind::terminal_right:
      break;
  }
  return NeighborContext::left_only(neighbors.left(c.i));
}

std::optional<SpatialGrid> CommutationTable::q_grid(const CellRef& c) const {
  const NeighborContext ctx = context(c);
  if (ctx.is_interior() && !interior_feasible(*ctx.left, *ctx.right, params)) return std::nullopt;
  return band_grid(ctx, n_q, params);
}

bool CommutationTable::present(const CellRef& c) const {
  if (c.kind == CellKind::interior && !interior_feasible(neighbors.left(c.i), neighbors.right(c.k), params))
    return false;
  return !is_missing(at(c, n_q / 2, 0));
}

std::vector<CellRef> CommutationTable::cells() const {
  std::vector<CellRef> out;
  const std::size_t n = n_nbr();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) out.push_back({CellKind::interior, i, k});
  for (std::size_t i = 0; i < n; ++i) out.push_back({CellKind::terminal_left, i, 0});
  for (std::size_t i = 0; i < n; ++i) out.push_back({CellKind::terminal_right, i, 0});
  return out;
}

std::size_t CommutationTable::flagged_count() const {
  std::size_t flagged = 0;
  for (const CellRef& c : cells()) {
    if (!present(c)) continue;
    for (std::size_t iq = 0; iq < n_q; ++iq)
      for (std::size_t ip = 0; ip < n_p(); ++ip) flagged += is_missing(at(c, iq, ip)) ? 1 : 0;
  }
  return flagged;
}

std::size_t CommutationTable::node_count() const {
  const auto all = cells();
  return n_q * n_p() *
         static_cast<std::size_t>(std::count_if(all.begin(), all.end(), [&](const CellRef& c) { return present(c); }));
}

namespace {

template <typename CellFn>
CommutationTable build_with(const EigenTable& eigen, double beta, const MomentumGrid& p_grid,
                            unsigned threads, CellFn&& cell_values) {
  if (!(beta > 0)) throw ParameterError("beta must be positive");
  CommutationTable t;
  t.params = eigen.params;
  t.params.beta = beta;
  t.n_q = eigen.spec.n_r;
  t.neighbors = eigen.neighbors;
  t.p_grid = p_grid;
  t.kinetic_cap = beta * p_grid.p_max * p_grid.p_max / (2.0 * t.params.mass);
  const std::size_t n = t.n_nbr();
  const std::size_t per_cell = t.n_q * t.n_p();
  t.interior.assign(per_cell * n * n, kMissing);
  t.terminal_left.assign(per_cell * n, kMissing);
  t.terminal_right.assign(per_cell * n, kMissing);

  const auto all = t.cells();
  detail::parallel_for(all.size(), threads, [&](std::size_t job) {
    const CellRef& c = all[job];
    const std::optional<EigenSet>* eig = nullptr;
    switch (c.kind) {
      case CellKind::interior:
        eig = &eigen.cell(c.i, c.k);
        break;
      case CellKind::terminal_left:
        eig = &eigen.terminal_left[c.i];
        break;
      case CellKind::terminal_right:
        eig = &eigen.terminal_right[c.i];
        break;
    }
    if (!eig->has_value()) return;
    const std::optional<Eigen::MatrixXcd> w = cell_values(t.context(c), **eig, t.params);
    if (!w) return;
    for (std::size_t iq = 0; iq < t.n_q; ++iq)
      for (std::size_t ip = 0; ip < t.n_p(); ++ip)
        t.at(c, iq, ip) = (*w)(static_cast<Eigen::Index>(iq), static_cast<Eigen::Index>(ip));
  });
  return t;
}

}  // namespace

CommutationTable build_commutation_table(const EigenTable& eigen, double beta,
                                         const MomentumGrid& p_grid, unsigned threads) {
  return build_with(eigen, beta, p_grid, threads,
                    [&](const NeighborContext&, const EigenSet& eig, const ModelParams& p)
                        -> std::optional<Eigen::MatrixXcd> { return combined_w_cell(eig, beta, p_grid, p); });
}

CommutationTable harmonic_baseline_table(const EigenTable& eigen, double beta,
                                         const MomentumGrid& p_grid, unsigned threads) {
  return build_with(eigen, beta, p_grid, threads,
                    [&](const NeighborContext& ctx, const EigenSet& eig,
                        const ModelParams& p) -> std::optional<Eigen::MatrixXcd> {
                      const auto fit = fit_harmonic(ctx, p);
                      if (!fit) return std::nullopt;
                      return harmonic_w_cell(fit->r0, fit->u0, fit->big_omega, eig.n_states(), eig.grid,
                                             beta, p_grid, p);
                    });
}

CommutationTable classical_table(const EigenTable& eigen, double beta, const MomentumGrid& p_grid) {
  return build_with(eigen, beta, p_grid, 1,
                    [&](const NeighborContext& ctx, const EigenSet& eig,
                        const ModelParams& p) -> std::optional<Eigen::MatrixXcd> {
                      const auto nq = static_cast<Eigen::Index>(eig.grid.n_points);
                      const auto np = static_cast<Eigen::Index>(p_grid.n_points);
                      Eigen::MatrixXcd w(nq, np);
                      for (Eigen::Index iq = 0; iq < nq; ++iq) {
                        const double r = eig.grid.node(static_cast<std::size_t>(iq));
                        for (Eigen::Index ip = 0; ip < np; ++ip)
                          w(iq, ip) = -beta * singlet_hamiltonian(r, p_grid.node(static_cast<std::size_t>(ip)), ctx, p);
                      }
                      return w;
                    });
}

std::optional<Complex> try_interpolate_w(const CommutationTable& t, double q, double p,
                                         const NeighborContext& ctx) {
  const ModelParams& par = t.params;
  const std::size_t n = t.n_nbr();
  const double last = static_cast<double>(n - 1);
  constexpr double kSlack = 1e-9;

  // Fractional neighbour indices and the particle's band.
  std::array<double, 2> x{0.0, 0.0};
  std::size_t n_axes = 0;
  CellKind kind;
  double lo, hi;
  if (ctx.is_interior()) {
    kind = CellKind::interior;
    if (!interior_feasible(*ctx.left, *ctx.right, par)) return std::nullopt;
    x = {(*ctx.left - t.neighbors.left_lo) / t.neighbors.step,
         (*ctx.right - t.neighbors.right_lo) / t.neighbors.step};
    n_axes = 2;
    lo = *ctx.left + par.r_min;
    hi = *ctx.right - par.r_min;
  } else if (ctx.right) {
    kind = CellKind::terminal_left;
    x[0] = (*ctx.right - t.neighbors.right_lo) / t.neighbors.step;
    n_axes = 1;
    lo = -par.half_span();
    hi = *ctx.right - par.r_min;
  } else if (ctx.left) {
    kind = CellKind::terminal_right;
    x[0] = (*ctx.left - t.neighbors.left_lo) / t.neighbors.step;
    n_axes = 1;
    lo = *ctx.left + par.r_min;
    hi = par.half_span();
  } else {
    return std::nullopt;
  }
  for (std::size_t a = 0; a < n_axes; ++a) {
    if (x[a] < -kSlack || x[a] > last + kSlack) return std::nullopt;
    x[a] = std::clamp(x[a], 0.0, last);
  }
  if (q < lo || q > hi) return std::nullopt;
  const double xq = (q - lo) / (hi - lo) * static_cast<double>(t.n_q - 1);
  const double xp = std::abs(p) / t.p_grid.spacing();
  if (xp > static_cast<double>(t.n_p() - 1) * (1.0 + kSlack)) return std::nullopt;

  auto split = [](double v, std::size_t size) {
    const std::size_t i0 = std::min(static_cast<std::size_t>(std::max(v, 0.0)), size - 2);
    return std::pair{i0, std::clamp(v - static_cast<double>(i0), 0.0, 1.0)};
  };
  const auto [iq0, fq] = split(xq, t.n_q);
  const auto [ip0, fp] = split(xp, t.n_p());
  const auto [ia0, fa] = split(x[0], n);
  const auto [ib0, fb] = n_axes == 2 ? split(x[1], n) : std::pair<std::size_t, double>{0, 0.0};

  Complex sum{0.0, 0.0};
  for (int corner = 0; corner < 16; ++corner) {
    const int dq = corner & 1, dp = (corner >> 1) & 1, da = (corner >> 2) & 1, db = (corner >> 3) & 1;
    if (n_axes == 1 && db) continue;
    const double weight = (dq ? fq : 1 - fq) * (dp ? fp : 1 - fp) * (da ? fa : 1 - fa) *
                          (n_axes == 2 ? (db ? fb : 1 - fb) : 1.0);
    if (weight == 0.0) continue;
    const CellRef c{kind, ia0 + static_cast<std::size_t>(da), ib0 + static_cast<std::size_t>(db)};
    if (kind == CellKind::interior && !interior_feasible(t.neighbors.left(c.i), t.neighbors.right(c.k), par))
      return std::nullopt;
    const Complex v = t.at(c, iq0 + static_cast<std::size_t>(dq), ip0 + static_cast<std::size_t>(dp));
    if (is_missing(v)) return std::nullopt;
    sum += weight * v;
  }
  return p < 0 ? std::conj(sum) : sum;
}

Complex interpolate_w(const CommutationTable& table, double q, double p, const NeighborContext& ctx) {
  if (auto w = try_interpolate_w(table, q, p, ctx)) return *w;
  throw OutOfSupport("phase-space point outside the commutation table support");
}

namespace {

constexpr std::string_view kTableMagic = "QLAG-CMT1";

void write_values(detail::BinaryWriter& w, const std::vector<Complex>& values) {
  for (const Complex& z : values) {
    w.f64(z.real());
    w.f64(z.imag());
  }
}

void read_values(detail::BinaryReader& r, std::vector<Complex>& values, std::size_t count) {
  values.resize(count);
  for (Complex& z : values) {
    const double re = r.f64();
    z = {re, r.f64()};
  }
}

}  // namespace

void write_commutation_table(const CommutationTable& t, const std::string& path) {
  detail::BinaryWriter w(path);
  w.magic(kTableMagic);
  const auto& p = t.params;
  for (double v : {p.beta, p.L, p.r_min, p.hbar, p.omega, p.epsilon, p.r_e, p.mass, p.pair_share,
                   t.kinetic_cap, t.p_grid.p_max})
    w.f64(v);
  for (std::size_t d : {t.n_q, t.n_p(), t.n_nbr()}) w.u32(static_cast<std::uint32_t>(d));
  write_values(w, t.interior);
  write_values(w, t.terminal_left);
  write_values(w, t.terminal_right);
  w.finish();
}

CommutationTable read_commutation_table(const std::string& path, std::optional<double> expected_beta) {
  detail::BinaryReader r(path);
  r.expect_magic(kTableMagic);
  CommutationTable t;
  auto& p = t.params;
  for (double* v : {&p.beta, &p.L, &p.r_min, &p.hbar, &p.omega, &p.epsilon, &p.r_e, &p.mass,
                    &p.pair_share, &t.kinetic_cap, &t.p_grid.p_max})
    *v = r.f64();
  try {
    p.validate();
  } catch (const ParameterError& e) {
    throw FormatError(std::string("commutation table header: ") + e.what());
  }
  if (expected_beta && std::abs(*expected_beta - p.beta) > 1e-12 * std::abs(p.beta))
    throw FormatError("commutation table beta does not match the requested temperature");
  t.n_q = r.u32();
  t.p_grid.n_points = r.u32();
  const std::size_t n = r.u32();
  if (t.n_q < 16 || t.p_grid.n_points < 2 || n < 2 || !(t.p_grid.p_max > 0))
    throw FormatError("commutation table header: inconsistent dimensions");
  t.neighbors = make_neighbor_grids(p, n);
  const std::size_t per_cell = t.n_q * t.n_p();
  read_values(r, t.interior, per_cell * n * n);
  read_values(r, t.terminal_left, per_cell * n);
  read_values(r, t.terminal_right, per_cell * n);
  r.expect_end();
  return t;
}

std::vector<Complex> momentum_marginal(const CommutationTable& t, const CellRef& cell) {
  const auto grid = t.q_grid(cell);
  if (!grid || !t.present(cell)) throw ParameterError("marginal requested for an absent cell");
  std::vector<Complex> out(t.n_p(), Complex{0.0, 0.0});
  for (std::size_t ip = 0; ip < t.n_p(); ++ip) {
    // Wall nodes carry zero weight; every eigenfunction vanishes there.
    for (std::size_t iq = 1; iq + 1 < t.n_q; ++iq) {
      const Complex w = t.at(cell, iq, ip);
      if (!is_missing(w)) out[ip] += std::exp(w);
    }
    out[ip] *= grid->spacing();
  }
  return out;
}

std::vector<double> position_marginal(const CommutationTable& t, const CellRef& cell) {
  if (!t.present(cell)) throw ParameterError("marginal requested for an absent cell");
  const double dp = t.p_grid.spacing();
  std::vector<double> out(t.n_q, 0.0);
  for (std::size_t iq = 1; iq + 1 < t.n_q; ++iq) {
    double s = 0.0;
    for (std::size_t ip = 0; ip < t.n_p(); ++ip) {
      const Complex w = t.at(cell, iq, ip);
      if (is_missing(w)) continue;
      const double edge = (ip == 0 || ip + 1 == t.n_p()) ? 0.5 : 1.0;
      s += edge * std::exp(w).real();
    }
    // The integral over negative p doubles the real part.
    out[iq] = 2.0 * s * dp / (2.0 * std::numbers::pi * t.params.hbar);
  }
  return out;
}

}  // namespace qlag
