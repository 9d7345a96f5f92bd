#include "qlag/monte_carlo.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "qlag/errors.hpp"

namespace qlag {

void McParams::validate() const {
  if (n_sample == 0) throw ParameterError("n_sample must be positive");
  if (block_count < 2) throw ParameterError("block_count must be at least 2");
  if (n_sample < block_count) throw ParameterError("n_sample must be at least block_count");
  if (!(dq_max >= 0) || !(dp_max >= 0)) throw ParameterError("move sizes must be non-negative");
  if (n_bins == 0) throw ParameterError("n_bins must be positive");
}

std::optional<double> try_umbrella_log_weight(const PhaseConfig& config, const CommutationTable& table) {
  double total = -table.params.beta * nnn_potential(config, table.params);
  for (std::size_t j = 0; j < config.size(); ++j) {
    const auto w = try_interpolate_w(table, config.positions[j], config.momenta[j], config.neighbors(j));
    if (!w) return std::nullopt;
    total += w->real();
  }
  return total;
}

double umbrella_log_weight(const PhaseConfig& config, const CommutationTable& table) {
  if (auto v = try_umbrella_log_weight(config, table)) return *v;
  throw OutOfSupport("configuration outside the commutation table support");
}

bool metropolis_accept(double delta_log_weight, double u) {
  return delta_log_weight >= 0.0 || u < std::exp(delta_log_weight);
}

ChainState make_chain_state(PhaseConfig config, const CommutationTable& table) {
  config.validate(table.params);
  ChainState s;
  s.w.resize(config.size());
  for (std::size_t j = 0; j < config.size(); ++j)
    s.w[j] = interpolate_w(table, config.positions[j], config.momenta[j], config.neighbors(j));
  s.nnn = nnn_potential(config, table.params);
  s.log_weight = -table.params.beta * s.nnn;
  for (const auto& w : s.w) s.log_weight += w.real();
  s.config = std::move(config);
  return s;
}

PhaseConfig lattice_config(std::size_t n, const ModelParams& params) {
  PhaseConfig c;
  for (std::size_t j = 0; j < n; ++j)
    c.positions.push_back(params.r_e * (static_cast<double>(j) - 0.5 * static_cast<double>(n - 1)));
  c.momenta.assign(n, 0.0);
  return c;
}

MoveStats& MoveStats::operator+=(const MoveStats& other) {
  attempted += other.attempted;
  accepted += other.accepted;
  out_of_support += other.out_of_support;
  return *this;
}

MoveStats metropolis_sweep(ChainState& state, const CommutationTable& table, const McParams& mc,
                           std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  MoveStats stats;
  auto& q = state.config.positions;
  auto& p = state.config.momenta;
  const std::size_t n = q.size();
  const double half = table.params.half_span();
  std::array<std::complex<double>, 3> trial_w{};

  for (std::size_t j = 0; j < n; ++j) {
    ++stats.attempted;
    const double q_new = q[j] + mc.dq_max * (2.0 * unit(rng) - 1.0);
    const double p_new = p[j] + mc.dp_max * (2.0 * unit(rng) - 1.0);
    const double u = unit(rng);
    if (std::abs(q_new) > half || (j > 0 && !(q_new > q[j - 1])) || (j + 1 < n && !(q_new < q[j + 1]))) {
      ++stats.out_of_support;
      continue;
    }
    const double q_old = q[j];
    const double p_old = p[j];
    q[j] = q_new;
    p[j] = p_new;

    const std::size_t first = j > 0 ? j - 1 : 0;
    const std::size_t last = std::min(j + 1, n - 1);
    bool inside = true;
    double delta = 0.0;
    for (std::size_t k = first; k <= last; ++k) {
      const auto w = try_interpolate_w(table, q[k], p[k], state.config.neighbors(k));
      if (!w) {
        inside = false;
        break;
      }
      trial_w[k - first] = *w;
      delta += w->real() - state.w[k].real();
    }
    if (!inside) {
      q[j] = q_old;
      p[j] = p_old;
      ++stats.out_of_support;
      continue;
    }
    const double nnn_new = nnn_potential(q, table.params);
    delta -= table.params.beta * (nnn_new - state.nnn);

    if (metropolis_accept(delta, u)) {
      ++stats.accepted;
      for (std::size_t k = first; k <= last; ++k) state.w[k] = trial_w[k - first];
      state.nnn = nnn_new;
      state.log_weight += delta;
    } else {
      q[j] = q_old;
      p[j] = p_old;
    }
  }
  return stats;
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::classical_distinguishable:
      return "classical_distinguishable";
    case Variant::classical_boson:
      return "classical_boson";
    case Variant::classical_fermion:
      return "classical_fermion";
    case Variant::quantum_distinguishable:
      return "quantum_distinguishable";
    case Variant::quantum_boson:
      return "quantum_boson";
    case Variant::quantum_fermion:
      break;
  }
  return "quantum_fermion";
}

bool is_quantum(Variant v) {
  return v == Variant::quantum_distinguishable || v == Variant::quantum_boson ||
         v == Variant::quantum_fermion;
}

Statistics variant_statistics(Variant v) {
  switch (v) {
    case Variant::classical_boson:
    case Variant::quantum_boson:
      return Statistics::boson;
    case Variant::classical_fermion:
    case Variant::quantum_fermion:
      return Statistics::fermion;
    default:
      return Statistics::distinguishable;
  }
}

std::array<std::complex<double>, kVariantCount> variant_weights(const ChainState& state,
                                                                const CommutationTable& table) {
  const ModelParams& par = table.params;
  const PhaseConfig& c = state.config;
  double phase = 0.0;
  double log_ratio = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    phase += state.w[j].imag();
    log_ratio += -par.beta * singlet_hamiltonian(c.positions[j], c.momenta[j], c.neighbors(j), par) -
                 state.w[j].real();
  }
  const std::complex<double> quantum = std::polar(1.0, phase);
  const double classical = std::exp(log_ratio);
  std::array<std::complex<double>, kVariantCount> out{};
  for (std::size_t v = 0; v < kVariantCount; ++v) {
    const Variant var = kAllVariants[v];
    const std::complex<double> eta = eta_nn(c, variant_statistics(var), par);
    out[v] = (is_quantum(var) ? quantum : std::complex<double>{classical, 0.0}) * eta;
  }
  return out;
}

AverageSet::AverageSet(std::size_t n_blocks, std::size_t samples_per_block, std::size_t n_bins,
                       double half_span)
    : samples_per_block_(samples_per_block), n_bins_(n_bins), half_span_(half_span) {
  if (n_blocks == 0 || samples_per_block == 0 || n_bins == 0)
    throw ParameterError("accumulator sizes must be positive");
  blocks_.resize(n_blocks);
  for (auto& b : blocks_) b.hist.assign(kVariantCount * n_bins, 0.0);
}

void AverageSet::accumulate(const ChainState& state, const CommutationTable& table) {
  accumulate(classical_hamiltonian(state.config, table.params), state.config.positions,
             variant_weights(state, table));
}

void AverageSet::accumulate(double observable, std::span<const double> positions,
                            const std::array<std::complex<double>, kVariantCount>& weights) {
  if (current_ >= blocks_.size()) throw ParameterError("accumulator is full");
  Block& b = blocks_[current_];
  const double width = 2.0 * half_span_ / static_cast<double>(n_bins_);
  for (std::size_t v = 0; v < kVariantCount; ++v) {
    b.num[v] += observable * weights[v];
    b.den[v] += weights[v];
    for (double x : positions) {
      const auto bin = static_cast<std::size_t>(
          std::clamp((x + half_span_) / width, 0.0, static_cast<double>(n_bins_ - 1)));
      b.hist[v * n_bins_ + bin] += weights[v].real();
    }
  }
  if (++b.samples == samples_per_block_) ++current_;
}

std::size_t AverageSet::completed_blocks() const { return current_; }

namespace {

double twice_sem(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  if (values.size() < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return 2.0 * std::sqrt(ss / (n - 1.0) / n);
}

}  // namespace

Report finalize(const AverageSet& acc) {
  if (acc.completed_blocks() < acc.n_blocks()) {
    std::ostringstream os;
    os << "only " << acc.completed_blocks() << " of " << acc.n_blocks() << " blocks completed";
    throw ParameterError(os.str());
  }
  const auto& blocks = acc.blocks();
  const std::size_t nb = blocks.size();
  const std::size_t n_bins = acc.n_bins();
  Report r;
  r.n_blocks = nb;
  for (const auto& b : blocks) r.samples += b.samples;

  DensityProfile& d = r.density;
  d.bin_width = 2.0 * acc.half_span() / static_cast<double>(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i)
    d.centers.push_back(-acc.half_span() + (static_cast<double>(i) + 0.5) * d.bin_width);

  for (std::size_t v = 0; v < kVariantCount; ++v) {
    std::complex<double> num{}, den{};
    std::vector<double> block_means, block_imag;
    std::vector<double> hist(n_bins, 0.0);
    for (const auto& b : blocks) {
      num += b.num[v];
      den += b.den[v];
      block_means.push_back(b.num[v].real() / b.den[v].real());
      block_imag.push_back(b.den[v].imag() / static_cast<double>(b.samples));
      std::vector<double> bd(n_bins);
      for (std::size_t i = 0; i < n_bins; ++i) {
        hist[i] += b.hist[v * n_bins + i];
        bd[i] = b.hist[v * n_bins + i] / (b.den[v].real() * d.bin_width);
      }
      d.block_density[v].push_back(std::move(bd));
    }
    VariantResult& res = r.results[v];
    res.variant = kAllVariants[v];
    res.mean = num.real() / den.real();
    res.error = twice_sem(block_means);
    res.denominator = den / static_cast<double>(r.samples);
    res.denominator_imag_error = twice_sem(block_imag);

    d.density[v].resize(n_bins);
    d.error[v].resize(n_bins);
    std::vector<double> column(nb);
    for (std::size_t i = 0; i < n_bins; ++i) {
      d.density[v][i] = hist[i] / (den.real() * d.bin_width);
      for (std::size_t b = 0; b < nb; ++b) column[b] = d.block_density[v][b][i];
      d.error[v][i] = twice_sem(column);
    }
  }
  return r;
}

SimulationResult run_simulation(const CommutationTable& table, std::size_t n_particles,
                                const McParams& mc, std::optional<PhaseConfig> start) {
  mc.validate();
  if (n_particles < 2) throw ParameterError("simulation needs at least two particles");
  const auto t0 = std::chrono::steady_clock::now();
  ChainState state = make_chain_state(start ? *start : lattice_config(n_particles, table.params), table);
  if (state.config.size() != n_particles) throw ParameterError("start configuration has the wrong size");
  std::mt19937_64 rng(mc.seed);
  SimulationResult out;
  for (std::size_t s = 0; s < mc.n_equil; ++s) out.equilibration += metropolis_sweep(state, table, mc, rng);

  const std::size_t per_block = mc.n_sample / mc.block_count;
  AverageSet acc(mc.block_count, per_block, mc.n_bins, table.params.half_span());
  for (std::size_t s = 0; s < per_block * mc.block_count; ++s) {
    out.sampling += metropolis_sweep(state, table, mc, rng);
    acc.accumulate(state, table);
  }
  out.report = finalize(acc);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

double ground_state_estimate(std::size_t n_particles, const ModelParams& p) {
  if (n_particles < 2) throw ParameterError("ground state estimate needs at least two particles");
  const double n = static_cast<double>(n_particles);
  const double w2 = p.omega * p.omega;
  const double lj2 = p.omega_lj() * p.omega_lj();
  return -(n - 1.0) * p.epsilon + 0.5 * (n - 2.0) * p.hbar * std::sqrt(w2 + lj2) +
         p.hbar * std::sqrt(w2 + 0.5 * lj2);
}

namespace {

struct PotentialDerivs {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

PotentialDerivs chain_potential(const Eigen::VectorXd& q, const ModelParams& p, PairRange range) {
  const Eigen::Index n = q.size();
  PotentialDerivs d;
  d.grad = Eigen::VectorXd::Zero(n);
  d.hess = Eigen::MatrixXd::Zero(n, n);
  const double k = p.mass * p.omega * p.omega;
  for (Eigen::Index j = 0; j < n; ++j) {
    d.value += 0.5 * k * q(j) * q(j);
    d.grad(j) += k * q(j);
    d.hess(j, j) += k;
    const Eigen::Index k_end = range == PairRange::all_pairs ? n : std::min<Eigen::Index>(j + 2, n);
    for (Eigen::Index l = j + 1; l < k_end; ++l) {
      const double r = q(l) - q(j);
      d.value += lj_pair(r, p);
      const double g = lj_pair_d1(r, p);
      const double h = lj_pair_d2(r, p);
      d.grad(l) += g;
      d.grad(j) -= g;
      d.hess(l, l) += h;
      d.hess(j, j) += h;
      d.hess(j, l) -= h;
      d.hess(l, j) -= h;
    }
  }
  return d;
}

bool ordered(const Eigen::VectorXd& q) {
  for (Eigen::Index j = 1; j < q.size(); ++j)
    if (!(q(j) > q(j - 1))) return false;
  return true;
}

}  // namespace

ClassicalMinimum classical_ground_energy(std::size_t n_particles, const ModelParams& p, PairRange range) {
  if (n_particles < 2) throw ParameterError("classical minimum needs at least two particles");
  const auto n = static_cast<Eigen::Index>(n_particles);
  std::optional<ClassicalMinimum> best;
  double best_seen = std::numeric_limits<double>::infinity();
  for (double spacing : {0.85, 0.95, 1.0, 1.05, 1.15}) {
    Eigen::VectorXd q(n);
    for (Eigen::Index j = 0; j < n; ++j) q(j) = spacing * p.r_e * (static_cast<double>(j) - 0.5 * static_cast<double>(n - 1));
    PotentialDerivs d = chain_potential(q, p, range);
    bool converged = false;
    for (int it = 0; it < 500; ++it) {
      if (d.grad.lpNorm<Eigen::Infinity>() < 1e-11 * p.epsilon / p.r_e) {
        converged = true;
        break;
      }
      // Newton step with the Hessian spectrum floored, which also handles the
      // translational zero mode of an untrapped chain.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d.hess);
      Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double lambda = std::max(std::abs(es.eigenvalues()(i)), 1e-8 * p.epsilon);
        const Eigen::VectorXd v = es.eigenvectors().col(i);
        step -= v.dot(d.grad) / lambda * v;
      }
      double t = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
        const Eigen::VectorXd trial = q + t * step;
        if (!ordered(trial)) continue;
        PotentialDerivs dt = chain_potential(trial, p, range);
        if (dt.value <= d.value) {
          q = trial;
          d = std::move(dt);
          moved = true;
          break;
        }
      }
      if (!moved) {
        converged = d.grad.lpNorm<Eigen::Infinity>() < 1e-7 * p.epsilon / p.r_e;
        break;
      }
    }
    best_seen = std::min(best_seen, d.value);
    if (converged && (!best || d.value < best->energy))
      best = ClassicalMinimum{d.value, std::vector<double>(q.data(), q.data() + n)};
  }
  if (!best) {
    std::ostringstream os;
    os << "classical minimisation did not converge; best value " << best_seen;
    throw ConvergenceError(os.str(), {best_seen});
  }
  return *best;
}

void write_averages_csv(const SimulationResult& result, const ModelParams& params,
                        std::size_t n_particles, const McParams& mc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot open " + path + " for writing");
  out << std::setprecision(10);
  out << "variant,beta_hbar_omega,n_particles,energy_hbar_omega,error_hbar_omega,"
         "denominator_re,denominator_im,denominator_im_error,acceptance,blocks,samples,seed\n";
  const double unit = params.hbar_omega();
  for (const auto& r : result.report.results) {
    out << variant_name(r.variant) << ',' << params.beta_hbar_omega() << ',' << n_particles << ','
        << r.mean / unit << ',' << r.error / unit << ',' << r.denominator.real() << ','
        << r.denominator.imag() << ',' << r.denominator_imag_error << ',' << result.sampling.acceptance()
        << ',' << result.report.n_blocks << ',' << result.report.samples << ',' << mc.seed << '\n';
  }
  if (!out) throw ParameterError("write failed for " + path);
}

void write_density_csv(const DensityProfile& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot open " + path + " for writing");
  out << std::setprecision(10) << "x";
  for (Variant v : kAllVariants) out << ',' << variant_name(v) << ',' << variant_name(v) << "_error";
  out << '\n';
  for (std::size_t i = 0; i < d.centers.size(); ++i) {
    out << d.centers[i];
    for (std::size_t v = 0; v < kVariantCount; ++v) out << ',' << d.density[v][i] << ',' << d.error[v][i];
    out << '\n';
  }
  if (!out) throw ParameterError("write failed for " + path);
}

}  // namespace qlag
