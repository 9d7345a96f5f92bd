// Phase-space Metropolis sampling under the commutation umbrella weight.
#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qlag/commute.hpp"
#include "qlag/core.hpp"
#include "qlag/symmetry.hpp"

namespace qlag {

struct McParams {
  std::size_t n_equil = 10000;   // sweeps discarded before sampling
  std::size_t n_sample = 100000; // sampled sweeps
  double dq_max = 0.2;
  double dp_max = 1.0;
  std::uint64_t seed = 1;
  std::size_t block_count = 32;
  std::size_t n_bins = 200;      // density histogram over [-L/2, L/2]

  void validate() const;
};

/// Log of the umbrella weight: sum_j Re w(q_j, p_j | neighbours) - beta U_nnn.
/// Empty when any singlet lies outside the table support.
std::optional<double> try_umbrella_log_weight(const PhaseConfig& config, const CommutationTable& table);
double umbrella_log_weight(const PhaseConfig& config, const CommutationTable& table);

/// Metropolis test: accept when u < exp(delta_log_weight), u uniform in [0, 1).
bool metropolis_accept(double delta_log_weight, double u);

/// Chain position with the cached singlet values w_j.
struct ChainState {
  PhaseConfig config;
  std::vector<std::complex<double>> w;
  double nnn = 0.0;
  double log_weight = 0.0;
};

ChainState make_chain_state(PhaseConfig config, const CommutationTable& table);

/// Evenly spaced particles at separation r_e about the trap centre, at rest.
PhaseConfig lattice_config(std::size_t n, const ModelParams& params);

struct MoveStats {
  std::uint64_t attempted = 0;
  std::uint64_t accepted = 0;
  std::uint64_t out_of_support = 0;  // includes ordering and wall violations

  double acceptance() const {
    return attempted == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(attempted);
  }
  MoveStats& operator+=(const MoveStats& other);
};

/// One sweep: a trial move of every particle in turn, each shifting q_j and p_j
/// uniformly within (+-dq_max, +-dp_max).
MoveStats metropolis_sweep(ChainState& state, const CommutationTable& table, const McParams& mc,
                           std::mt19937_64& rng);

enum class Variant {
  classical_distinguishable,
  classical_boson,
  classical_fermion,
  quantum_distinguishable,
  quantum_boson,
  quantum_fermion,
};
inline constexpr std::size_t kVariantCount = 6;
inline constexpr std::array<Variant, kVariantCount> kAllVariants{
    Variant::classical_distinguishable, Variant::classical_boson, Variant::classical_fermion,
    Variant::quantum_distinguishable,   Variant::quantum_boson,   Variant::quantum_fermion};

std::string variant_name(Variant v);
bool is_quantum(Variant v);
Statistics variant_statistics(Variant v);

/// Complex reweighting factor of each variant for the current chain state.
std::array<std::complex<double>, kVariantCount> variant_weights(const ChainState& state,
                                                                const CommutationTable& table);

/// Six-way block accumulator for the energy and the density histogram.
class AverageSet {
public:
  AverageSet(std::size_t n_blocks, std::size_t samples_per_block, std::size_t n_bins, double half_span);

  /// Adds one sample. The observable is the full classical H(q, p).
  void accumulate(const ChainState& state, const CommutationTable& table);
  /// Adds one sample with explicit observable and variant weights.
  void accumulate(double observable, std::span<const double> positions,
                  const std::array<std::complex<double>, kVariantCount>& weights);

  std::size_t completed_blocks() const;
  std::size_t n_blocks() const { return blocks_.size(); }
  std::size_t n_bins() const { return n_bins_; }
  double half_span() const { return half_span_; }

  struct Block {
    std::array<std::complex<double>, kVariantCount> num{};
    std::array<std::complex<double>, kVariantCount> den{};
    std::vector<double> hist;  // [variant][bin], real part of the weighted counts
    std::size_t samples = 0;
  };
  const std::vector<Block>& blocks() const { return blocks_; }

private:
  std::size_t samples_per_block_;
  std::size_t n_bins_;
  double half_span_;
  std::size_t current_ = 0;
  std::vector<Block> blocks_;
};

struct VariantResult {
  Variant variant;
  double mean = 0.0;                    // Re(num) / Re(den)
  double error = 0.0;                   // twice the standard error over blocks
  std::complex<double> denominator{};   // per-sample mean of the weight
  double denominator_imag_error = 0.0;  // twice the standard error of Im(den)
};

struct DensityProfile {
  std::vector<double> centers;
  double bin_width = 0.0;
  // [variant][bin] number density and twice its standard error.
  std::array<std::vector<double>, kVariantCount> density;
  std::array<std::vector<double>, kVariantCount> error;
  // Per block densities, kept for derived statistics.
  std::array<std::vector<std::vector<double>>, kVariantCount> block_density;
};

struct Report {
  std::array<VariantResult, kVariantCount> results;
  DensityProfile density;
  std::size_t n_blocks = 0;
  std::size_t samples = 0;

  const VariantResult& operator[](Variant v) const { return results[static_cast<std::size_t>(v)]; }
};

/// Throws ParameterError when fewer than all configured blocks are complete.
Report finalize(const AverageSet& acc);

struct SimulationResult {
  Report report;
  MoveStats equilibration;
  MoveStats sampling;
  double seconds = 0.0;
};

/// Equilibrates and samples one chain of n particles.
SimulationResult run_simulation(const CommutationTable& table, std::size_t n_particles,
                                const McParams& mc, std::optional<PhaseConfig> start = std::nullopt);

/// Local field estimate of the quantum ground state energy of an n-particle chain.
double ground_state_estimate(std::size_t n_particles, const ModelParams& params);

enum class PairRange { all_pairs, nearest_neighbors };

struct ClassicalMinimum {
  double energy;
  std::vector<double> positions;
};

/// Minimum of the potential energy over ordered configurations, by Newton
/// descent from several lattice starts.
ClassicalMinimum classical_ground_energy(std::size_t n_particles, const ModelParams& params,
                                         PairRange range = PairRange::all_pairs);

/// CSV rows: variant, mean/hbar omega, error/hbar omega, Re den, Im den.
void write_averages_csv(const SimulationResult& result, const ModelParams& params,
                        std::size_t n_particles, const McParams& mc, const std::string& path);
/// CSV rows: bin centre, then density and error per variant.
void write_density_csv(const DensityProfile& profile, const std::string& path);

}  // namespace qlag
