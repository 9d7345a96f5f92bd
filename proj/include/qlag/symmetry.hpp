// Nearest-neighbour dimer-loop symmetrization function.
#pragma once

#include <complex>

#include "qlag/core.hpp"

namespace qlag {

enum class Statistics { distinguishable, boson, fermion };

/// +1 for bosons, -1 for fermions, 0 for distinguishable particles.
int exchange_sign(Statistics stats);

/// Pair transposition term sign * exp(i dq dp / hbar).
std::complex<double> dimer_loop(double dq, double dp, int sign, const ModelParams& params);

/// 1 + sum_j dimer_loop(q_{j+1} - q_j, p_{j+1} - p_j); identically 1 for
/// distinguishable particles.
std::complex<double> eta_nn(const PhaseConfig& config, Statistics stats, const ModelParams& params);

}  // namespace qlag
