#include "qlag/symmetry.hpp"

namespace qlag {

int exchange_sign(Statistics stats) {
  switch (stats) {
    case Statistics::boson:
      return 1;
    case Statistics::fermion:
      return -1;
    case Statistics::distinguishable:
      break;
  }
  return 0;
}

std::complex<double> dimer_loop(double dq, double dp, int sign, const ModelParams& params) {
  return static_cast<double>(sign) * std::polar(1.0, dq * dp / params.hbar);
}

std::complex<double> eta_nn(const PhaseConfig& config, Statistics stats, const ModelParams& params) {
  const int sign = exchange_sign(stats);
  std::complex<double> eta{1.0, 0.0};
  if (sign == 0) return eta;
  const auto& q = config.positions;
  const auto& p = config.momenta;
  for (std::size_t j = 0; j + 1 < q.size(); ++j)
    eta += dimer_loop(q[j + 1] - q[j], p[j + 1] - p[j], sign, params);
  return eta;
}

}  // namespace qlag
