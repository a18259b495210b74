#include "qsc/renyi.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace qsc {

double spectral_entropy(std::span<const double> eigenvalues, double alpha) {
  if (!(alpha > 0.0)) throw ValidationError("Renyi order must be positive");
  // Eigenvalues at the solver's noise floor count as zero.
  double top = 0.0;
  for (double x : eigenvalues) top = std::max(top, x);
  const double floor = 1e-14 * std::max(top, 1.0);
  double s = 0.0;
  if (alpha == 1.0) {
    for (double x : eigenvalues)
      if (x > floor) s -= x * std::log2(x);
  } else if (std::abs(alpha - 1.0) < 0.25) {
    // Tr rho^alpha - 1 accumulated through expm1 keeps full precision as alpha -> 1.
    double excess = -1.0;
    double shift = 0.0;
    for (double x : eigenvalues)
      if (x > floor) {
        excess += x;
        shift += x * std::expm1((alpha - 1.0) * std::log(x));
      }
    s = std::log1p(excess + shift) / (std::log(2.0) * (1.0 - alpha));
  } else {
    double tr = 0.0;
    for (double x : eigenvalues)
      if (x > floor) tr += std::pow(x, alpha);
    s = std::log2(tr) / (1.0 - alpha);
  }
  // Rounding can leave a pure spectrum slightly below zero.
  return std::max(s, 0.0);
}

double spectral_entropy(const RealVector& eigenvalues, double alpha) {
  return spectral_entropy(std::span<const double>(eigenvalues.data(), eigenvalues.size()), alpha);
}

EntropyValue von_neumann_entropy(const DensityMatrix& rho) {
  return {spectral_entropy(rho.spectrum(), 1.0), std::nullopt};
}

EntropyValue renyi_entropy(const DensityMatrix& rho, double alpha) {
  if (!(alpha > 0.0)) throw ValidationError("renyi_entropy: alpha must be > 0");
  if (alpha == 1.0) return von_neumann_entropy(rho);
  return {spectral_entropy(rho.spectrum(), alpha), alpha};
}

double dam_hayden_gap(const DensityMatrix& rho, const DensityMatrix& sigma, double beta) {
  if (!(beta > 0.5 && beta < 1.0)) throw ValidationError("dam_hayden_gap: beta must lie in (1/2, 1)");
  const double alpha = beta / (2.0 * beta - 1.0);
  const double f = fidelity(rho, sigma);
  const double coeff = 2.0 * beta / (1.0 - beta);
  return renyi_entropy(rho, beta).value - renyi_entropy(sigma, alpha).value - coeff * std::log2(f);
}

double g_alpha(const DensityMatrix& sigma, int n, double alpha) {
  if (!(alpha > 1.0)) throw ValidationError("g_alpha: alpha must be > 1");
  if (n < 1) throw ValidationError("g_alpha: n must be positive");
  double tr = 0.0;
  for (double x : sigma.spectrum())
    if (x > 0.0) tr += std::pow(x, alpha);
  return std::log2(tr) / n;
}

}  // namespace qsc
