#pragma once

// Entropies in bits. S_alpha(rho) = log2(Tr rho^alpha) / (1 - alpha), with
// alpha == 1 dispatching to the von Neumann entropy.

#include <optional>
#include <span>

#include "qsc/qcore.hpp"

namespace qsc {

struct EntropyValue {
  double value = 0.0;               // bits
  std::optional<double> alpha;      // empty for von Neumann

  bool von_neumann() const { return !alpha.has_value(); }
};

EntropyValue von_neumann_entropy(const DensityMatrix& rho);
EntropyValue renyi_entropy(const DensityMatrix& rho, double alpha);

/// Entropy of a (clipped, possibly unnormalized-by-noise) spectrum.
/// alpha == 1 gives the Shannon entropy.
double spectral_entropy(std::span<const double> eigenvalues, double alpha);
double spectral_entropy(const RealVector& eigenvalues, double alpha);

/// S_beta(rho) - S_alpha(sigma) - (2 beta / (1 - beta)) log2 F(rho, sigma)
/// with alpha = beta / (2 beta - 1); non-negative for beta in (1/2, 1).
double dam_hayden_gap(const DensityMatrix& rho, const DensityMatrix& sigma, double beta);

/// (1/n) log2 Tr sigma^alpha for alpha > 1.
double g_alpha(const DensityMatrix& sigma, int n, double alpha);

}  // namespace qsc
