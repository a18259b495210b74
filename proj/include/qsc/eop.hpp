#pragma once

// Renyi entanglement of purification
//
//   E_{alpha,p}(A:R) = min_{N: B -> E} S_alpha(AE),  sigma^{AE} = (id (x) N)(psi^{AB}),
//
// with psi^{ARB} the spectral purification of rho^{AR}. Channels are
// parameterized by Stinespring isometries V: B -> E (x) F with |F| = |B|,
// which covers every extremal channel. The minimization is local; every
// value is an upper bound on the infimum.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qsc/qcore.hpp"

namespace qsc {

struct EopOptions {
  int env_dim = 0;  // 0 selects |A|^2 |R|^2
  int restarts = 32;
  std::uint64_t seed = 0x45;
  int max_iter = 500;
  double tol = 1e-10;
  int threads = 1;
  /// Budget on the number of complex entries of V.
  long max_parameters = 1L << 20;
  /// Replaces the starting point of restart 0.
  std::optional<Matrix> warm_start;
};

enum class EopStatus { converged, max_iter };

std::string to_string(EopStatus s);

struct EopResult {
  double value = 0.0;  // bits
  double alpha = 1.0;
  Channel optimal_channel;  // {B} -> {E}, env {F}
  PureState purification;   // {A, R, B}
  int restarts = 0;
  int best_restart = 0;
  std::vector<double> per_restart_values;
  EopStatus status = EopStatus::converged;

  double spread() const;
};

/// E_{alpha,p} for alpha > 0; alpha == 1 is the von Neumann quantity.
EopResult eop(const DensityMatrix& rho_ar, double alpha, const EopOptions& opts = {});

/// S_alpha(AE) of (id (x) ch) applied to `purification` on {A, R, B}.
double eop_objective(const PureState& purification, const Channel& ch, double alpha);

/// max_N log2 Tr (sigma^{AE})^alpha = (1 - alpha) E_{alpha,p}, alpha > 1.
double z_alpha(const DensityMatrix& rho_ar, double alpha, const EopOptions& opts = {});

struct RegularizationEstimate {
  double alpha = 1.0;
  std::vector<std::pair<int, double>> per_n;  // (n, E_{alpha,p}(A^n:R^n) / n)

  /// Smallest per-copy value, an upper estimate of the regularized quantity.
  double upper_estimate() const;
};

/// per_n for n = 1..n_max. opts.env_dim, when set, is the n = 1 environment
/// and env_dim^n is used at block length n. Block n = k starts one restart
/// from the k-fold product of the n = 1 optimum.
RegularizationEstimate eop_regularized_estimate(const DensityMatrix& rho_ar, double alpha, int n_max,
                                                const EopOptions& opts = {});

struct ExplorationPoint {
  double alpha = 1.0;
  double value = 0.0;
  double spread = 0.0;
  int restarts = 0;
};

/// E_{alpha,p} along alpha -> 1+ with warm starts chained between grid points.
/// Exploration data only; no limit is inferred.
std::vector<ExplorationPoint> eop_alpha_exploration(
    const DensityMatrix& rho_ar, const EopOptions& opts = {},
    const std::vector<double>& grid = {1.5, 1.2, 1.1, 1.05, 1.02, 1.01});

}  // namespace qsc
