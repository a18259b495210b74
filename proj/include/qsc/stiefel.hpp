#pragma once

// Riemannian descent on products of Stiefel manifolds {V : V^dagger V = 1}
// with QR retraction, Armijo backtracking and Barzilai-Borwein step sizes.

#include <functional>
#include <vector>

#include "qsc/linalg.hpp"

namespace qsc {

/// Returns the objective at `point`; when `grad` is non-null it also fills
/// the Euclidean gradient with respect to the real inner product Re Tr(G^dagger dV).
using StiefelObjective = std::function<double(const std::vector<Matrix>& point, std::vector<Matrix>* grad)>;

struct StiefelOptions {
  int max_iter = 500;
  double tol = 1e-10;  // on the Riemannian gradient norm and on relative progress
};

struct StiefelResult {
  std::vector<Matrix> point;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective after each accepted step
};

StiefelResult stiefel_minimize(const StiefelObjective& f, std::vector<Matrix> start,
                               const StiefelOptions& opts = {});

}  // namespace qsc
