#include "qsc/stiefel.hpp"

#include <algorithm>
#include <cmath>

namespace qsc {

namespace {

double inner(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k].adjoint() * b[k]).trace().real();
  return s;
}

std::vector<Matrix> riemannian(const std::vector<Matrix>& x, const std::vector<Matrix>& g) {
  std::vector<Matrix> xi(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) xi[k] = linalg::stiefel_project(x[k], g[k]);
  return xi;
}

}  // namespace

StiefelResult stiefel_minimize(const StiefelObjective& f, std::vector<Matrix> start,
                               const StiefelOptions& opts) {
  StiefelResult res;
  res.point = std::move(start);
  std::vector<Matrix> grad(res.point.size());
  res.value = f(res.point, &grad);
  std::vector<Matrix> xi = riemannian(res.point, grad);
  double gnorm2 = inner(xi, xi);
  double step = 1.0 / std::max(std::sqrt(gnorm2), 1.0);
  int quiet = 0;

  for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
    if (std::sqrt(gnorm2) <= opts.tol) {
      res.converged = true;
      break;
    }
    double t = step;
    std::vector<Matrix> trial(res.point.size());
    double f_trial = res.value;
    bool accepted = false;
    for (int back = 0; back < 50; ++back) {
      for (std::size_t k = 0; k < trial.size(); ++k)
        trial[k] = linalg::qr_orthonormalize(res.point[k] - t * xi[k]);
      f_trial = f(trial, nullptr);
      if (f_trial <= res.value - 1e-4 * t * gnorm2) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      res.converged = true;
      break;
    }
    std::vector<Matrix> new_grad(trial.size());
    f_trial = f(trial, &new_grad);
    std::vector<Matrix> new_xi = riemannian(trial, new_grad);

    std::vector<Matrix> s(trial.size()), y(trial.size());
    for (std::size_t k = 0; k < trial.size(); ++k) {
      s[k] = trial[k] - res.point[k];
      y[k] = new_xi[k] - xi[k];
    }
    const double sy = inner(s, y);
    const double ss = inner(s, s);
    step = sy > 0.0 ? std::clamp(ss / sy, 1e-8, 1e8) : std::min(2.0 * t, 1e8);

    const double progress = res.value - f_trial;
    res.point = std::move(trial);
    res.value = f_trial;
    xi = std::move(new_xi);
    gnorm2 = inner(xi, xi);
    res.trace.push_back(res.value);
    quiet = progress <= opts.tol * std::max(1.0, std::abs(res.value)) ? quiet + 1 : 0;
    if (quiet >= 5) {
      res.converged = true;
      ++res.iterations;
      break;
    }
  }
  return res;
}

}  // namespace qsc
