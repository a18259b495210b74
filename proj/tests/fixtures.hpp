#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "qsc/ki.hpp"
#include "qsc/qcore.hpp"

namespace qsc::test {

struct KIFixture {
  DensityMatrix rho;
  KIDims dims;
  std::vector<double> p;
  std::vector<int> n;
  std::vector<int> q;
};

/// Source built from known blocks (at most 2, |A| <= 8) and hidden by a
/// random isometry into A.
inline KIFixture make_ki_fixture(std::uint64_t seed) {
  auto rng = linalg::make_rng(seed, 7);
  std::uniform_int_distribution<int> pick(1, 3);
  const int c = 1 + static_cast<int>(seed % 2);
  std::vector<int> ns, qs;
  int used = 0;
  for (int j = 0; j < c; ++j) {
    int n = pick(rng), q = pick(rng);
    while (used + n * q > 8 - (c - 1 - j)) (n > q ? n : q)--;
    ns.push_back(n);
    qs.push_back(q);
    used += n * q;
  }
  std::uniform_int_distribution<int> pad(0, 8 - used);
  const int da = used + pad(rng);
  const int dr = 2 + static_cast<int>(rng() % 2);

  std::vector<double> p(c, 1.0);
  if (c == 2) {
    p[0] = std::uniform_real_distribution<double>(0.2, 0.8)(rng);
    p[1] = 1.0 - p[0];
  }
  const Matrix embed = linalg::random_isometry(da, used, rng);
  Matrix rho = Matrix::Zero(da * dr, da * dr);
  int offset = 0;
  for (int j = 0; j < c; ++j) {
    const DensityMatrix omega = random_state(Layout{{"N", ns[j]}}, rng());
    const DensityMatrix rq = random_state(Layout{{"Q", qs[j]}, {"R", dr}}, rng());
    const Matrix t = embed.middleCols(offset, ns[j] * qs[j]);
    const Matrix big = linalg::kron(t, Matrix::Identity(dr, dr));
    rho += p[j] * big * linalg::kron(omega.matrix(), rq.matrix()) * big.adjoint();
    offset += ns[j] * qs[j];
  }
  rho = 0.5 * (rho + rho.adjoint());
  KIDims dims{c, *std::max_element(ns.begin(), ns.end()), *std::max_element(qs.begin(), qs.end())};
  return {DensityMatrix(Layout{{"A", da}, {"R", dr}}, rho), dims, p, ns, qs};
}

/// Channel on {C, N, Q} acting blockwise as |k> -> e^{i phi_k} |k>|e_k> in
/// the eigenbasis of omega_j; padding vectors go to themselves (x) |0>_E.
inline Channel make_preserving_channel(const KIDecomposition& d, std::uint64_t seed) {
  auto rng = linalg::make_rng(seed, 11);
  const int C = d.dims.c, N = d.dims.n, Q = d.dims.q, E = d.dims.n;
  const int D = C * N * Q;
  Matrix v = Matrix::Zero(static_cast<Eigen::Index>(D) * E, D);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  for (int j = 0; j < C; ++j) {
    const int nj = d.blocks[j].n_dim(), qj = d.blocks[j].q_dim();
    Eigen::SelfAdjointEigenSolver<Matrix> es(d.blocks[j].omega.matrix());
    const Matrix& w = es.eigenvectors();
    Matrix u = Matrix::Zero(static_cast<Eigen::Index>(nj) * E, nj);  // N_j -> N_j (x) E
    for (int k = 0; k < nj; ++k) {
      const int e = static_cast<int>(rng() % E);
      const cplx ph = std::polar(1.0, phase(rng));
      for (int a = 0; a < nj; ++a)
        for (int b = 0; b < nj; ++b) u(a * E + e, b) += ph * w(a, k) * std::conj(w(b, k));
    }
    for (int a2 = 0; a2 < nj; ++a2)
      for (int e = 0; e < E; ++e)
        for (int a = 0; a < nj; ++a)
          for (int m = 0; m < qj; ++m)
            v((((j * N + a2) * Q + m) * E) + e, (j * N + a) * Q + m) = u(a2 * E + e, a);
  }
  for (int col = 0; col < D; ++col) {
    const int j = col / (N * Q), a = (col / Q) % N, m = col % Q;
    if (a >= d.blocks[j].n_dim() || m >= d.blocks[j].q_dim()) v(static_cast<Eigen::Index>(col) * E, col) = 1.0;
  }
  const Layout cnq{{"C", C}, {"N", N}, {"Q", Q}};
  return Channel(cnq, cnq, Layout{{"E", E}}, v);
}

inline DensityMatrix classical_source(const std::vector<double>& p) {
  const int d = static_cast<int>(p.size());
  Matrix m = Matrix::Zero(d * d, d * d);
  for (int x = 0; x < d; ++x) m(x * d + x, x * d + x) = p[x];
  return DensityMatrix(Layout{{"A", d}, {"R", d}}, m);
}

inline DensityMatrix pure_source(const Vector& psi, int da, int dr) {
  return DensityMatrix(Layout{{"A", da}, {"R", dr}}, psi * psi.adjoint());
}

/// cos(theta)|00> + sin(theta)|11>.
inline DensityMatrix entangled_qubits(double theta) {
  Vector v = Vector::Zero(4);
  v(0) = std::cos(theta);
  v(3) = std::sin(theta);
  return pure_source(v, 2, 2);
}

}  // namespace qsc::test
