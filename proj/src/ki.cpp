#include "qsc/ki.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qsc/renyi.hpp"

namespace qsc {

namespace {

Matrix source_matrix(const DensityMatrix& rho_ar, int& da, int& dr) {
  const Layout& L = rho_ar.layout();
  if (L.size() != 2 || !L.contains("A") || !L.contains("R"))
    throw LabelError("KI decomposition needs factors exactly {A, R}, got " + to_string(L));
  da = L.dim_of("A");
  dr = L.dim_of("R");
  return reorder(rho_ar, {"A", "R"}).matrix();
}

Matrix hermitian_part(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

/// Eigenvectors ordered by descending eigenvalue.
Matrix descending_eigenbasis(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(m));
  return es.eigenvectors().rowwise().reverse();
}

// Tr_R[rho (1 (x) y)] for rho on A (x) R.
Matrix steer(const Matrix& rho, int da, int dr, const Matrix& y) {
  Matrix out = Matrix::Zero(da, da);
  for (int a = 0; a < da; ++a)
    for (int b = 0; b < da; ++b) {
      cplx acc = 0.0;
      for (int r = 0; r < dr; ++r)
        for (int s = 0; s < dr; ++s) acc += rho(a * dr + r, b * dr + s) * y(s, r);
      out(a, b) = acc;
    }
  return out;
}

std::vector<Matrix> hermitian_basis(int d) {
  std::vector<Matrix> basis;
  for (int k = 0; k < d; ++k) {
    Matrix e = Matrix::Zero(d, d);
    e(k, k) = 1.0;
    basis.push_back(e);
    for (int l = k + 1; l < d; ++l) {
      Matrix x = Matrix::Zero(d, d);
      x(k, l) = 1.0;
      x(l, k) = 1.0;
      basis.push_back(x);
      Matrix y = Matrix::Zero(d, d);
      y(k, l) = cplx(0.0, 1.0);
      y(l, k) = cplx(0.0, -1.0);
      basis.push_back(y);
    }
  }
  return basis;
}

// Orthonormal (Frobenius) basis of a subspace of s x s matrices. Candidates
// are expected at unit scale; `add` accepts one when its component outside
// the span exceeds `tol` in absolute terms.
class OperatorSpan {
 public:
  explicit OperatorSpan(int s) : s_(s), basis_(s * s, 0) {}

  bool add(const Matrix& m, double tol) {
    Vector v = Eigen::Map<const Vector>(m.data(), m.size());
    for (int pass = 0; pass < 2 && basis_.cols() > 0; ++pass) v -= basis_ * (basis_.adjoint() * v);
    const double r = v.norm();
    if (r <= tol || basis_.cols() >= s_ * s_) return false;
    basis_.conservativeResize(Eigen::NoChange, basis_.cols() + 1);
    basis_.col(basis_.cols() - 1) = v / r;
    return true;
  }

  int size() const { return static_cast<int>(basis_.cols()); }
  Matrix element(int k) const { return Eigen::Map<const Matrix>(basis_.col(k).data(), s_, s_); }

 private:
  int s_;
  Matrix basis_;
};

struct ClosedAlgebra {
  std::vector<Matrix> generators;
  OperatorSpan span;
};

// Smallest unital *-algebra containing `gens` (Hermitian) that is invariant
// under X -> rho^{it} X rho^{-it}, with rho = diag(exp(log_evals)).
ClosedAlgebra close_algebra(std::vector<Matrix> gens, const RealVector& log_evals, double tol,
                            Rng& rng) {
  const int s = static_cast<int>(log_evals.size());
  ClosedAlgebra alg{std::move(gens), OperatorSpan(s)};
  alg.span.add(Matrix::Identity(s, s), tol);
  std::uniform_real_distribution<double> tdist(0.3, 3.0);
  const double ts[2] = {tdist(rng), tdist(rng)};

  std::vector<int> done(alg.generators.size(), 0);
  for (;;) {
    bool grew = true;
    while (grew) {
      grew = false;
      for (std::size_t g = 0; g < alg.generators.size(); ++g) {
        while (done[g] < alg.span.size()) {
          const Matrix prod = alg.generators[g] * alg.span.element(done[g]++);
          if (alg.span.add(prod, tol)) grew = true;
        }
      }
    }
    bool added = false;
    const int size = alg.span.size();
    for (int k = 0; k < size; ++k) {
      const Matrix b = alg.span.element(k);
      for (double t : ts) {
        Matrix m(s, s);
        for (int j = 0; j < s; ++j)
          for (int i = 0; i < s; ++i) m(i, j) = b(i, j) * std::polar(1.0, t * (log_evals(i) - log_evals(j)));
        const Matrix parts[2] = {hermitian_part(m), hermitian_part(cplx(0.0, -1.0) * m)};
        for (const Matrix& h : parts) {
          if (alg.span.add(h, tol)) {
            alg.generators.push_back(h / h.norm());
            done.push_back(0);
            added = true;
          }
        }
      }
    }
    if (!added) break;
  }
  return alg;
}

// Null space of sum_g |[X, g]|^2, i.e. the commutant of the generators.
std::vector<Matrix> commutant(const std::vector<Matrix>& gens, int s, double rel_tol) {
  const int n = s * s;
  Matrix L = Matrix::Zero(n, n);
  const Matrix id = Matrix::Identity(s, s);
  for (const auto& g : gens) {
    const Matrix k = linalg::kron(id, g) - linalg::kron(g.transpose(), id);
    L.noalias() += k.adjoint() * k;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(L);
  const double thr = rel_tol * std::max(es.eigenvalues().maxCoeff(), 1.0);
  std::vector<Matrix> out;
  for (int k = 0; k < n && es.eigenvalues()(k) < thr; ++k)
    out.emplace_back(Eigen::Map<const Matrix>(es.eigenvectors().col(k).data(), s, s));
  return out;
}

// Center of the algebra: elements of `alg` commuting with every generator.
std::vector<Matrix> center(const ClosedAlgebra& alg, int s, double rel_tol) {
  const int a = alg.span.size();
  const int ng = static_cast<int>(alg.generators.size());
  Matrix K(static_cast<Eigen::Index>(ng) * s * s, a);
  for (int i = 0; i < a; ++i) {
    const Matrix b = alg.span.element(i);
    for (int g = 0; g < ng; ++g) {
      const Matrix c = b * alg.generators[g] - alg.generators[g] * b;
      K.block(static_cast<Eigen::Index>(g) * s * s, i, s * s, 1) = Eigen::Map<const Vector>(c.data(), s * s);
    }
  }
  const Matrix gram = K.adjoint() * K;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  const double thr = rel_tol * std::max(es.eigenvalues().maxCoeff(), 1.0);
  std::vector<Matrix> out;
  for (int k = 0; k < a && es.eigenvalues()(k) < thr; ++k) {
    Matrix z = Matrix::Zero(s, s);
    for (int i = 0; i < a; ++i) z += es.eigenvectors()(i, k) * alg.span.element(i);
    out.push_back(z);
  }
  return out;
}

Matrix random_hermitian_combination(const std::vector<Matrix>& elems, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix h = Matrix::Zero(elems.front().rows(), elems.front().cols());
  for (const auto& e : elems) {
    const Matrix he = hermitian_part(e);
    const Matrix ha = hermitian_part(cplx(0.0, -1.0) * e);
    h += normal(rng) * he + normal(rng) * ha;
  }
  return h;
}

// Eigenspaces of a Hermitian matrix grouped by (numerically) equal eigenvalue.
// Returns empty when two groups are too close to separate reliably.
std::vector<Matrix> eigen_clusters(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(h));
  const RealVector& ev = es.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  const double same = 1e-7 * scale;
  const double separated = 1e-4 * scale;
  std::vector<Matrix> groups;
  int start = 0;
  for (int k = 1; k <= ev.size(); ++k) {
    if (k == ev.size() || ev(k) - ev(k - 1) > same) {
      if (k < ev.size() && ev(k) - ev(k - 1) < separated) return {};
      groups.push_back(es.eigenvectors().middleCols(start, k - start));
      start = k;
    }
  }
  return groups;
}

struct RoundResult {
  std::vector<BlockEmbedding> blocks;  // in support coordinates
};

// One attempt at the Wedderburn split of the minimal sufficient algebra.
// Returns false when the numerical structure is inconsistent.
bool wedderburn_round(const std::vector<Matrix>& derivatives, const RealVector& log_evals,
                      double tol, Rng& rng, RoundResult& out) {
  const int s = static_cast<int>(log_evals.size());
  const ClosedAlgebra alg = close_algebra(derivatives, log_evals, tol, rng);
  const double null_tol = std::max(tol * tol, 1e-24) * 10.0;
  const auto comm = commutant(alg.generators, s, null_tol);
  const auto cent = center(alg, s, null_tol);
  if (comm.empty() || cent.empty()) return false;

  std::vector<Matrix> block_spaces;
  for (int attempt = 0; attempt < 8 && block_spaces.empty(); ++attempt)
    block_spaces = eigen_clusters(random_hermitian_combination(cent, rng));
  if (static_cast<int>(block_spaces.size()) != static_cast<int>(cent.size())) return false;

  std::normal_distribution<double> normal;
  int sum_n2 = 0, sum_q2 = 0;
  out.blocks.clear();
  for (const Matrix& vk : block_spaces) {
    const int dk = static_cast<int>(vk.cols());
    std::vector<Matrix> local;
    local.reserve(comm.size());
    for (const auto& c : comm) local.push_back(vk.adjoint() * c * vk);

    std::vector<Matrix> factors;
    for (int attempt = 0; attempt < 8 && factors.empty(); ++attempt)
      factors = eigen_clusters(random_hermitian_combination(local, rng));
    if (factors.empty()) return false;
    const int n = static_cast<int>(factors.size());
    if (dk % n != 0) return false;
    const int q = dk / n;
    for (const auto& w : factors)
      if (w.cols() != q) return false;

    // Align the Q bases of the N-eigenspaces with a generic commutant element.
    Matrix t(dk, dk);
    bool aligned = false;
    for (int attempt = 0; attempt < 8 && !aligned; ++attempt) {
      Matrix y = Matrix::Zero(dk, dk);
      for (const auto& c : local) y += cplx(normal(rng), normal(rng)) * c;
      aligned = true;
      for (int i = 0; i < n && aligned; ++i) {
        const Matrix m = factors[i].adjoint() * y * factors[0];
        Eigen::JacobiSVD<Matrix> svd(m);
        const auto& sv = svd.singularValues();
        if (sv(0) < 1e-8 || sv(sv.size() - 1) < 1e-6 * sv(0)) {
          aligned = false;
          break;
        }
        t.middleCols(static_cast<Eigen::Index>(i) * q, q) = factors[i] * linalg::polar_unitary(m);
      }
    }
    if (!aligned) return false;
    out.blocks.push_back({vk * t, n, q});
    sum_n2 += n * n;
    sum_q2 += q * q;
  }
  return sum_n2 == static_cast<int>(comm.size()) && sum_q2 == alg.span.size();
}

bool block_less(const KIBlock& a, const KIBlock& b) {
  if (std::abs(a.p - b.p) > 1e-9) return a.p > b.p;
  if (a.q_dim() != b.q_dim()) return a.q_dim() > b.q_dim();
  const Matrix& x = a.omega.matrix();
  const Matrix& y = b.omega.matrix();
  if (x.size() != y.size()) return x.size() < y.size();
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const cplx u = x.data()[k];
    const cplx v = y.data()[k];
    if (std::abs(u.real() - v.real()) > 1e-12) return u.real() < v.real();
    if (std::abs(u.imag() - v.imag()) > 1e-12) return u.imag() < v.imag();
  }
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------

KIDecomposition ki_from_blocks(const DensityMatrix& rho_ar, std::vector<BlockEmbedding> blocks) {
  int da = 0, dr = 0;
  const Matrix rho = source_matrix(rho_ar, da, dr);
  const Matrix id_r = Matrix::Identity(dr, dr);

  struct Work {
    BlockEmbedding emb;
    KIBlock block;
  };
  std::vector<Work> work;
  for (auto& b : blocks) {
    if (b.isometry.rows() != da || b.isometry.cols() != b.n * b.q)
      throw DimensionError("ki_from_blocks: block isometry shape mismatch");
    const std::vector<int> dims{b.n, b.q, dr};
    auto block_op = [&](const Matrix& t) {
      const Matrix big = linalg::kron(t, id_r);
      return Matrix(big.adjoint() * rho * big);
    };
    Matrix x = block_op(b.isometry);
    const double p = x.trace().real();
    if (p <= 0.0) throw ValidationError("ki_from_blocks: block carries no weight");
    const Matrix omega0 = linalg::partial_trace(x, dims, std::vector<int>{0}) / p;
    const Matrix rho_q0 = linalg::partial_trace(x, dims, std::vector<int>{1}) / p;
    b.isometry = b.isometry * linalg::kron(descending_eigenbasis(omega0), descending_eigenbasis(rho_q0));
    x = block_op(b.isometry);
    Matrix omega = hermitian_part(linalg::partial_trace(x, dims, std::vector<int>{0}) / p);
    Matrix rho_qr = hermitian_part(linalg::partial_trace(x, dims, std::vector<int>{1, 2}) / p);
    omega /= omega.trace().real();
    rho_qr /= rho_qr.trace().real();
    Layout qr_layout = Layout{{"Q", b.q}}.concat(Layout{{"R", dr}});
    work.push_back({b, KIBlock{p, DensityMatrix::trusted(Layout{{"N", b.n}}, std::move(omega)),
                               DensityMatrix::trusted(std::move(qr_layout), std::move(rho_qr))}});
  }
  std::stable_sort(work.begin(), work.end(),
                   [](const Work& a, const Work& b) { return block_less(a.block, b.block); });

  KIDecomposition d;
  d.a_layout = Layout{{"A", da}};
  d.r_layout = Layout{{"R", dr}};
  d.dims.c = static_cast<int>(work.size());
  for (const auto& w : work) {
    d.dims.n = std::max(d.dims.n, w.emb.n);
    d.dims.q = std::max(d.dims.q, w.emb.q);
  }
  d.u_ki = Matrix::Zero(static_cast<Eigen::Index>(d.dims.c) * d.dims.n * d.dims.q, da);
  for (int j = 0; j < d.dims.c; ++j) {
    const auto& w = work[j];
    for (int a = 0; a < w.emb.n; ++a)
      for (int m = 0; m < w.emb.q; ++m)
        d.u_ki.row((static_cast<Eigen::Index>(j) * d.dims.n + a) * d.dims.q + m) =
            w.emb.isometry.col(static_cast<Eigen::Index>(a) * w.emb.q + m).adjoint();
    d.blocks.push_back(w.block);
  }
  const Matrix big_u = linalg::kron(d.u_ki, id_r);
  d.residual = linalg::max_abs(big_u * rho * big_u.adjoint() - d.block_state().matrix());
  return d;
}

KIDecomposition ki_decompose(const DensityMatrix& rho_ar, const KIOptions& opts) {
  int da = 0, dr = 0;
  const Matrix rho = source_matrix(rho_ar, da, dr);

  // Restrict to the support of rho^A, where rho^A = diag(lambda).
  const Matrix rho_a = linalg::partial_trace(rho, std::vector<int>{da, dr}, std::vector<int>{0});
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(rho_a));
  std::vector<int> support;
  for (int k = da - 1; k >= 0; --k)
    if (es.eigenvalues()(k) > kTolerances.min_eigenvalue) support.push_back(k);
  const int s = static_cast<int>(support.size());
  Matrix basis(da, s);
  RealVector log_evals(s);
  RealVector inv_sqrt(s);
  for (int k = 0; k < s; ++k) {
    basis.col(k) = es.eigenvectors().col(support[k]);
    const double lambda = es.eigenvalues()(support[k]);
    log_evals(k) = std::log(lambda);
    inv_sqrt(k) = 1.0 / std::sqrt(lambda);
  }

  // Whitened steered operators rho_A^{-1/2} Tr_R[rho (1 (x) Y)] rho_A^{-1/2}.
  std::vector<Matrix> derivatives;
  for (const auto& y : hermitian_basis(dr)) {
    Matrix dmat = inv_sqrt.asDiagonal() * (basis.adjoint() * steer(rho, da, dr, y) * basis) *
                  inv_sqrt.asDiagonal();
    dmat = hermitian_part(dmat);
    const double nrm = dmat.norm();
    if (nrm > 1e-13) derivatives.push_back(dmat / nrm);
  }

  static constexpr double kSpanTolerances[] = {1e-8, 1e-7, 1e-9, 1e-6, 1e-10, 1e-5};
  double best = std::numeric_limits<double>::infinity();
  for (int round = 0; round < opts.max_rounds; ++round) {
    auto rng = linalg::make_rng(opts.seed, static_cast<std::uint64_t>(round));
    const double tol = kSpanTolerances[round % std::size(kSpanTolerances)];
    RoundResult rr;
    if (!wedderburn_round(derivatives, log_evals, tol, rng, rr)) continue;
    for (auto& b : rr.blocks) b.isometry = basis * b.isometry;
    KIDecomposition d = ki_from_blocks(rho_ar, std::move(rr.blocks));
    d.rounds = round + 1;
    if (d.residual < opts.target_residual) return d;
    best = std::min(best, d.residual);
  }
  throw ConvergenceError("ki_decompose: no refinement round reached the block form after " +
                             std::to_string(opts.max_rounds) + " rounds",
                         best);
}

DensityMatrix KIDecomposition::block_state() const {
  const Layout L = Layout{{"C", dims.c}, {"N", dims.n}, {"Q", dims.q}}.concat(r_layout);
  const int dr = r_layout.total_dim();
  const int D = L.total_dim();
  Matrix m = Matrix::Zero(D, D);
  const int qr = dims.q * dr;
  for (int j = 0; j < static_cast<int>(blocks.size()); ++j) {
    const auto& b = blocks[j];
    const Matrix& om = b.omega.matrix();
    const Matrix& rq = b.rho_qr.matrix();
    const int nj = b.n_dim();
    const int qrj = b.q_dim() * dr;  // leading rows of the padded Q (x) R index
    for (int a = 0; a < nj; ++a)
      for (int a2 = 0; a2 < nj; ++a2) {
        const cplx w = b.p * om(a, a2);
        if (w == 0.0) continue;
        const int row0 = (j * dims.n + a) * qr;
        const int col0 = (j * dims.n + a2) * qr;
        m.block(row0, col0, qrj, qrj) += w * rq;
      }
  }
  return DensityMatrix::trusted(L, std::move(m));
}

DensityMatrix KIDecomposition::cq_state() const {
  const Layout L{{"C", dims.c}, {"Q", dims.q}};
  Matrix m = Matrix::Zero(L.total_dim(), L.total_dim());
  const int dr = r_layout.total_dim();
  for (int j = 0; j < static_cast<int>(blocks.size()); ++j) {
    const auto& b = blocks[j];
    const Matrix rq = linalg::partial_trace(b.rho_qr.matrix(), std::vector<int>{b.q_dim(), dr},
                                            std::vector<int>{0});
    m.block(j * dims.q, j * dims.q, b.q_dim(), b.q_dim()) = b.p * rq;
  }
  return DensityMatrix::trusted(L, std::move(m));
}

Matrix KIDecomposition::block_isometry(std::size_t j) const {
  const auto& b = blocks.at(j);
  Matrix t(u_ki.cols(), b.n_dim() * b.q_dim());
  for (int a = 0; a < b.n_dim(); ++a)
    for (int m = 0; m < b.q_dim(); ++m)
      t.col(a * b.q_dim() + m) =
          u_ki.row((static_cast<Eigen::Index>(j) * dims.n + a) * dims.q + m).adjoint();
  return t;
}

DensityMatrix ki_reconstruct(const KIDecomposition& d) {
  const int dr = d.r_layout.total_dim();
  const Matrix big_u = linalg::kron(d.u_ki, Matrix::Identity(dr, dr));
  Matrix rho = big_u.adjoint() * d.block_state().matrix() * big_u;
  return DensityMatrix::trusted(d.a_layout.concat(d.r_layout), hermitian_part(rho));
}

double ki_entropy(const KIDecomposition& d, double alpha) {
  if (!(alpha > 0.0)) throw ValidationError("ki_entropy: alpha must be > 0");
  std::vector<double> spectrum;
  const int dr = d.r_layout.total_dim();
  for (const auto& b : d.blocks) {
    const Matrix rq = linalg::partial_trace(b.rho_qr.matrix(), std::vector<int>{b.q_dim(), dr},
                                            std::vector<int>{0});
    for (double x : linalg::hermitian_eigenvalues(rq)) spectrum.push_back(b.p * std::max(x, 0.0));
  }
  return spectral_entropy(spectrum, alpha);
}

KIDecomposition ki_tensor_product(const KIDecomposition& d1, const KIDecomposition& d2) {
  const DensityMatrix r1 = ki_reconstruct(d1);
  const DensityMatrix r2 = ki_reconstruct(d2);
  const int a1 = d1.a_layout.total_dim(), a2 = d2.a_layout.total_dim();
  const int s1 = d1.r_layout.total_dim(), s2 = d2.r_layout.total_dim();
  // A1 R1 A2 R2 -> A1 A2 R1 R2
  const std::vector<int> dims{a1, s1, a2, s2};
  const std::vector<int> order{0, 2, 1, 3};
  const Matrix prod = linalg::permute_operator(linalg::kron(r1.matrix(), r2.matrix()), dims, order);
  const DensityMatrix rho =
      DensityMatrix::trusted(Layout{{"A", a1 * a2}, {"R", s1 * s2}}, hermitian_part(prod));

  std::vector<BlockEmbedding> blocks;
  for (std::size_t j1 = 0; j1 < d1.blocks.size(); ++j1)
    for (std::size_t j2 = 0; j2 < d2.blocks.size(); ++j2) {
      const Matrix t1 = d1.block_isometry(j1);
      const Matrix t2 = d2.block_isometry(j2);
      const int n1 = d1.blocks[j1].n_dim(), q1 = d1.blocks[j1].q_dim();
      const int n2 = d2.blocks[j2].n_dim(), q2 = d2.blocks[j2].q_dim();
      const Matrix k = linalg::kron(t1, t2);
      Matrix t(k.rows(), k.cols());
      for (int x1 = 0; x1 < n1; ++x1)
        for (int m1 = 0; m1 < q1; ++m1)
          for (int x2 = 0; x2 < n2; ++x2)
            for (int m2 = 0; m2 < q2; ++m2) {
              const int src = (x1 * q1 + m1) * (n2 * q2) + x2 * q2 + m2;
              const int dst = (x1 * n2 + x2) * (q1 * q2) + m1 * q2 + m2;
              t.col(dst) = k.col(src);
            }
      blocks.push_back({std::move(t), n1 * n2, q1 * q2});
    }
  return ki_from_blocks(rho, std::move(blocks));
}

// ---------------------------------------------------------------------------

TauExtension build_tau_extension(const KIDecomposition& d, std::uint64_t seed) {
  const int c = d.dims.c, n = d.dims.n, q = d.dims.q;
  const int dr = d.r_layout.total_dim();
  Layout L = Layout{{"C", c}, {"N", n}, {"Q", q}, {"E", n}, {"E'", n}}
                 .concat(d.r_layout)
                 .concat(Layout{{"C'", c}, {"N'", n}, {"Q'", q * dr}});
  const auto st = linalg::strides(L.dims());
  Vector psi = Vector::Zero(L.total_dim());
  TauExtension out{PureState(Layout{}, Vector::Ones(1)), {}, {}};

  for (int j = 0; j < c; ++j) {
    const auto& b = d.blocks[j];
    auto rng = linalg::make_rng(seed, static_cast<std::uint64_t>(j));
    const int nj = b.n_dim(), qj = b.q_dim();

    Eigen::SelfAdjointEigenSolver<Matrix> eo(hermitian_part(b.omega.matrix()));
    const Matrix w = linalg::random_isometry(n, n, rng);   // basis of E
    const Matrix v2 = linalg::random_isometry(n, nj, rng); // N_j -> E'
    Vector tau = Vector::Zero(static_cast<Eigen::Index>(n) * n);   // N (x) E
    Vector eta = Vector::Zero(static_cast<Eigen::Index>(n) * n);   // E' (x) N'
    for (int k = 0; k < nj; ++k) {
      const double amp = std::sqrt(std::max(eo.eigenvalues()(k), 0.0));
      const Vector vk = eo.eigenvectors().col(k);
      const Vector v2k = v2 * vk;
      for (int a = 0; a < nj; ++a)
        for (int e = 0; e < n; ++e) tau(a * n + e) += amp * vk(a) * w(e, k);
      for (int e = 0; e < n; ++e) eta(e * n + k) += amp * v2k(e);
    }

    Eigen::SelfAdjointEigenSolver<Matrix> er(hermitian_part(b.rho_qr.matrix()));
    const int qrj = qj * dr;
    const double pj = std::sqrt(b.p);
    for (int a = 0; a < nj; ++a)
      for (int e = 0; e < n; ++e) {
        const cplx t_ae = tau(a * n + e);
        if (t_ae == 0.0) continue;
        for (int e2 = 0; e2 < n; ++e2)
          for (int n2 = 0; n2 < nj; ++n2) {
            const cplx t_en = eta(e2 * n + n2);
            if (t_en == 0.0) continue;
            for (int l = 0; l < qrj; ++l) {
              const double mu = std::max(er.eigenvalues()(l), 0.0);
              if (mu == 0.0) continue;
              const double amp_l = std::sqrt(mu);
              for (int m = 0; m < qj; ++m)
                for (int r = 0; r < dr; ++r) {
                  const cplx u = er.eigenvectors()(m * dr + r, l);
                  const int idx = j * st[0] + a * st[1] + m * st[2] + e * st[3] + e2 * st[4] +
                                  r * st[5] + j * st[6] + n2 * st[7] + l * st[8];
                  psi(idx) += pj * t_ae * t_en * amp_l * u;
                }
            }
          }
      }
    out.tau_ne.push_back(std::move(tau));
    out.eta_en.push_back(std::move(eta));
  }
  psi /= psi.norm();
  out.state = PureState(std::move(L), std::move(psi));
  return out;
}

TauCheck check_tau_extension(const TauExtension& tau, const KIDecomposition& d) {
  TauCheck check;
  std::vector<std::string> keep{"C", "N", "Q"};
  for (const auto& l : d.r_layout.labels()) keep.push_back(l);
  check.marginal_residual =
      linalg::max_abs(partial_trace(tau.state, keep).matrix() - d.block_state().matrix());

  const int c = d.dims.c, n = d.dims.n;
  const int nn = n * n;
  Matrix expected = Matrix::Zero(static_cast<Eigen::Index>(c) * nn * nn, static_cast<Eigen::Index>(c) * nn * nn);
  for (int j = 0; j < c; ++j) {
    const Matrix blk = linalg::kron(tau.tau_ne[j] * tau.tau_ne[j].adjoint(),
                                    tau.eta_en[j] * tau.eta_en[j].adjoint());
    expected.block(static_cast<Eigen::Index>(j) * nn * nn, static_cast<Eigen::Index>(j) * nn * nn, nn * nn, nn * nn) =
        d.blocks[j].p * blk;
  }
  check.block_pure_residual =
      linalg::max_abs(partial_trace(tau.state, {"C", "N", "E", "E'", "N'"}).matrix() - expected);
  return check;
}

double tau_entropy(const TauExtension& tau, double alpha) {
  const DensityMatrix m = partial_trace(tau.state, {"C", "N", "Q", "E"});
  return spectral_entropy(m.spectrum(), alpha);
}

// ---------------------------------------------------------------------------

namespace {

// Stinespring isometry of `ch` extended by the identity to all of `full`;
// rows ordered (full..., env...), columns by `full`.
Matrix lift_channel(const Channel& ch, const Layout& full) {
  const Layout& in = ch.input();
  if (!(ch.output() == in))
    throw LabelError("verify_preserving_channel: channel must map its factors to themselves");
  for (const auto& f : in.factors())
    if (!full.contains(f.label) || full.dim_of(f.label) != f.dim)
      throw DimensionError("verify_preserving_channel: factor '" + f.label + "' does not match {C, N, Q}");
  const Layout rest = full.without(in.labels());
  const Matrix big = linalg::kron(ch.isometry(), Matrix::Identity(rest.total_dim(), rest.total_dim()));

  const Layout col_layout = in.concat(rest);
  std::vector<int> col_order;
  for (const auto& l : col_layout.labels()) col_order.push_back(full.index_of(l));
  const auto col_map = linalg::permutation_map(full.dims(), col_order);  // col_layout idx -> full idx

  const Layout row_layout = in.concat(ch.env()).concat(rest);
  const Layout target = full.concat(ch.env());
  std::vector<int> row_order;
  for (const auto& l : target.labels()) row_order.push_back(row_layout.index_of(l));
  const auto row_map = linalg::permutation_map(row_layout.dims(), row_order);  // target idx -> row idx

  Matrix out(big.rows(), big.cols());
  for (Eigen::Index cidx = 0; cidx < big.cols(); ++cidx)
    for (Eigen::Index t = 0; t < big.rows(); ++t) out(t, col_map[cidx]) = big(row_map[t], cidx);
  return out;
}

}  // namespace

PreservingReport verify_preserving_channel(const Channel& ch, const KIDecomposition& d) {
  const Layout full{{"C", d.dims.c}, {"N", d.dims.n}, {"Q", d.dims.q}};
  const Matrix v = lift_channel(ch, full);
  const int de = ch.env().total_dim();

  PreservingReport rep;
  const DensityMatrix omega = d.block_state();
  const DensityMatrix out = apply_channel(ch, omega, false);
  rep.preserve_residual = linalg::max_abs(reorder(out, omega.layout().labels()).matrix() - omega.matrix());
  rep.preserves = rep.preserve_residual <= 1e-8;

  const int N = d.dims.n, Q = d.dims.q;
  double worst = 0.0;
  for (int j = 0; j < d.dims.c; ++j) {
    const int nj = d.blocks[j].n_dim(), qj = d.blocks[j].q_dim();
    auto row = [&](int c, int a, int m, int e) { return ((c * N + a) * Q + m) * de + e; };
    auto col = [&](int a, int m) { return (j * N + a) * Q + m; };
    // Leakage out of the block.
    for (int a = 0; a < nj; ++a)
      for (int m = 0; m < qj; ++m) {
        double inside = 0.0;
        for (int a2 = 0; a2 < nj; ++a2)
          for (int m2 = 0; m2 < qj; ++m2)
            for (int e = 0; e < de; ++e) inside += std::norm(v(row(j, a2, m2, e), col(a, m)));
        worst = std::max(worst, std::sqrt(std::max(0.0, 1.0 - inside)));
      }
    // U_j from the Q-diagonal average, made isometric by its polar factor.
    Matrix u = Matrix::Zero(static_cast<Eigen::Index>(nj) * de, nj);
    for (int a2 = 0; a2 < nj; ++a2)
      for (int e = 0; e < de; ++e)
        for (int a = 0; a < nj; ++a) {
          cplx acc = 0.0;
          for (int m = 0; m < qj; ++m) acc += v(row(j, a2, m, e), col(a, m));
          u(a2 * de + e, a) = acc / static_cast<double>(qj);
        }
    u = linalg::polar_unitary(u);
    for (int a2 = 0; a2 < nj; ++a2)
      for (int m2 = 0; m2 < qj; ++m2)
        for (int e = 0; e < de; ++e)
          for (int a = 0; a < nj; ++a)
            for (int m = 0; m < qj; ++m) {
              const cplx expect = m == m2 ? u(a2 * de + e, a) : cplx(0.0);
              worst = std::max(worst, std::abs(v(row(j, a2, m2, e), col(a, m)) - expect));
            }
  }
  rep.structure_residual = worst;
  rep.structured = worst <= 1e-7;
  return rep;
}

DensityMatrix bipartite_power(const DensityMatrix& rho_ar, int n) {
  int da = 0, dr = 0;
  const Matrix rho = source_matrix(rho_ar, da, dr);
  if (n < 1) throw ValidationError("bipartite_power: n must be positive");
  Matrix acc = rho;
  for (int k = 1; k < n; ++k) acc = linalg::kron(acc, rho);
  std::vector<int> dims, order;
  for (int k = 0; k < n; ++k) {
    dims.push_back(da);
    dims.push_back(dr);
  }
  for (int k = 0; k < n; ++k) order.push_back(2 * k);
  for (int k = 0; k < n; ++k) order.push_back(2 * k + 1);
  int pa = 1, pr = 1;
  for (int k = 0; k < n; ++k) {
    pa *= da;
    pr *= dr;
  }
  return DensityMatrix::trusted(Layout{{"A", pa}, {"R", pr}},
                                linalg::permute_operator(acc, dims, order));
}

}  // namespace qsc
