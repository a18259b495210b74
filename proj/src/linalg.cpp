#include "qsc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qsc/config.hpp"

namespace qsc::linalg {

int product(std::span<const int> dims) {
  return std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<>());
}

std::vector<int> strides(std::span<const int> dims) {
  std::vector<int> s(dims.size(), 1);
  for (int k = static_cast<int>(dims.size()) - 2; k >= 0; --k) s[k] = s[k + 1] * dims[k + 1];
  return s;
}

namespace {

// Linear offsets (in the full layout) of every multi-index over the factors
// in `positions`, enumerated row-major in the order given.
std::vector<int> offsets(std::span<const int> dims, std::span<const int> positions) {
  const auto st = strides(dims);
  std::vector<int> out{0};
  for (int pos : positions) {
    std::vector<int> next;
    next.reserve(out.size() * dims[pos]);
    for (int base : out)
      for (int i = 0; i < dims[pos]; ++i) next.push_back(base + i * st[pos]);
    out = std::move(next);
  }
  return out;
}

std::vector<int> complement(std::span<const int> dims, std::span<const int> keep) {
  std::vector<int> rest;
  for (int k = 0; k < static_cast<int>(dims.size()); ++k)
    if (std::find(keep.begin(), keep.end(), k) == keep.end()) rest.push_back(k);
  return rest;
}

}  // namespace

std::vector<int> permutation_map(std::span<const int> dims, std::span<const int> order) {
  return offsets(dims, order);
}

Matrix permute_operator(const Matrix& op, std::span<const int> dims, std::span<const int> order) {
  const auto map = permutation_map(dims, order);
  const int n = static_cast<int>(map.size());
  Matrix out(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) out(i, j) = op(map[i], map[j]);
  return out;
}

Vector permute_vector(const Vector& v, std::span<const int> dims, std::span<const int> order) {
  const auto map = permutation_map(dims, order);
  Vector out(static_cast<Eigen::Index>(map.size()));
  for (std::size_t i = 0; i < map.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(map[i]);
  return out;
}

Matrix partial_trace(const Matrix& op, std::span<const int> dims, std::span<const int> keep) {
  const auto rest = complement(dims, keep);
  const auto base = offsets(dims, keep);
  const auto off = offsets(dims, rest);
  const int n = static_cast<int>(base.size());
  Matrix out = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      cplx acc = 0.0;
      for (int t : off) acc += op(base[i] + t, base[j] + t);
      out(i, j) = acc;
    }
  return out;
}

Matrix split_vector(const Vector& v, std::span<const int> dims, std::span<const int> keep) {
  const auto rest = complement(dims, keep);
  const auto base = offsets(dims, keep);
  const auto off = offsets(dims, rest);
  Matrix m(static_cast<Eigen::Index>(base.size()), static_cast<Eigen::Index>(off.size()));
  for (std::size_t t = 0; t < off.size(); ++t)
    for (std::size_t i = 0; i < base.size(); ++i)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = v(base[i] + off[t]);
  return m;
}

Matrix reduce_pure(const Vector& v, std::span<const int> dims, std::span<const int> keep) {
  const Matrix m = split_vector(v, dims, keep);
  return m * m.adjoint();
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

RealVector hermitian_eigenvalues(const Matrix& m) {
  const Matrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

Matrix hermitian_function(const Matrix& m, const std::function<double(double)>& f) {
  const Matrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  RealVector fv = es.eigenvalues().unaryExpr(f);
  return es.eigenvectors() * fv.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix sqrt_psd(const Matrix& m) {
  return hermitian_function(m, [](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });
}

double trace_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

Matrix polar_unitary(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double isometry_defect(const Matrix& v) {
  return max_abs(v.adjoint() * v - Matrix::Identity(v.cols(), v.cols()));
}

Matrix random_gaussian(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = cplx(re, im);
    }
  return g;
}

Matrix qr_orthonormalize(const Matrix& m) {
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index k = 0; k < m.cols(); ++k) {
    const cplx d = r(k, k);
    const double a = std::abs(d);
    if (a > 0.0) q.col(k) *= d / a;
  }
  return q;
}

Matrix random_isometry(int rows, int cols, Rng& rng) {
  return qr_orthonormalize(random_gaussian(rows, cols, rng));
}

Matrix stiefel_project(const Matrix& point, const Matrix& ambient) {
  const Matrix s = point.adjoint() * ambient;
  return ambient - point * (0.5 * (s + s.adjoint()));
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x5175u};
  return Rng(seq);
}

}  // namespace qsc::linalg
