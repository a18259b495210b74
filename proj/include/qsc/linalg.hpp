#pragma once

// Dense complex helpers shared by the modules: tensor-factor index
// gymnastics, Hermitian spectral functions and Stiefel-manifold primitives.
// Factor order is row-major Kronecker: the first factor is most significant.

#include <complex>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qsc {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Rng = std::mt19937_64;

namespace linalg {

int product(std::span<const int> dims);

/// Row-major strides for `dims`.
std::vector<int> strides(std::span<const int> dims);

/// For each linear index in the permuted layout, the linear index in the
/// original layout. `order[k]` is the original position of the factor that
/// ends up at position k.
std::vector<int> permutation_map(std::span<const int> dims, std::span<const int> order);

Matrix permute_operator(const Matrix& op, std::span<const int> dims, std::span<const int> order);
Vector permute_vector(const Vector& v, std::span<const int> dims, std::span<const int> order);

/// Partial trace keeping the factors at positions `keep` (ascending).
Matrix partial_trace(const Matrix& op, std::span<const int> dims, std::span<const int> keep);

/// Reduced density operator of |v><v| on the factors at positions `keep` (ascending).
Matrix reduce_pure(const Vector& v, std::span<const int> dims, std::span<const int> keep);

/// Reshape a vector into a (keep x rest) matrix, the keep factors forming the row index.
Matrix split_vector(const Vector& v, std::span<const int> dims, std::span<const int> keep);

Matrix kron(const Matrix& a, const Matrix& b);

/// Eigenvalues (ascending) of the Hermitian part of `m`.
RealVector hermitian_eigenvalues(const Matrix& m);

/// f applied to the Hermitian part of `m` through its eigendecomposition.
Matrix hermitian_function(const Matrix& m, const std::function<double(double)>& f);

/// Square root of a PSD matrix, clipping small negative eigenvalues.
Matrix sqrt_psd(const Matrix& m);

/// Sum of singular values.
double trace_norm(const Matrix& m);

/// Unitary (or isometric) polar factor of `m`.
Matrix polar_unitary(const Matrix& m);

double max_abs(const Matrix& m);

/// max |V^dagger V - 1| elementwise.
double isometry_defect(const Matrix& v);

Matrix random_gaussian(int rows, int cols, Rng& rng);

/// Haar-like isometry from the QR of a Gaussian matrix, rows >= cols.
Matrix random_isometry(int rows, int cols, Rng& rng);

/// Q factor of the thin QR with non-negative diagonal of R.
Matrix qr_orthonormalize(const Matrix& m);

/// Tangent-space projection of an ambient gradient at a Stiefel point.
Matrix stiefel_project(const Matrix& point, const Matrix& ambient);

/// Deterministic per-stream generator derived from a base seed.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace linalg
}  // namespace qsc
