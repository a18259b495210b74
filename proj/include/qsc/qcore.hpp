#pragma once

// Labeled tensor-factor states and channels.
//
// A Layout is an ordered list of (label, dim) factors; matrices are indexed
// row-major over the factors with the first factor most significant.
// Fidelity is the square-root fidelity ||sqrt(rho) sqrt(sigma)||_1.

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "qsc/config.hpp"
#include "qsc/linalg.hpp"

namespace qsc {

struct Factor {
  std::string label;
  int dim = 1;

  bool operator==(const Factor&) const = default;
};

class Layout {
 public:
  Layout() = default;
  Layout(std::vector<Factor> factors);
  Layout(std::initializer_list<Factor> factors) : Layout(std::vector<Factor>(factors)) {}

  const std::vector<Factor>& factors() const { return factors_; }
  std::size_t size() const { return factors_.size(); }
  bool empty() const { return factors_.empty(); }
  const Factor& operator[](std::size_t k) const { return factors_[k]; }

  std::vector<int> dims() const;
  std::vector<std::string> labels() const;
  int total_dim() const;

  bool contains(const std::string& label) const;
  /// Position of `label`; throws LabelError when absent.
  int index_of(const std::string& label) const;
  int dim_of(const std::string& label) const { return factors_[index_of(label)].dim; }

  /// Sub-layout with the given labels, in this layout's order.
  Layout select(const std::vector<std::string>& labels) const;
  Layout without(const std::vector<std::string>& labels) const;
  Layout concat(const Layout& other) const;
  Layout relabeled(const std::vector<std::string>& labels) const;

  bool operator==(const Layout&) const = default;

 private:
  std::vector<Factor> factors_;
};

std::string to_string(const Layout& layout);

/// PSD unit-trace operator over a factor layout.
class DensityMatrix {
 public:
  /// Validates shape, Hermiticity, trace and positivity against kTolerances.
  DensityMatrix(Layout layout, Matrix matrix);

  /// Skips the positivity check; used for results of trace-preserving
  /// operations on already-valid inputs.
  static DensityMatrix trusted(Layout layout, Matrix matrix);

  const Layout& layout() const { return layout_; }
  const Matrix& matrix() const { return matrix_; }
  int dim() const { return static_cast<int>(matrix_.rows()); }

  /// Spectrum (ascending), eigenvalues in [-tol, 0) clipped to 0.
  RealVector spectrum() const;

  DensityMatrix relabeled(const std::vector<std::string>& labels) const;

 private:
  struct TrustedTag {};
  DensityMatrix(Layout layout, Matrix matrix, TrustedTag);

  Layout layout_;
  Matrix matrix_;
};

class PureState {
 public:
  PureState(Layout layout, Vector vector);

  const Layout& layout() const { return layout_; }
  const Vector& vector() const { return vector_; }

  DensityMatrix density() const;

 private:
  Layout layout_;
  Vector vector_;
};

/// Operator acting on the factors of `layout` (e.g. a unitary on a subsystem).
struct Operator {
  Layout layout;
  Matrix matrix;
};

/// CPTP map stored as its Stinespring isometry V: input -> output (x) env.
/// Rows of V are indexed by output factors followed by env factors.
class Channel {
 public:
  Channel(Layout input, Layout output, Layout env, Matrix isometry);

  /// Unitary/isometric channel with a trivial environment.
  static Channel isometric(Layout input, Layout output, Matrix v);
  static Channel identity(const Layout& factors);
  /// Replaces every input by the maximally mixed state on `output`.
  static Channel depolarizing(const Layout& input, const Layout& output);
  /// Stinespring isometry assembled from Kraus operators K_e (env index e).
  static Channel from_kraus(Layout input, Layout output, const std::vector<Matrix>& kraus,
                            const std::string& env_label = "E");

  const Layout& input() const { return input_; }
  const Layout& output() const { return output_; }
  const Layout& env() const { return env_; }
  const Matrix& isometry() const { return isometry_; }

  /// Kraus operators K_e = (1_out (x) <e|) V.
  std::vector<Matrix> kraus() const;

 private:
  Layout input_;
  Layout output_;
  Layout env_;
  Matrix isometry_;
};

// ---------------------------------------------------------------------------
// Operations

DensityMatrix partial_trace(const DensityMatrix& state, const std::vector<std::string>& keep);
DensityMatrix partial_trace(const PureState& state, const std::vector<std::string>& keep);

/// Permute the factors of `state` into the order given by `labels`.
DensityMatrix reorder(const DensityMatrix& state, const std::vector<std::string>& labels);
PureState reorder(const PureState& state, const std::vector<std::string>& labels);

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);
PureState tensor(const PureState& a, const PureState& b);

/// Spectral purification; the ancilla has the same dimension as the system.
PureState purify(const DensityMatrix& rho, const std::string& ancilla_label);

/// Square-root fidelity ||sqrt(rho) sqrt(sigma)||_1 in [0, 1].
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

/// Unitary U on the complement of `pivot` maximizing |<psi|(1 (x) U)|phi>|;
/// the maximum equals the fidelity of the pivot marginals.
Operator uhlmann_unitary(const PureState& psi, const PureState& phi,
                         const std::vector<std::string>& pivot);

/// Apply `ch` to its input factors of `state`. Outputs (then env, when kept)
/// take the place of the first input factor; other factors keep their order.
DensityMatrix apply_channel(const Channel& ch, const DensityMatrix& state, bool keep_env = false);

/// Apply an operator acting on a subset of factors of a pure state.
PureState apply_operator(const Operator& op, const PureState& state);

DensityMatrix random_state(const Layout& layout, std::uint64_t seed);
PureState random_pure_state(const Layout& layout, std::uint64_t seed);
Matrix random_isometry(int in_dim, int out_dim, std::uint64_t seed);

DensityMatrix maximally_mixed(const Layout& layout);
DensityMatrix basis_state(const Layout& layout, int index);

}  // namespace qsc
