#include "qsc/qcore.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace qsc {

// ---------------------------------------------------------------------------
// Layout

Layout::Layout(std::vector<Factor> factors) : factors_(std::move(factors)) {
  std::set<std::string> seen;
  for (const auto& f : factors_) {
    if (f.dim < 1) throw DimensionError("factor '" + f.label + "' has non-positive dimension");
    if (!seen.insert(f.label).second) throw LabelError("duplicate factor label '" + f.label + "'");
  }
}

std::vector<int> Layout::dims() const {
  std::vector<int> d;
  d.reserve(factors_.size());
  for (const auto& f : factors_) d.push_back(f.dim);
  return d;
}

std::vector<std::string> Layout::labels() const {
  std::vector<std::string> l;
  l.reserve(factors_.size());
  for (const auto& f : factors_) l.push_back(f.label);
  return l;
}

int Layout::total_dim() const {
  int d = 1;
  for (const auto& f : factors_) d *= f.dim;
  return d;
}

bool Layout::contains(const std::string& label) const {
  return std::any_of(factors_.begin(), factors_.end(),
                     [&](const Factor& f) { return f.label == label; });
}

int Layout::index_of(const std::string& label) const {
  for (std::size_t k = 0; k < factors_.size(); ++k)
    if (factors_[k].label == label) return static_cast<int>(k);
  throw LabelError("unknown factor label '" + label + "' in layout " + to_string(*this));
}

Layout Layout::select(const std::vector<std::string>& labels) const {
  for (const auto& l : labels) index_of(l);
  std::vector<Factor> out;
  for (const auto& f : factors_)
    if (std::find(labels.begin(), labels.end(), f.label) != labels.end()) out.push_back(f);
  return Layout(std::move(out));
}

Layout Layout::without(const std::vector<std::string>& labels) const {
  for (const auto& l : labels) index_of(l);
  std::vector<Factor> out;
  for (const auto& f : factors_)
    if (std::find(labels.begin(), labels.end(), f.label) == labels.end()) out.push_back(f);
  return Layout(std::move(out));
}

Layout Layout::concat(const Layout& other) const {
  auto f = factors_;
  f.insert(f.end(), other.factors_.begin(), other.factors_.end());
  return Layout(std::move(f));
}

Layout Layout::relabeled(const std::vector<std::string>& labels) const {
  if (labels.size() != factors_.size()) throw LabelError("relabel: label count mismatch");
  std::vector<Factor> f = factors_;
  for (std::size_t k = 0; k < f.size(); ++k) f[k].label = labels[k];
  return Layout(std::move(f));
}

std::string to_string(const Layout& layout) {
  std::ostringstream os;
  os << "[";
  for (std::size_t k = 0; k < layout.size(); ++k) {
    if (k) os << ",";
    os << layout[k].label << ":" << layout[k].dim;
  }
  os << "]";
  return os.str();
}

namespace {

std::vector<int> positions_of(const Layout& layout, const std::vector<std::string>& labels) {
  std::vector<int> pos;
  for (const auto& l : labels) pos.push_back(layout.index_of(l));
  return pos;
}

}  // namespace

// ---------------------------------------------------------------------------
// DensityMatrix / PureState

DensityMatrix::DensityMatrix(Layout layout, Matrix matrix, TrustedTag)
    : layout_(std::move(layout)), matrix_(std::move(matrix)) {
  const int d = layout_.total_dim();
  if (matrix_.rows() != d || matrix_.cols() != d)
    throw DimensionError("density matrix shape does not match layout " + to_string(layout_));
}

DensityMatrix DensityMatrix::trusted(Layout layout, Matrix matrix) {
  return DensityMatrix(std::move(layout), std::move(matrix), TrustedTag{});
}

DensityMatrix::DensityMatrix(Layout layout, Matrix matrix)
    : DensityMatrix(std::move(layout), std::move(matrix), TrustedTag{}) {
  const auto& tol = kTolerances;
  const double herm = linalg::max_abs(matrix_ - matrix_.adjoint());
  if (herm > tol.hermitian)
    throw ValidationError("density matrix not Hermitian (deviation " + std::to_string(herm) + ")");
  const double tr = matrix_.trace().real();
  if (std::abs(tr - 1.0) > tol.trace)
    throw ValidationError("density matrix trace " + std::to_string(tr) + " != 1");
  const double min_ev = linalg::hermitian_eigenvalues(matrix_).minCoeff();
  if (min_ev < -tol.min_eigenvalue)
    throw ValidationError("density matrix has eigenvalue " + std::to_string(min_ev));
}

RealVector DensityMatrix::spectrum() const {
  RealVector ev = linalg::hermitian_eigenvalues(matrix_);
  for (auto& x : ev) {
    if (x < -kTolerances.min_eigenvalue)
      throw ValidationError("negative eigenvalue " + std::to_string(x) + " beyond clipping tolerance");
    if (x < 0.0) x = 0.0;
  }
  return ev;
}

DensityMatrix DensityMatrix::relabeled(const std::vector<std::string>& labels) const {
  return trusted(layout_.relabeled(labels), matrix_);
}

PureState::PureState(Layout layout, Vector vector)
    : layout_(std::move(layout)), vector_(std::move(vector)) {
  if (vector_.size() != layout_.total_dim())
    throw DimensionError("state vector length does not match layout " + to_string(layout_));
  const double norm = vector_.norm();
  if (std::abs(norm - 1.0) > kTolerances.unit_norm)
    throw ValidationError("state vector norm " + std::to_string(norm) + " != 1");
}

DensityMatrix PureState::density() const {
  return DensityMatrix::trusted(layout_, vector_ * vector_.adjoint());
}

// ---------------------------------------------------------------------------
// Channel

Channel::Channel(Layout input, Layout output, Layout env, Matrix isometry)
    : input_(std::move(input)), output_(std::move(output)), env_(std::move(env)),
      isometry_(std::move(isometry)) {
  if (isometry_.cols() != input_.total_dim() ||
      isometry_.rows() != output_.total_dim() * env_.total_dim())
    throw DimensionError("channel isometry shape does not match its factor layouts");
  for (const auto& f : env_.factors())
    if (output_.contains(f.label)) throw LabelError("env label '" + f.label + "' clashes with output");
  const double defect = linalg::isometry_defect(isometry_);
  if (defect > kTolerances.isometry)
    throw ValidationError("channel isometry defect " + std::to_string(defect));
}

Channel Channel::isometric(Layout input, Layout output, Matrix v) {
  return Channel(std::move(input), std::move(output), Layout{}, std::move(v));
}

Channel Channel::identity(const Layout& factors) {
  const int d = factors.total_dim();
  return isometric(factors, factors, Matrix::Identity(d, d));
}

Channel Channel::depolarizing(const Layout& input, const Layout& output) {
  // V|i> = sum_k |k>_out |k>_E1 |i>_E2 / sqrt(d_out)
  const int din = input.total_dim();
  const int dout = output.total_dim();
  Layout env{{"E_dep1", dout}, {"E_dep2", din}};
  Matrix v = Matrix::Zero(static_cast<Eigen::Index>(dout) * dout * din, din);
  const double amp = 1.0 / std::sqrt(static_cast<double>(dout));
  for (int i = 0; i < din; ++i)
    for (int k = 0; k < dout; ++k) v((k * dout + k) * din + i, i) = amp;
  return Channel(input, output, std::move(env), std::move(v));
}

Channel Channel::from_kraus(Layout input, Layout output, const std::vector<Matrix>& kraus,
                            const std::string& env_label) {
  const int ne = static_cast<int>(kraus.size());
  const int dout = output.total_dim();
  const int din = input.total_dim();
  Matrix v = Matrix::Zero(static_cast<Eigen::Index>(dout) * ne, din);
  for (int e = 0; e < ne; ++e) {
    if (kraus[e].rows() != dout || kraus[e].cols() != din)
      throw DimensionError("Kraus operator shape mismatch");
    for (int o = 0; o < dout; ++o) v.row(o * ne + e) = kraus[e].row(o);
  }
  return Channel(std::move(input), std::move(output), Layout{{env_label, ne}}, std::move(v));
}

std::vector<Matrix> Channel::kraus() const {
  const int ne = env_.total_dim();
  const int dout = output_.total_dim();
  std::vector<Matrix> k(ne, Matrix(dout, input_.total_dim()));
  for (int e = 0; e < ne; ++e)
    for (int o = 0; o < dout; ++o) k[e].row(o) = isometry_.row(o * ne + e);
  return k;
}

// ---------------------------------------------------------------------------
// Operations

DensityMatrix partial_trace(const DensityMatrix& state, const std::vector<std::string>& keep) {
  const Layout kept = state.layout().select(keep);
  const auto pos = positions_of(state.layout(), kept.labels());
  const auto dims = state.layout().dims();
  return DensityMatrix::trusted(kept, linalg::partial_trace(state.matrix(), dims, pos));
}

DensityMatrix partial_trace(const PureState& state, const std::vector<std::string>& keep) {
  const Layout kept = state.layout().select(keep);
  const auto pos = positions_of(state.layout(), kept.labels());
  const auto dims = state.layout().dims();
  return DensityMatrix::trusted(kept, linalg::reduce_pure(state.vector(), dims, pos));
}

DensityMatrix reorder(const DensityMatrix& state, const std::vector<std::string>& labels) {
  if (labels.size() != state.layout().size()) throw LabelError("reorder: label count mismatch");
  const auto order = positions_of(state.layout(), labels);
  std::vector<Factor> f;
  for (int k : order) f.push_back(state.layout()[k]);
  const auto dims = state.layout().dims();
  return DensityMatrix::trusted(Layout(std::move(f)),
                                linalg::permute_operator(state.matrix(), dims, order));
}

PureState reorder(const PureState& state, const std::vector<std::string>& labels) {
  if (labels.size() != state.layout().size()) throw LabelError("reorder: label count mismatch");
  const auto order = positions_of(state.layout(), labels);
  std::vector<Factor> f;
  for (int k : order) f.push_back(state.layout()[k]);
  const auto dims = state.layout().dims();
  return PureState(Layout(std::move(f)), linalg::permute_vector(state.vector(), dims, order));
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  return DensityMatrix::trusted(a.layout().concat(b.layout()), linalg::kron(a.matrix(), b.matrix()));
}

PureState tensor(const PureState& a, const PureState& b) {
  return PureState(a.layout().concat(b.layout()), linalg::kron(a.vector(), b.vector()));
}

PureState purify(const DensityMatrix& rho, const std::string& ancilla_label) {
  const int d = rho.dim();
  const Matrix& m = rho.matrix();
  Layout layout = rho.layout().concat(Layout{{ancilla_label, d}});
  Vector psi = Vector::Zero(static_cast<Eigen::Index>(d) * d);

  // Diagonal states purify in the computational basis: sum_i sqrt(rho_ii) |i>|i>.
  if (linalg::max_abs(m - Matrix(m.diagonal().asDiagonal())) <= kTolerances.hermitian) {
    for (int i = 0; i < d; ++i) {
      const double lambda = m(i, i).real();
      if (lambda < -kTolerances.min_eigenvalue) throw ValidationError("purify: state has negative eigenvalue");
      psi(static_cast<Eigen::Index>(i) * d + i) = std::sqrt(std::max(lambda, 0.0));
    }
    psi /= psi.norm();
    return PureState(std::move(layout), std::move(psi));
  }

  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
  // |psi> = sum_k sqrt(lambda_k) |v_k> |k>, largest eigenvalue on ancilla |0>
  const double floor = 1e-14 * std::max(es.eigenvalues().maxCoeff(), 1.0);
  for (int k = 0; k < d; ++k) {
    const int src = d - 1 - k;
    double lambda = es.eigenvalues()(src);
    if (lambda < -kTolerances.min_eigenvalue)
      throw ValidationError("purify: state has negative eigenvalue");
    if (lambda <= floor) continue;
    const double amp = std::sqrt(lambda);
    for (int i = 0; i < d; ++i) psi(static_cast<Eigen::Index>(i) * d + k) += amp * es.eigenvectors()(i, src);
  }
  psi /= psi.norm();
  return PureState(std::move(layout), std::move(psi));
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.layout().dims() != sigma.layout().dims())
    throw DimensionError("fidelity: dimension mismatch " + to_string(rho.layout()) + " vs " +
                         to_string(sigma.layout()));
  const Matrix a = linalg::sqrt_psd(rho.matrix());
  const Matrix b = linalg::sqrt_psd(sigma.matrix());
  return std::clamp(linalg::trace_norm(a * b), 0.0, 1.0);
}

Operator uhlmann_unitary(const PureState& psi, const PureState& phi,
                         const std::vector<std::string>& pivot) {
  if (psi.layout() != phi.layout()) throw LabelError("uhlmann_unitary: layouts differ");
  for (const auto& l : pivot)
    if (!psi.layout().contains(l)) throw LabelError("uhlmann_unitary: pivot '" + l + "' not shared");
  const Layout pivot_layout = psi.layout().select(pivot);
  const Layout rest = psi.layout().without(pivot);
  const auto dims = psi.layout().dims();
  const auto keep = positions_of(psi.layout(), pivot_layout.labels());
  // rows: pivot index, columns: complement index (complement in layout order)
  const Matrix a = linalg::split_vector(psi.vector(), dims, keep);
  const Matrix b = linalg::split_vector(phi.vector(), dims, keep);
  // <psi|(1 (x) U)|phi> = Tr(U^T A^dagger B); maximized by U^T = Y X^dagger for A^dagger B = X S Y^dagger
  const Matrix m = a.adjoint() * b;
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix ut = svd.matrixV() * svd.matrixU().adjoint();
  return Operator{rest, ut.transpose()};
}

DensityMatrix apply_channel(const Channel& ch, const DensityMatrix& state, bool keep_env) {
  const Layout& in = ch.input();
  const Layout& L = state.layout();
  for (const auto& f : in.factors()) {
    if (!L.contains(f.label))
      throw LabelError("apply_channel: input factor '" + f.label + "' not in state " + to_string(L));
    if (L.dim_of(f.label) != f.dim)
      throw DimensionError("apply_channel: factor '" + f.label + "' dimension mismatch");
  }
  const Layout rest = L.without(in.labels());
  for (const auto& f : ch.output().concat(ch.env()).factors())
    if (rest.contains(f.label))
      throw LabelError("apply_channel: output label '" + f.label + "' clashes with untouched factor");

  // Move inputs to the front, apply V (x) 1, then arrange the final order.
  std::vector<std::string> front = in.labels();
  for (const auto& l : rest.labels()) front.push_back(l);
  const Matrix rho = reorder(state, front).matrix();
  const int dr = rest.total_dim();
  const Matrix big_v = linalg::kron(ch.isometry(), Matrix::Identity(dr, dr));
  Matrix out = big_v * rho * big_v.adjoint();

  Layout produced = ch.output().concat(ch.env()).concat(rest);
  if (!keep_env && !ch.env().empty()) {
    const Layout kept = ch.output().concat(rest);
    const auto pos = positions_of(produced, kept.labels());
    out = linalg::partial_trace(out, produced.dims(), pos);
    produced = kept;
  }

  // Target order: untouched factors before the first input, then outputs (+env), then the rest.
  const int first_in = L.index_of(in.factors().front().label);
  std::vector<std::string> target;
  for (int k = 0; k < first_in; ++k)
    if (!in.contains(L[k].label)) target.push_back(L[k].label);
  for (const auto& l : ch.output().labels()) target.push_back(l);
  if (keep_env)
    for (const auto& l : ch.env().labels()) target.push_back(l);
  for (int k = first_in; k < static_cast<int>(L.size()); ++k)
    if (!in.contains(L[k].label)) target.push_back(L[k].label);
  return reorder(DensityMatrix::trusted(produced, std::move(out)), target);
}

PureState apply_operator(const Operator& op, const PureState& state) {
  const Layout& L = state.layout();
  for (const auto& f : op.layout.factors())
    if (!L.contains(f.label) || L.dim_of(f.label) != f.dim)
      throw LabelError("apply_operator: factor '" + f.label + "' missing or mismatched");
  const Layout rest = L.without(op.layout.labels());
  std::vector<std::string> front = op.layout.labels();
  for (const auto& l : rest.labels()) front.push_back(l);
  const PureState moved = reorder(state, front);
  const int dr = rest.total_dim();
  Vector v = linalg::kron(op.matrix, Matrix::Identity(dr, dr)) * moved.vector();
  v /= v.norm();
  return reorder(PureState(moved.layout(), std::move(v)), L.labels());
}

DensityMatrix random_state(const Layout& layout, std::uint64_t seed) {
  auto rng = linalg::make_rng(seed, 1);
  const int d = layout.total_dim();
  const Matrix g = linalg::random_gaussian(d, d, rng);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  rho = 0.5 * (rho + rho.adjoint());
  return DensityMatrix(layout, std::move(rho));
}

PureState random_pure_state(const Layout& layout, std::uint64_t seed) {
  auto rng = linalg::make_rng(seed, 2);
  Vector v = linalg::random_gaussian(layout.total_dim(), 1, rng).col(0);
  v /= v.norm();
  return PureState(layout, std::move(v));
}

Matrix random_isometry(int in_dim, int out_dim, std::uint64_t seed) {
  if (in_dim < 1 || out_dim < in_dim)
    throw DimensionError("random_isometry requires out_dim >= in_dim >= 1");
  auto rng = linalg::make_rng(seed, 3);
  return linalg::random_isometry(out_dim, in_dim, rng);
}

DensityMatrix maximally_mixed(const Layout& layout) {
  const int d = layout.total_dim();
  return DensityMatrix::trusted(layout, Matrix::Identity(d, d) / static_cast<double>(d));
}

DensityMatrix basis_state(const Layout& layout, int index) {
  const int d = layout.total_dim();
  if (index < 0 || index >= d) throw DimensionError("basis_state index out of range");
  Matrix m = Matrix::Zero(d, d);
  m(index, index) = 1.0;
  return DensityMatrix::trusted(layout, std::move(m));
}

}  // namespace qsc
