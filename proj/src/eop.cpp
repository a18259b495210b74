#include "qsc/eop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qsc/ki.hpp"
#include "qsc/parallel.hpp"
#include "qsc/renyi.hpp"
#include "qsc/stiefel.hpp"

namespace qsc {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

// Purification amplitudes as one |R| x |B| matrix per a.
struct Purified {
  int da = 0, dr = 0, db = 0;
  std::vector<Matrix> psi_a;
};

Purified split_purification(const PureState& psi) {
  Purified p;
  p.da = psi.layout().dim_of("A");
  p.dr = psi.layout().dim_of("R");
  p.db = psi.layout().dim_of("B");
  const Vector v = reorder(psi, {"A", "R", "B"}).vector();
  for (int a = 0; a < p.da; ++a) {
    Matrix m(p.dr, p.db);
    for (int r = 0; r < p.dr; ++r)
      for (int b = 0; b < p.db; ++b) m(r, b) = v((a * p.dr + r) * p.db + b);
    p.psi_a.push_back(std::move(m));
  }
  return p;
}

class EopObjective {
 public:
  EopObjective(const Purified& p, int env, double alpha) : p_(p), env_(env), alpha_(alpha) {}

  // X[(r, f), (a, e)] so that sigma^{RF} = X X^dagger shares its spectrum with sigma^{AE}.
  Matrix amplitudes(const Matrix& v) const {
    const int F = p_.db;
    Matrix x(p_.dr * F, p_.da * env_);
    for (int a = 0; a < p_.da; ++a) {
      const Matrix w = p_.psi_a[a] * v.transpose();  // r x (e, f)
      for (int r = 0; r < p_.dr; ++r)
        for (int e = 0; e < env_; ++e)
          for (int f = 0; f < F; ++f) x(r * F + f, a * env_ + e) = w(r, e * F + f);
    }
    return x;
  }

  double operator()(const std::vector<Matrix>& point, std::vector<Matrix>* grad) const {
    const Matrix& v = point[0];
    const Matrix x = amplitudes(v);
    const Matrix sigma = x * x.adjoint();
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (sigma + sigma.adjoint()));
    const RealVector lam = es.eigenvalues().cwiseMax(0.0);
    const int k = static_cast<int>(lam.size());
    const double clip = kTolerances.log_clip;

    const double value = spectral_entropy(lam, alpha_);
    if (!grad) return value;
    RealVector dvals(k);
    if (alpha_ == 1.0) {
      for (int i = 0; i < k; ++i) dvals(i) = -(std::log2(std::max(lam(i), clip)) + 1.0 / kLn2);
    } else {
      double tr = 0.0;
      for (int i = 0; i < k; ++i) tr += std::pow(lam(i), alpha_);
      const double scale = alpha_ / ((1.0 - alpha_) * kLn2 * tr);
      for (int i = 0; i < k; ++i) dvals(i) = scale * std::pow(std::max(lam(i), clip), alpha_ - 1.0);
    }
    const Matrix d = es.eigenvectors() * dvals.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
    const Matrix z = d * x;
    const int F = p_.db;
    Matrix g = Matrix::Zero(v.rows(), v.cols());
    Matrix za(p_.dr, env_ * F);
    for (int a = 0; a < p_.da; ++a) {
      for (int r = 0; r < p_.dr; ++r)
        for (int e = 0; e < env_; ++e)
          for (int f = 0; f < F; ++f) za(r, e * F + f) = z(r * F + f, a * env_ + e);
      g.noalias() += 2.0 * za.transpose() * p_.psi_a[a].conjugate();
    }
    grad->assign(1, std::move(g));
    return value;
  }

 private:
  const Purified& p_;
  int env_;
  double alpha_;
};

int default_env(const DensityMatrix& rho_ar) {
  const int da = rho_ar.layout().dim_of("A");
  const int dr = rho_ar.layout().dim_of("R");
  return da * da * dr * dr;
}

void check_source(const DensityMatrix& rho_ar) {
  const Layout& L = rho_ar.layout();
  if (L.size() != 2 || !L.contains("A") || !L.contains("R"))
    throw LabelError("eop needs factors exactly {A, R}, got " + to_string(L));
}

// Deterministic starts: B -> E (the identity channel into E) and B -> F
// (a constant output), then random isometries.
Matrix starting_point(int restart, int env, int db, std::uint64_t seed) {
  const int F = db;
  if (restart == 0 && env >= db) {
    Matrix v = Matrix::Zero(static_cast<Eigen::Index>(env) * F, db);
    for (int b = 0; b < db; ++b) v(static_cast<Eigen::Index>(b) * F, b) = 1.0;
    return v;
  }
  if (restart == 1) {
    Matrix v = Matrix::Zero(static_cast<Eigen::Index>(env) * F, db);
    for (int b = 0; b < db; ++b) v(b, b) = 1.0;
    return v;
  }
  auto rng = linalg::make_rng(seed, static_cast<std::uint64_t>(restart));
  return linalg::random_isometry(env * F, db, rng);
}

}  // namespace

std::string to_string(EopStatus s) { return s == EopStatus::converged ? "converged" : "max_iter"; }

double EopResult::spread() const {
  if (per_restart_values.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(per_restart_values.begin(), per_restart_values.end());
  return *hi - *lo;
}

EopResult eop(const DensityMatrix& rho_ar, double alpha, const EopOptions& opts_in) {
  check_source(rho_ar);
  if (!(alpha > 0.0)) throw ValidationError("eop: alpha must be > 0");
  EopOptions opts = opts_in;
  const int env = opts.env_dim > 0 ? opts.env_dim : default_env(rho_ar);
  if (opts.env_dim < 0) throw ValidationError("eop: env_dim must be >= 1");
  if (opts.restarts < 1) throw ValidationError("eop: restarts must be >= 1");

  const PureState psi = purify(reorder(rho_ar, {"A", "R"}), "B");
  const Purified parts = split_purification(psi);
  const int db = parts.db;
  const long entries = static_cast<long>(env) * db * db;
  if (entries > opts.max_parameters)
    throw BudgetError("eop: Stinespring isometry with " + std::to_string(entries) +
                      " entries exceeds the budget of " + std::to_string(opts.max_parameters));
  if (opts.warm_start && (opts.warm_start->rows() != static_cast<Eigen::Index>(env) * db || opts.warm_start->cols() != db))
    throw DimensionError("eop: warm start has the wrong shape");

  const EopObjective objective(parts, env, alpha);
  const StiefelObjective f = [&objective](const std::vector<Matrix>& x, std::vector<Matrix>* g) {
    return objective(x, g);
  };
  const EopObjective von_neumann(parts, env, 1.0);
  const StiefelObjective f1 = [&von_neumann](const std::vector<Matrix>& x, std::vector<Matrix>* g) {
    return von_neumann(x, g);
  };
  StiefelOptions sopts;
  sopts.max_iter = opts.max_iter;
  sopts.tol = opts.tol;

  std::vector<StiefelResult> runs(opts.restarts);
  parallel_for(opts.restarts, opts.threads, [&](int r) {
    Matrix start = (r == 0 && opts.warm_start) ? *opts.warm_start : starting_point(r, env, db, opts.seed);
    // At orders below 1, random starts first descend on the von Neumann objective.
    if (alpha < 1.0 && r >= 2) start = stiefel_minimize(f1, {std::move(start)}, sopts).point[0];
    runs[r] = stiefel_minimize(f, {std::move(start)}, sopts);
  });

  std::vector<double> values;
  int best = 0;
  for (int r = 0; r < opts.restarts; ++r) {
    values.push_back(runs[r].value);
    if (runs[r].value < runs[best].value) best = r;
  }
  const Matrix& v = runs[best].point[0];
  return EopResult{
      .value = std::max(runs[best].value, 0.0),
      .alpha = alpha,
      .optimal_channel = Channel(Layout{{"B", db}}, Layout{{"E", env}}, Layout{{"F", db}}, v),
      .purification = psi,
      .restarts = opts.restarts,
      .best_restart = best,
      .per_restart_values = std::move(values),
      .status = runs[best].converged ? EopStatus::converged : EopStatus::max_iter,
  };
}

double eop_objective(const PureState& purification, const Channel& ch, double alpha) {
  const DensityMatrix out = apply_channel(ch, purification.density());
  return renyi_entropy(partial_trace(out, {"A", "E"}), alpha).value;
}

double z_alpha(const DensityMatrix& rho_ar, double alpha, const EopOptions& opts) {
  if (!(alpha > 1.0)) throw ValidationError("z_alpha: alpha must be > 1");
  return (1.0 - alpha) * eop(rho_ar, alpha, opts).value;
}

double RegularizationEstimate::upper_estimate() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [n, v] : per_n) best = std::min(best, v);
  return best;
}

RegularizationEstimate eop_regularized_estimate(const DensityMatrix& rho_ar, double alpha, int n_max,
                                                const EopOptions& opts) {
  check_source(rho_ar);
  if (n_max < 1) throw ValidationError("eop_regularized_estimate: n_max must be >= 1");
  const DensityMatrix rho = reorder(rho_ar, {"A", "R"});
  const int dar = rho.dim();
  {
    long total = 1;
    for (int n = 0; n < n_max; ++n) total *= dar;
    if (total > kMaxStateDim)
      throw BudgetError("eop_regularized_estimate: (|A||R|)^n = " + std::to_string(total) +
                        " exceeds the state dimension budget of " + std::to_string(kMaxStateDim));
  }

  RegularizationEstimate est;
  est.alpha = alpha;
  const EopResult first = eop(rho, alpha, opts);
  est.per_n.emplace_back(1, first.value);
  const int env1 = first.optimal_channel.output().total_dim();
  const int db1 = first.optimal_channel.input().total_dim();

  Matrix v_power = first.optimal_channel.isometry();
  PureState psi_power = first.purification;
  int env_n = env1, db_n = db1;
  for (int n = 2; n <= n_max; ++n) {
    // Product of the n = 1 optimum, re-expressed on the purifying basis used at block length n.
    const Matrix kv = linalg::kron(v_power, first.optimal_channel.isometry());
    const std::vector<int> vdims{env_n, db_n, env1, db1};
    const std::vector<int> vorder{0, 2, 1, 3};
    Matrix rows_perm(kv.rows(), kv.cols());
    const auto map = linalg::permutation_map(vdims, vorder);
    for (Eigen::Index t = 0; t < kv.rows(); ++t) rows_perm.row(t) = kv.row(map[t]);

    const PureState prod =
        tensor(PureState(psi_power.layout().relabeled({"A1", "R1", "B1"}), psi_power.vector()),
               PureState(first.purification.layout().relabeled({"A2", "R2", "B2"}), first.purification.vector()));
    const PureState arranged = reorder(prod, {"A1", "A2", "R1", "R2", "B1", "B2"});
    env_n *= env1;
    db_n *= db1;
    const int da_n = psi_power.layout().dim_of("A") * first.purification.layout().dim_of("A");
    const int dr_n = psi_power.layout().dim_of("R") * first.purification.layout().dim_of("R");
    const PureState phi(Layout{{"A", da_n}, {"R", dr_n}, {"B", db_n}}, arranged.vector());

    const DensityMatrix rho_n = bipartite_power(rho, n);
    const PureState psi_n = purify(rho_n, "B");
    const Operator u = uhlmann_unitary(psi_n, phi, {"A", "R"});
    const Matrix warm = rows_perm * u.matrix.adjoint();

    EopOptions o = opts;
    o.env_dim = env_n;
    o.warm_start = warm;
    const EopResult res = eop(rho_n, alpha, o);
    est.per_n.emplace_back(n, res.value / n);

    v_power = rows_perm;
    psi_power = phi;
  }
  return est;
}

std::vector<ExplorationPoint> eop_alpha_exploration(const DensityMatrix& rho_ar, const EopOptions& opts,
                                                    const std::vector<double>& grid) {
  std::vector<ExplorationPoint> out;
  EopOptions o = opts;
  for (double alpha : grid) {
    const EopResult r = eop(rho_ar, alpha, o);
    out.push_back({alpha, r.value, r.spread(), r.restarts});
    o.warm_start = r.optimal_channel.isometry();
  }
  return out;
}

}  // namespace qsc
