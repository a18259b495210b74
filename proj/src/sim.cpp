#include "qsc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "qsc/json_io.hpp"
#include "qsc/parallel.hpp"
#include "qsc/stiefel.hpp"

namespace qsc {

namespace {

int int_pow(int base, int exp) {
  long r = 1;
  for (int i = 0; i < exp; ++i) {
    r *= base;
    if (r > (1L << 30)) return 1 << 30;
  }
  return static_cast<int>(r);
}

Layout block_layout(int d, int n) {
  std::vector<Factor> f;
  for (int i = 1; i <= n; ++i) f.push_back({"A" + std::to_string(i), d});
  return Layout(f);
}

// Partial trace over the second factor of an (out x env) operator.
Matrix trace_env(const Matrix& big, int out, int env) {
  Matrix r = Matrix::Zero(out, out);
  for (int i = 0; i < out; ++i)
    for (int j = 0; j < out; ++j)
      for (int e = 0; e < env; ++e) r(i, j) += big(static_cast<Eigen::Index>(i) * env + e, static_cast<Eigen::Index>(j) * env + e);
  return r;
}

// Rows of v for env index e: the Kraus operator (1 (x) <e|) v.
Matrix kraus_rows(const Matrix& v, int out, int env, int e) {
  Matrix k(out, v.cols());
  for (int a = 0; a < out; ++a) k.row(a) = v.row(static_cast<Eigen::Index>(a) * env + e);
  return k;
}

// (g (x) 1_env) v without forming the Kronecker product.
Matrix kron_identity_times(const Matrix& g, const Matrix& v, int env) {
  const int out = static_cast<int>(g.rows());
  Matrix r(v.rows(), v.cols());
  for (int e = 0; e < env; ++e) {
    const Matrix ke = g * kraus_rows(v, out, env, e);
    for (int a = 0; a < out; ++a) r.row(static_cast<Eigen::Index>(a) * env + e) = ke.row(a);
  }
  return r;
}

Matrix apply_isometry(const Matrix& v, const Matrix& rho, int out, int env) {
  Matrix r = Matrix::Zero(out, out);
  for (int e = 0; e < env; ++e) {
    const Matrix k = kraus_rows(v, out, env, e);
    r.noalias() += k * rho * k.adjoint();
  }
  return r;
}

// Heisenberg-picture image of g under the channel with isometry v.
Matrix adjoint_map(const Matrix& v, const Matrix& g, int env) { return v.adjoint() * kron_identity_times(g, v, env); }

struct Target {
  double p = 0.0;
  Matrix rho;
  Matrix sqrt_rho;
};

struct Problem {
  int d = 0;   // |A|^n
  int m = 0;
  int env_enc = 0;
  int env_dec = 0;
  std::vector<Target> targets;
};

// F(rho, sigma) and, optionally, its gradient in sigma: (1/2) S (S sigma S)^{-1/2} S with S = sqrt(rho).
double fidelity_grad(const Target& t, const Matrix& sigma, Matrix* grad) {
  const Matrix m = t.sqrt_rho * sigma * t.sqrt_rho;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
  const RealVector lam = es.eigenvalues();
  double f = 0.0;
  RealVector inv(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    const double l = std::max(lam(i), 0.0);
    f += std::sqrt(l);
    inv(i) = l > 1e-12 ? 1.0 / std::sqrt(l) : 0.0;
  }
  if (grad)
    *grad = 0.5 * t.sqrt_rho * es.eigenvectors() * inv.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint() *
            t.sqrt_rho;
  return f;
}

std::vector<int> sequence_digits(int index, int members, int n) {
  std::vector<int> x(n);
  for (int i = n - 1; i >= 0; --i) {
    x[i] = index % members;
    index /= members;
  }
  return x;
}

Matrix sequence_state(const Ensemble& e, int index, int n) {
  Matrix r = Matrix::Ones(1, 1);
  for (int x : sequence_digits(index, e.size(), n)) r = linalg::kron(r, e.states[x].matrix());
  return r;
}

double sequence_prob(const Ensemble& e, int index, int n) {
  double p = 1.0;
  for (int x : sequence_digits(index, e.size(), n)) p *= e.probs[x];
  return p;
}

Problem make_problem(const Ensemble& e, int n, int m_dim, const SimOptions& opts) {
  e.validate();
  if (n < 1) throw ValidationError("sim: n must be >= 1");
  const int d = int_pow(e.dim(), n);
  const int seqs = int_pow(e.size(), n);
  if (d > opts.max_block_dim)
    throw BudgetError("sim: |A|^n = " + std::to_string(d) + " exceeds max_block_dim " + std::to_string(opts.max_block_dim));
  if (seqs > opts.max_sequences)
    throw BudgetError("sim: " + std::to_string(seqs) + " sequences exceed max_sequences " +
                      std::to_string(opts.max_sequences));
  if (m_dim < 1 || m_dim > d) throw ValidationError("sim: m_dim must lie in [1, |A|^n]");
  Problem pr;
  pr.d = d;
  pr.m = m_dim;
  pr.env_enc = std::min(d * m_dim, opts.env_cap);
  pr.env_dec = std::min(d * m_dim, opts.env_cap);
  for (int k = 0; k < seqs; ++k) {
    Target t;
    t.p = sequence_prob(e, k, n);
    if (t.p == 0.0) continue;
    t.rho = sequence_state(e, k, n);
    t.sqrt_rho = linalg::sqrt_psd(t.rho);
    pr.targets.push_back(std::move(t));
  }
  return pr;
}

// Decoder half shared by both modes: returns F and accumulates gradients.
// `omegas` are the compressed states; `h` receives p * D^dagger(G_x) per target when non-null.
double decode_objective(const Problem& pr, const std::vector<Matrix>& omegas, const Matrix& w, Matrix* grad_w,
                        std::vector<Matrix>* h) {
  double f = 0.0;
  if (grad_w) *grad_w = Matrix::Zero(w.rows(), w.cols());
  if (h) h->assign(pr.targets.size(), Matrix());
  for (std::size_t k = 0; k < pr.targets.size(); ++k) {
    const Target& t = pr.targets[k];
    const Matrix xi = apply_isometry(w, omegas[k], pr.d, pr.env_dec);
    Matrix g;
    f += t.p * fidelity_grad(t, xi, (grad_w || h) ? &g : nullptr);
    if (grad_w) grad_w->noalias() += 2.0 * t.p * kron_identity_times(g, w * omegas[k], pr.env_dec);
    if (h) (*h)[k] = t.p * adjoint_map(w, g, pr.env_dec);
  }
  return f;
}

std::vector<Matrix> encode_blind(const Problem& pr, const Matrix& v) {
  std::vector<Matrix> out;
  for (const Target& t : pr.targets) out.push_back(apply_isometry(v, t.rho, pr.m, pr.env_enc));
  return out;
}

std::vector<Matrix> encode_visible(const Problem& pr, const std::vector<Matrix>& phis) {
  std::vector<Matrix> out;
  for (const Matrix& phi : phis) out.push_back(trace_env(phi * phi.adjoint(), pr.m, pr.m));
  return out;
}

struct RunResult {
  std::vector<Matrix> enc;  // blind: {V}; visible: per-target purifications
  Matrix dec;
  double fidelity = 0.0;
  std::vector<double> trace;
};

// Alternates encoder and decoder descents; each half round starts from the
// current point and only accepts improvements.
template <class EncodeFn, class EncoderGradFn>
RunResult see_saw(const Problem& pr, std::vector<Matrix> enc, Matrix dec, const SimOptions& opts, EncodeFn encode,
                  EncoderGradFn encoder_grad) {
  StiefelOptions so;
  so.max_iter = opts.inner_iter;
  so.tol = opts.tol;
  const StiefelObjective f_enc = [&](const std::vector<Matrix>& x, std::vector<Matrix>* g) {
    std::vector<Matrix> h;
    const double f = decode_objective(pr, encode(x), dec, nullptr, g ? &h : nullptr);
    if (g) *g = encoder_grad(x, h);
    return -f;
  };
  RunResult res;
  double current = decode_objective(pr, encode(enc), dec, nullptr, nullptr);
  res.trace.push_back(current);
  for (int round = 0; round < opts.max_rounds; ++round) {
    const double start = current;
    enc = stiefel_minimize(f_enc, std::move(enc), so).point;
    const std::vector<Matrix> omegas = encode(enc);
    const StiefelObjective f_dec = [&](const std::vector<Matrix>& x, std::vector<Matrix>* g) {
      Matrix gw;
      const double f = decode_objective(pr, omegas, x[0], g ? &gw : nullptr, nullptr);
      if (g) g->assign(1, -gw);
      return -f;
    };
    const double after_enc = decode_objective(pr, omegas, dec, nullptr, nullptr);
    res.trace.push_back(after_enc);
    dec = stiefel_minimize(f_dec, {dec}, so).point[0];
    current = decode_objective(pr, omegas, dec, nullptr, nullptr);
    res.trace.push_back(current);
    if (current - start <= opts.tol) break;
  }
  res.enc = std::move(enc);
  res.dec = std::move(dec);
  res.fidelity = current;
  return res;
}

RunResult run_blind(const Problem& pr, Matrix v, Matrix w, const SimOptions& opts) {
  const auto encode = [&pr](const std::vector<Matrix>& x) { return encode_blind(pr, x[0]); };
  const auto grad = [&pr](const std::vector<Matrix>& x, const std::vector<Matrix>& h) {
    Matrix g = Matrix::Zero(x[0].rows(), x[0].cols());
    for (std::size_t k = 0; k < pr.targets.size(); ++k)
      g.noalias() -= 2.0 * kron_identity_times(h[k], x[0] * pr.targets[k].rho, pr.env_enc);
    return std::vector<Matrix>{g};
  };
  return see_saw(pr, {std::move(v)}, std::move(w), opts, encode, grad);
}

RunResult run_visible(const Problem& pr, std::vector<Matrix> phis, Matrix w, const SimOptions& opts) {
  const auto encode = [&pr](const std::vector<Matrix>& x) { return encode_visible(pr, x); };
  const auto grad = [&pr](const std::vector<Matrix>& x, const std::vector<Matrix>& h) {
    std::vector<Matrix> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) g[k] = -2.0 * kron_identity_times(h[k], x[k], pr.m);
    return g;
  };
  return see_saw(pr, std::move(phis), std::move(w), opts, encode, grad);
}

// Encoder onto the m most likely eigenvectors of the average block state and
// the matching decoder.
std::pair<Matrix, Matrix> schumacher_start(const Problem& pr) {
  Matrix avg = Matrix::Zero(pr.d, pr.d);
  for (const Target& t : pr.targets) avg += t.p * t.rho;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (avg + avg.adjoint()));
  Matrix v = Matrix::Zero(static_cast<Eigen::Index>(pr.m) * pr.env_enc, pr.d);
  Matrix w = Matrix::Zero(static_cast<Eigen::Index>(pr.d) * pr.env_dec, pr.m);
  for (int k = 0; k < pr.d; ++k) {
    const Vector u = es.eigenvectors().col(pr.d - 1 - k);
    if (k < pr.m) {
      v.row(static_cast<Eigen::Index>(k) * pr.env_enc) = u.adjoint();
      for (int a = 0; a < pr.d; ++a) w(static_cast<Eigen::Index>(a) * pr.env_dec, k) = u(a);
    } else {
      v.row(k - pr.m + 1) = u.adjoint();
    }
  }
  return {v, w};
}

std::vector<Matrix> encode_blind_from(const Scheme& s, const Problem& pr) {
  std::vector<Matrix> out;
  for (const Target& t : pr.targets)
    out.push_back(apply_isometry(s.encoder->isometry(), t.rho, pr.m, s.encoder->env().total_dim()));
  return out;
}

Vector purification_vector(const Matrix& omega) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (omega + omega.adjoint()));
  const int m = static_cast<int>(omega.rows());
  Vector phi = Vector::Zero(static_cast<Eigen::Index>(m) * m);
  for (int k = 0; k < m; ++k) {
    const double l = std::max(es.eigenvalues()(k), 0.0);
    for (int i = 0; i < m; ++i) phi(static_cast<Eigen::Index>(i) * m + k) = std::sqrt(l) * es.eigenvectors()(i, k);
  }
  return phi / phi.norm();
}

template <class Run>
SchemeResult best_of(int restarts, int threads, Run run_one) {
  std::vector<std::optional<std::pair<Scheme, RunResult>>> runs(restarts);
  parallel_for(restarts, threads, [&](int r) { runs[r] = run_one(r); });
  int best = 0;
  std::vector<double> per_restart;
  for (int r = 0; r < restarts; ++r) {
    per_restart.push_back(runs[r]->second.fidelity);
    if (runs[r]->second.fidelity > runs[best]->second.fidelity) best = r;
  }
  auto& [scheme, run] = *runs[best];
  return SchemeResult{.scheme = std::move(scheme),
                      .fidelity = run.fidelity,
                      .best_restart = best,
                      .per_restart = std::move(per_restart),
                      .trace = std::move(run.trace)};
}

}  // namespace

void Ensemble::validate() const {
  if (probs.empty() || probs.size() != states.size())
    throw ValidationError("ensemble: probs and states must be non-empty and of equal length");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw ValidationError("ensemble: probabilities must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-10) throw ValidationError("ensemble: probabilities must sum to 1");
  for (const auto& s : states)
    if (s.layout().total_dim() != states.front().layout().total_dim())
      throw DimensionError("ensemble: member states differ in dimension");
}

int Ensemble::dim() const { return states.empty() ? 0 : states.front().layout().total_dim(); }

DensityMatrix ensemble_to_source(const Ensemble& e) {
  e.validate();
  const int d = e.dim(), k = e.size();
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(d) * k, static_cast<Eigen::Index>(d) * k);
  for (int x = 0; x < k; ++x)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) m(a * k + x, b * k + x) = e.probs[x] * e.states[x].matrix()(a, b);
  return DensityMatrix(Layout{{"A", d}, {"R", k}}, m);
}

Ensemble source_to_ensemble(const DensityMatrix& rho_ar) {
  const DensityMatrix r = reorder(rho_ar, {"A", "R"});
  const int d = r.layout().dim_of("A"), k = r.layout().dim_of("R");
  Ensemble e;
  for (int x = 0; x < k; ++x) {
    Matrix block(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) block(a, b) = r.matrix()(a * k + x, b * k + x);
    const double p = block.trace().real();
    e.probs.push_back(p);
    e.states.push_back(p > 0.0 ? DensityMatrix(Layout{{"A", d}}, block / p) : maximally_mixed(Layout{{"A", d}}));
  }
  return e;
}

FidelityReport evaluate_fidelity_forms(const Scheme& s, const Ensemble& e) {
  e.validate();
  const int d = int_pow(e.dim(), s.n);
  const int seqs = int_pow(e.size(), s.n);
  if (s.decoder.input().total_dim() != s.m_dim || s.decoder.output().total_dim() != d)
    throw DimensionError("evaluate_fidelity: decoder must map M (" + std::to_string(s.m_dim) + ") to A^n (" +
                         std::to_string(d) + ")");
  if (s.mode == BoundMode::blind) {
    if (!s.encoder) throw ValidationError("evaluate_fidelity: blind scheme without encoder");
    if (s.encoder->input().total_dim() != d || s.encoder->output().total_dim() != s.m_dim)
      throw DimensionError("evaluate_fidelity: encoder must map A^n to M");
  } else if (static_cast<int>(s.compressed.size()) != seqs) {
    throw DimensionError("evaluate_fidelity: visible scheme needs one compressed state per sequence");
  }
  const Layout a_n = block_layout(e.dim(), s.n);
  const Layout m_layout{{"M", s.m_dim}};
  FidelityReport rep;
  std::vector<Matrix> xis;
  for (int k = 0; k < seqs; ++k) {
    const DensityMatrix rho(a_n, sequence_state(e, k, s.n));
    const DensityMatrix omega =
        s.mode == BoundMode::blind
            ? apply_channel(Channel(a_n, m_layout, s.encoder->env(), s.encoder->isometry()), rho)
            : DensityMatrix(m_layout, s.compressed[k].matrix());
    const DensityMatrix xi = apply_channel(Channel(m_layout, a_n, s.decoder.env(), s.decoder.isometry()), omega);
    rep.average += sequence_prob(e, k, s.n) * fidelity(rho, xi);
    xis.push_back(xi.matrix());
  }
  constexpr int kJointCap = 256;
  if (d * seqs <= kJointCap) {
    const int dim = d * seqs;
    Matrix rho = Matrix::Zero(dim, dim), xi = Matrix::Zero(dim, dim);
    for (int k = 0; k < seqs; ++k) {
      const double p = sequence_prob(e, k, s.n);
      const Matrix r = sequence_state(e, k, s.n);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          rho(a * seqs + k, b * seqs + k) = p * r(a, b);
          xi(a * seqs + k, b * seqs + k) = p * xis[k](a, b);
        }
    }
    rep.joint = linalg::trace_norm(linalg::sqrt_psd(rho) * linalg::sqrt_psd(xi));
    if (std::abs(*rep.joint - rep.average) > 1e-8)
      throw Error("evaluate_fidelity: average and joint forms differ by " +
                  std::to_string(std::abs(*rep.joint - rep.average)));
  }
  return rep;
}

double evaluate_fidelity(const Scheme& s, const Ensemble& e) { return evaluate_fidelity_forms(s, e).average; }

SchemeResult optimize_blind_scheme(const Ensemble& e, int n, int m_dim, const SimOptions& opts) {
  const Problem pr = make_problem(e, n, m_dim, opts);
  if (opts.restarts < 1) throw ValidationError("sim: restarts must be >= 1");
  const Layout a_n = block_layout(e.dim(), n);
  const Layout m_layout{{"M", m_dim}};
  return best_of(opts.restarts, opts.threads, [&](int r) {
    Matrix v, w;
    if (r == 0) {
      std::tie(v, w) = schumacher_start(pr);
    } else {
      auto rng = linalg::make_rng(opts.seed, static_cast<std::uint64_t>(r));
      v = linalg::random_isometry(pr.m * pr.env_enc, pr.d, rng);
      w = linalg::random_isometry(pr.d * pr.env_dec, pr.m, rng);
    }
    RunResult run = run_blind(pr, std::move(v), std::move(w), opts);
    Scheme s{.mode = BoundMode::blind,
             .n = n,
             .m_dim = m_dim,
             .encoder = Channel(a_n, m_layout, Layout{{"E", pr.env_enc}}, run.enc[0]),
             .compressed = {},
             .decoder = Channel(m_layout, a_n, Layout{{"E", pr.env_dec}}, run.dec)};
    run.fidelity = evaluate_fidelity(s, e);
    return std::pair<Scheme, RunResult>{std::move(s), std::move(run)};
  });
}

SchemeResult optimize_visible_scheme(const Ensemble& e, int n, int m_dim, const SimOptions& opts) {
  const Problem pr = make_problem(e, n, m_dim, opts);
  if (opts.restarts < 1) throw ValidationError("sim: restarts must be >= 1");
  if (static_cast<int>(pr.targets.size()) != int_pow(e.size(), n))
    throw ValidationError("sim: visible schemes need every member probability > 0");
  Scheme warm = opts.warm_start ? *opts.warm_start : optimize_blind_scheme(e, n, m_dim, opts).scheme;
  if (warm.mode != BoundMode::blind || warm.n != n || warm.m_dim != m_dim || !warm.encoder)
    throw ValidationError("sim: visible warm start must be a blind scheme with the same n and m_dim");
  const Layout a_n = block_layout(e.dim(), n);
  const Layout m_layout{{"M", m_dim}};
  return best_of(opts.restarts, opts.threads, [&](int r) {
    std::vector<Matrix> phis;
    Matrix w;
    if (r == 0 && warm.decoder.env().total_dim() == pr.env_dec) {
      for (const Matrix& omega : encode_blind_from(warm, pr)) phis.push_back(purification_vector(omega));
      w = warm.decoder.isometry();
    } else {
      auto rng = linalg::make_rng(opts.seed ^ 0x5649534942ULL, static_cast<std::uint64_t>(r));
      for (std::size_t k = 0; k < pr.targets.size(); ++k) phis.push_back(linalg::random_isometry(pr.m * pr.m, 1, rng));
      w = linalg::random_isometry(pr.d * pr.env_dec, pr.m, rng);
    }
    RunResult run = run_visible(pr, std::move(phis), std::move(w), opts);
    Scheme s{.mode = BoundMode::visible, .n = n, .m_dim = m_dim, .encoder = std::nullopt, .compressed = {},
             .decoder = Channel(m_layout, a_n, Layout{{"E", pr.env_dec}}, run.dec)};
    for (const Matrix& omega : encode_visible(pr, run.enc))
      s.compressed.push_back(DensityMatrix::trusted(m_layout, 0.5 * (omega + omega.adjoint())));
    run.fidelity = evaluate_fidelity(s, e);
    return std::pair<Scheme, RunResult>{std::move(s), std::move(run)};
  });
}

int compressed_dim(int block_dim, int n, double rate) {
  if (block_dim < 1 || n < 1 || !(rate >= 0.0)) throw ValidationError("compressed_dim: invalid arguments");
  const double bits = std::ceil(n * rate - 1e-9);
  if (bits >= std::log2(static_cast<double>(block_dim))) return block_dim;
  return std::min(block_dim, 1 << static_cast<int>(std::max(bits, 0.0)));
}

std::vector<SweepRow> sweep(const Ensemble& e, const std::vector<double>& rates, const std::vector<int>& ns,
                            const SweepOptions& opts) {
  e.validate();
  for (double q : rates)
    if (!std::isfinite(q) || q < 0.0) throw ValidationError("sweep: rates must be finite and >= 0");
  const DensityMatrix source = ensemble_to_source(e);
  std::optional<KIDecomposition> ki;
  if (opts.blind) ki = ki_decompose(source);

  std::map<std::pair<int, int>, SchemeResult> blind_cache;
  const auto blind_result = [&](int n, int m) -> const SchemeResult& {
    auto it = blind_cache.find({n, m});
    if (it == blind_cache.end()) it = blind_cache.emplace(std::pair{n, m}, optimize_blind_scheme(e, n, m, opts.sim)).first;
    return it->second;
  };
  std::map<int, std::vector<double>> visible_entropic;  // per n, one value per grid alpha

  std::vector<SweepRow> rows;
  for (int n : ns) {
    if (n < 1) throw ValidationError("sweep: block lengths must be >= 1");
    const int d = int_pow(e.dim(), n);
    for (double q : rates) {
      const int m = compressed_dim(d, n, q);
      SweepRow row;
      row.n = n;
      row.rate = q;
      row.m_dim = m;
      row.rate_tested = std::log2(static_cast<double>(m)) / n;
      if (opts.blind) {
        row.mode = BoundMode::blind;
        row.f_sim = blind_result(n, m).fidelity;
        const ExponentReport k = blind_exponent(*ki, row.rate_tested);
        row.f_bound = std::min(1.0, std::exp2(-n * k.K));
        row.bound_alpha = k.unbounded_alpha ? exponent_alpha_grid().back() : k.alpha_star.value_or(0.0);
        row.certified = true;
        rows.push_back(row);
      }
      if (opts.visible) {
        SimOptions so = opts.sim;
        so.warm_start = blind_result(n, m).scheme;
        row.mode = BoundMode::visible;
        row.f_sim = optimize_visible_scheme(e, n, m, so).fidelity;
        auto it = visible_entropic.find(n);
        if (it == visible_entropic.end()) {
          std::vector<double> values;
          for (double alpha : exponent_alpha_grid())
            values.push_back(eop_regularized_estimate(source, alpha, n, opts.eop).per_n.back().second);
          it = visible_entropic.emplace(n, std::move(values)).first;
        }
        row.f_bound = 1.0;
        row.bound_alpha = 0.0;
        for (std::size_t i = 0; i < exponent_alpha_grid().size(); ++i) {
          const double alpha = exponent_alpha_grid()[i];
          const double b = std::min(1.0, std::exp2(-n * bound_exponent(alpha, it->second[i], row.rate_tested)));
          if (b < row.f_bound) {
            row.f_bound = b;
            row.bound_alpha = alpha;
          }
        }
        row.certified = false;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::string sweep_csv_header() { return "mode,n,Q,Q_tested,m_dim,F_sim,F_bound,slack,alpha,certified"; }

std::string sweep_csv_row(const SweepRow& r) {
  return to_string(r.mode) + "," + std::to_string(r.n) + "," + format_number(r.rate) + "," +
         format_number(r.rate_tested) + "," + std::to_string(r.m_dim) + "," + format_number(r.f_sim) + "," +
         format_number(r.f_bound) + "," + format_number(r.slack()) + "," + format_number(r.bound_alpha) + "," +
         (r.certified ? "certified" : "heuristic");
}

namespace io {

namespace {

const json& require(const json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError("field '" + key + "': missing");
  return j.at(key);
}

template <class F>
auto with_prefix(const std::string& prefix, F f) {
  try {
    return f();
  } catch (const ValidationError& err) {
    throw ValidationError(prefix + ": " + err.what());
  }
}

}  // namespace

json to_json(const Ensemble& e) {
  json states = json::array();
  for (const auto& s : e.states) states.push_back(to_json(s));
  return {{"probs", e.probs}, {"states", states}};
}

Ensemble ensemble_from_json(const json& j) {
  const json& probs = require(j, "probs");
  const json& states = require(j, "states");
  if (!probs.is_array()) throw ValidationError("field 'probs': expected an array");
  if (!states.is_array()) throw ValidationError("field 'states': expected an array");
  Ensemble e;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (!probs[k].is_number()) throw ValidationError("field 'probs[" + std::to_string(k) + "]': expected a number");
    e.probs.push_back(probs[k].get<double>());
  }
  for (std::size_t k = 0; k < states.size(); ++k)
    e.states.push_back(with_prefix("states[" + std::to_string(k) + "]", [&] { return density_from_json(states[k]); }));
  e.validate();
  return e;
}

Ensemble load_ensemble(const std::string& path) { return ensemble_from_json(read_file(path)); }

json to_json(const Scheme& s) {
  json compressed = json::array();
  for (const auto& c : s.compressed) compressed.push_back(to_json(c));
  return {{"mode", to_string(s.mode)},
          {"n", s.n},
          {"m_dim", s.m_dim},
          {"encoder", s.encoder ? to_json(*s.encoder) : json(nullptr)},
          {"compressed", compressed},
          {"decoder", to_json(s.decoder)}};
}

Scheme scheme_from_json(const json& j) {
  const std::string mode = require(j, "mode").get<std::string>();
  if (mode != "blind" && mode != "visible") throw ValidationError("field 'mode': expected \"blind\" or \"visible\"");
  std::optional<Channel> encoder;
  if (!require(j, "encoder").is_null()) encoder = with_prefix("encoder", [&] { return channel_from_json(j.at("encoder")); });
  Scheme s{.mode = mode == "blind" ? BoundMode::blind : BoundMode::visible,
           .n = require(j, "n").get<int>(),
           .m_dim = require(j, "m_dim").get<int>(),
           .encoder = std::move(encoder),
           .compressed = {},
           .decoder = with_prefix("decoder", [&] { return channel_from_json(require(j, "decoder")); })};
  const json& compressed = require(j, "compressed");
  for (std::size_t k = 0; k < compressed.size(); ++k)
    s.compressed.push_back(
        with_prefix("compressed[" + std::to_string(k) + "]", [&] { return density_from_json(compressed[k]); }));
  return s;
}

}  // namespace io

}  // namespace qsc
