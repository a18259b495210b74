// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "eop_oracle.hpp"
#include "fixtures.hpp"
#include "qsc/bounds.hpp"
#include "qsc/cli.hpp"
#include "qsc/eop.hpp"
#include "qsc/ki.hpp"
#include "qsc/renyi.hpp"
#include "qsc/sim.hpp"

using namespace qsc;

namespace {

const std::string kData = QSC_TEST_DATA;

// Collects failed checks and the worst observed residual of a criterion.
class Tally {
 public:
  void check(bool ok, const std::string& what) {
    ++checks_;
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }

  /// Records |residual| against tol.
  void within(double residual, double tol, const std::string& what) {
    worst_ = std::max(worst_, std::abs(residual));
    check(std::abs(residual) <= tol, what + " residual " + format(residual));
  }

  bool ok() const { return failed_ == 0; }

  std::string summary() const {
    std::string s = std::to_string(checks_ - failed_) + "/" + std::to_string(checks_) + " checks";
    if (worst_ > 0.0) s += ", worst residual " + format(worst_);
    for (const auto& f : failures_) s += "; " + f;
    return s;
  }

  static std::string format(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
  }

 private:
  int checks_ = 0;
  int failed_ = 0;
  double worst_ = 0.0;
  std::vector<std::string> failures_;
};

DensityMatrix pure_qubit(double theta, double phase = 0.0) {
  Vector v(2);
  v << std::cos(theta), std::polar(std::sin(theta), phase);
  return DensityMatrix(Layout{{"A", 2}}, v * v.adjoint());
}

double s_alpha_a(const DensityMatrix& rho, double alpha) {
  return renyi_entropy(partial_trace(rho, {"A"}), alpha).value;
}

// ---------------------------------------------------------------------------

void entropy_identities(Tally& t) {
  const std::vector<double> grid{0.5, 0.9, 1.0, 1.5, 2.0, 3.0, 5.0};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const int d = 2 + static_cast<int>(seed % 5);
    const DensityMatrix a = random_state(Layout{{"A", d}}, seed);
    const DensityMatrix b = random_state(Layout{{"B", 2 + static_cast<int>((seed / 5) % 5)}}, seed + 1000);
    const Matrix v = random_isometry(d, d + 2, seed + 2000);
    const DensityMatrix va(Layout{{"X", d + 2}}, v * a.matrix() * v.adjoint());
    double prev = std::log2(d);
    for (double alpha : grid) {
      const double sa = renyi_entropy(a, alpha).value;
      t.within(renyi_entropy(tensor(a, b), alpha).value - sa - renyi_entropy(b, alpha).value, 1e-9, "additivity");
      t.within(renyi_entropy(va, alpha).value - sa, 1e-9, "isometric invariance");
      t.check(sa <= prev + 1e-9, "monotonicity in alpha");
      prev = sa;
    }
  }
}

void dam_hayden(Tally& t) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const int d = 2 + static_cast<int>(seed % 4);
    const DensityMatrix r = random_state(Layout{{"A", d}}, seed);
    const DensityMatrix s = random_state(Layout{{"A", d}}, seed + 100000);
    for (double beta : {0.6, 0.75, 0.9}) t.check(dam_hayden_gap(r, s, beta) >= -1e-8, "negative gap");
  }
  for (int d = 2; d <= 8; ++d) {
    const DensityMatrix mm = maximally_mixed(Layout{{"A", d}});
    const DensityMatrix p = basis_state(Layout{{"A", d}}, d - 1);
    t.within(dam_hayden_gap(mm, p, 0.75) - 4.0 * std::log2(d), 1e-10, "closed form");
  }
}

void ki_round_trip(Tally& t) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto fx = test::make_ki_fixture(seed);
    const KIDecomposition d = ki_decompose(fx.rho);
    t.check(d.dims == fx.dims, "dims of fixture " + std::to_string(seed));
    t.within(linalg::max_abs(ki_reconstruct(d).matrix() - fx.rho.matrix()), 1e-8, "reconstruction");
    for (std::uint64_t s = 0; s < 20; ++s) {
      const PreservingReport rep = verify_preserving_channel(test::make_preserving_channel(d, 1000 * seed + s), d);
      t.check(rep.preserves && rep.structured, "preserving channel structure");
    }
  }
}

void tau_identity(Tally& t) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const KIDecomposition d = ki_decompose(test::make_ki_fixture(seed).rho);
    std::vector<double> want;
    for (double a : {0.5, 1.5, 2.0, 4.0}) want.push_back(ki_entropy(d, a));
    for (std::uint64_t s = 0; s < 20; ++s) {
      const TauExtension tau = build_tau_extension(d, s);
      int k = 0;
      for (double a : {0.5, 1.5, 2.0, 4.0}) t.within(tau_entropy(tau, a) - want[k++], 1e-8, "tau entropy");
    }
  }
}

void eop_oracles(Tally& t) {
  std::vector<DensityMatrix> pure{test::entangled_qubits(0.3), test::entangled_qubits(0.6),
                                  random_pure_state(Layout{{"A", 2}, {"R", 2}}, 5).density(),
                                  random_pure_state(Layout{{"A", 3}, {"R", 2}}, 6).density()};
  for (const DensityMatrix& src : pure)
    for (double alpha : {0.5, 1.0, 2.0, 3.0}) t.within(eop(src, alpha).value - s_alpha_a(src, alpha), 1e-4, "pure");

  for (std::uint64_t seed : {1, 7, 13}) {
    const DensityMatrix src = tensor(random_state(Layout{{"A", 2}}, seed), random_state(Layout{{"R", 2}}, seed + 1));
    for (double alpha : {0.5, 1.0, 2.0}) {
      const double v = eop(src, alpha).value;
      t.check(v >= 0.0 && v <= 1e-5, "product value " + Tally::format(v));
    }
  }

  const DensityMatrix cbit = test::classical_source({0.5, 0.5});
  const double value = eop(cbit, 1.0).value;
  const double oracle = test::eop_oracle(cbit, 1.0);
  t.within(value - 1.0, 1e-3, "classical bit");
  t.within(oracle - 1.0, 1e-3, "classical bit oracle");
  t.within(value - oracle, 1e-3, "classical bit against oracle");

  const std::vector<double> grid{1.2, 1.5, 2.0, 3.0, 5.0};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const DensityMatrix src = random_state(Layout{{"A", 2}, {"R", 2}}, 60 + seed);
    std::vector<double> z;
    for (double a : grid) z.push_back(z_alpha(src, a));
    for (std::size_t i = 1; i < grid.size(); ++i) t.check(z[i] <= z[i - 1] + 1e-4, "Z_alpha increases");
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
      const double w = (grid[i + 1] - grid[i]) / (grid[i + 1] - grid[i - 1]);
      t.check(z[i] <= w * z[i - 1] + (1 - w) * z[i + 1] + 1e-4, "Z_alpha not convex");
    }
  }
}

Ensemble uniform_bit() { return Ensemble{{0.5, 0.5}, {pure_qubit(0.0), pure_qubit(std::numbers::pi / 2)}}; }

// H_infinity of the CQ marginal.
double min_entropy_cq(const KIDecomposition& d) { return -std::log2(d.cq_state().spectrum().maxCoeff()); }

void blind_consistency(Tally& t) {
  const Ensemble e = uniform_bit();
  const auto rows = sweep(e, {0.25, 0.5, 0.75}, {1, 2, 3});
  t.check(rows.size() == 9, "row count");
  const KIDecomposition d = ki_decompose(ensemble_to_source(e));
  for (const SweepRow& r : rows) {
    t.check(r.f_sim <= r.f_bound + 1e-6, "F_sim above F_bound at n=" + std::to_string(r.n));
    if (r.n == 2 && r.rate == 0.5) {
      const double limit = std::exp2(-r.n * 0.5 * (min_entropy_cq(d) - r.rate_tested));
      t.within(limit - std::sqrt(0.5), 1e-12, "alpha -> inf bound");
      t.within(r.f_sim - 0.7071, 1e-3, "F_sim at (2, 0.5)");
      t.within(r.f_sim - limit, 1e-3, "near tightness");
    }
  }
}

void exponent_behavior(Tally& t) {
  int fixtures = 0;
  for (std::uint64_t seed = 0; fixtures < 10; ++seed) {
    const KIDecomposition d = ki_decompose(test::make_ki_fixture(seed).rho);
    const double s = ki_entropy(d, 1.0);
    if (s < 0.1) continue;
    ++fixtures;
    t.check(blind_exponent(d, s - 0.1).K > 0.0, "K not positive below S(CQ)");
    t.check(blind_exponent(d, s).K == 0.0, "K not zero at S(CQ)");
  }

  // Fixed rates with nQ integral for n = 1..3, plus the rounded rate 1/2.
  struct Case {
    Ensemble e;
    double q;
  };
  const std::vector<Case> cases{{uniform_bit(), 0.0},
                                {Ensemble{{0.8, 0.2}, {pure_qubit(0.0), pure_qubit(std::numbers::pi / 2)}}, 0.0},
                                {uniform_bit(), 0.5}};
  for (const Case& c : cases) {
    const auto rows = sweep(c.e, {c.q}, {1, 2, 3});
    const KIDecomposition d = ki_decompose(ensemble_to_source(c.e));
    t.check(c.q < ki_entropy(d, 1.0), "rate not below S(CQ)");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double predicted = std::exp2(-rows[i].n * blind_exponent(d, rows[i].rate_tested).K);
      const double ratio = rows[i].f_sim / predicted;
      t.check(ratio >= 0.5 && ratio <= 1.0 + 1e-6, "ratio " + Tally::format(ratio) + " at n=" + std::to_string(rows[i].n));
      if (i > 0) t.check(rows[i].f_sim <= rows[i - 1].f_sim + 1e-6, "F_sim grows with n");
    }
  }
}

void visible_pipeline(Tally& t) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Ensemble e =
        seed % 2 == 0
            ? Ensemble{{0.3, 0.7}, {random_state(Layout{{"A", 2}}, 70 + seed), random_state(Layout{{"A", 2}}, 71 + seed)}}
            : Ensemble{{0.5, 0.5}, {pure_qubit(0.1 * seed), pure_qubit(0.3 + 0.1 * seed, 0.4)}};
    const int n = 1 + static_cast<int>(seed % 2);
    const int m = seed % 4 == 3 ? 2 : 1;
    SimOptions o;
    const SchemeResult b = optimize_blind_scheme(e, n, m, o);
    o.warm_start = b.scheme;
    const SchemeResult v = optimize_visible_scheme(e, n, m, o);
    t.check(v.fidelity >= b.fidelity - 1e-6, "visible below blind on instance " + std::to_string(seed));
  }

  const double t0 = 0.0, t1 = 0.5, p0 = 0.35, p1 = 0.65;
  double grid = 0.0;
  const int na = 2000, nr = 400;
  for (int i = 0; i < na; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / na;
    for (int j = 0; j <= nr; ++j) {
      const double r = static_cast<double>(j) / nr;
      const double x = r * std::sin(phi), z = r * std::cos(phi);
      const double f0 = std::sqrt(0.5 * (1.0 + z * std::cos(2 * t0) + x * std::sin(2 * t0)));
      const double f1 = std::sqrt(0.5 * (1.0 + z * std::cos(2 * t1) + x * std::sin(2 * t1)));
      grid = std::max(grid, p0 * f0 + p1 * f1);
    }
  }
  const Ensemble two{{p0, p1}, {pure_qubit(t0), pure_qubit(t1)}};
  t.within(optimize_visible_scheme(two, 1, 1).fidelity - grid, 1e-4, "grid oracle");

  const DensityMatrix src = ensemble_to_source(uniform_bit());
  const BoundReport heuristic = visible_bound(src, 0.5, 1, 2.0);
  t.check(!heuristic.certified && heuristic.provenance == "eop_heuristic", "uncertified row flagged certified");
  VisibleOptions cert;
  cert.certified_value = test::eop_oracle(src, 2.0);
  const BoundReport certified = visible_bound(src, 0.5, 1, 2.0, cert);
  t.check(certified.certified && certified.provenance == "eop_certified", "oracle-backed row not certified");
  SweepOptions so;
  so.blind = true;
  so.visible = true;
  so.sim.restarts = 4;
  so.eop.restarts = 8;
  for (const SweepRow& r : sweep(uniform_bit(), {0.5}, {1}, so))
    t.check(r.certified == (r.mode == BoundMode::blind), "sweep certification flag");
}

void cli_reproducibility(Tally& t) {
  const std::string state = kData + "/classical_bit.json";
  const std::string ens = kData + "/cbit.json";
  const std::vector<std::vector<std::string>> commands{
      {"entropy", "--state", kData + "/mm_qubit.json", "--alpha", "0.5,1,2"},
      {"ki", "--state", state},
      {"eop", "--state", state, "--alpha", "1,2", "--restarts", "8"},
      {"bound", "--state", state, "--mode", "blind", "--rates", "0.25,0.5", "--n", "1,3", "--exponent"},
      {"bound", "--ensemble", ens, "--mode", "visible", "--rates", "0.5", "--alpha", "2,5", "--restarts", "8"},
      {"simulate", "--ensemble", ens, "--mode", "blind", "--n", "2", "--rate", "0.5", "--restarts", "4"},
      {"simulate", "--ensemble", ens, "--mode", "visible", "--n", "2", "--m-dim", "2", "--restarts", "4"},
      {"sweep", "--ensemble", ens, "--mode", "blind", "--rates", "0.25,0.5,0.75", "--n", "1,2"},
  };
  for (const auto& args : commands) {
    std::ostringstream out1, out2, err;
    const int c1 = cli::run(args, out1, err);
    const int c2 = cli::run(args, out2, err);
    t.check(c1 == 0 && c2 == 0, args[0] + " exit code");
    t.check(out1.str() == out2.str(), args[0] + " output differs between runs");
  }
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<void(Tally&)> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "entropy identities", 10, entropy_identities},
      {2, "Dam-Hayden gap", 30, dam_hayden},
      {3, "KI round trip", 120, ki_round_trip},
      {4, "tau extension entropy", 60, tau_identity},
      {5, "EoP oracles", 600, eop_oracles},
      {6, "blind bound consistency", 300, blind_consistency},
      {7, "exponent behavior", 300, exponent_behavior},
      {8, "visible pipeline", 600, visible_pipeline},
      {9, "CLI reproducibility", 600, cli_reproducibility},
  };
  bool all = true;
  for (const Criterion& c : criteria) {
    Tally t;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(t);
    } catch (const std::exception& e) {
      t.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    t.check(secs <= c.limit_seconds, "runtime over " + Tally::format(c.limit_seconds) + " s");
    const bool ok = t.ok();
    all = all && ok;
    std::printf("criterion %d (%s): %s  [%.1f s, %s]\n", c.id, c.name, ok ? "PASS" : "FAIL", secs,
                t.summary().c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
