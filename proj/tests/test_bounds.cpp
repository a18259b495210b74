#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "qsc/bounds.hpp"
#include "qsc/renyi.hpp"

using namespace qsc;

namespace {

// H_alpha(p) evaluated directly from the closed form.
double classical_renyi(const std::vector<double>& p, double alpha) {
  double s = 0.0;
  for (double x : p) s += std::pow(x, alpha);
  return std::log2(s) / (1.0 - alpha);
}

DensityMatrix product_source() {
  return tensor(random_state(Layout{{"A", 2}}, 3), random_state(Layout{{"R", 2}}, 4));
}

}  // namespace

TEST_CASE("blind bound examples") {
  const DensityMatrix cbit = test::classical_source({0.5, 0.5});
  const BoundReport at_entropy = blind_bound(cbit, 1.0, 5, 2.0);
  CHECK(std::abs(at_entropy.exponent) <= 1e-12);
  CHECK(std::abs(at_entropy.fidelity_bound - 1.0) <= 1e-12);

  const BoundReport r = blind_bound(cbit, 0.5, 10, 2.0);
  CHECK(r.mode == BoundMode::blind);
  CHECK(std::abs(r.entropic_quantity - 1.0) <= 1e-12);
  CHECK(std::abs(r.exponent - 0.125) <= 1e-12);
  CHECK(std::abs(r.fidelity_bound - 0.420448207626856939) <= 1e-12);
  CHECK(r.certified);
  CHECK(r.provenance == "ki_entropy");
}

TEST_CASE("doubling n squares the blind bound") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto fx = test::make_ki_fixture(seed);
    const KIDecomposition d = ki_decompose(fx.rho);
    for (double alpha : {1.5, 2.0, 4.0}) {
      const double q = 0.3 * ki_entropy(d, alpha);
      for (int n : {1, 3, 7}) {
        const double b1 = blind_bound(d, q, n, alpha).fidelity_bound;
        const double b2 = blind_bound(d, q, 2 * n, alpha).fidelity_bound;
        CHECK(std::abs(b2 - b1 * b1) <= 1e-12);
      }
    }
  }
}

TEST_CASE("classical sources match the closed form") {
  const std::vector<std::vector<double>> dists{{0.5, 0.5}, {0.9, 0.1}, {0.2, 0.3, 0.5}, {0.25, 0.25, 0.25, 0.25}};
  for (const auto& p : dists) {
    const DensityMatrix src = test::classical_source(p);
    for (double alpha : {1.1, 2.0, 5.0})
      for (int n : {1, 4}) {
        const double q = 0.2;
        const double direct = std::exp2(-n * (alpha - 1.0) / (2.0 * alpha) * (classical_renyi(p, alpha) - q));
        CHECK(std::abs(blind_bound(src, q, n, alpha).fidelity_bound - std::min(1.0, direct)) <= 1e-12);
      }
  }
}

TEST_CASE("exponent is affine in the rate with the exact slope") {
  const auto fx = test::make_ki_fixture(3);
  const KIDecomposition d = ki_decompose(fx.rho);
  for (double alpha : {1.05, 2.0, 30.0})
    for (double q : {0.0, 0.4, 1.3}) {
      const double delta = 0.37;
      const double slope =
          (blind_bound(d, q + delta, 1, alpha).exponent - blind_bound(d, q, 1, alpha).exponent) / delta;
      CHECK(std::abs(slope + (alpha - 1.0) / (2.0 * alpha)) <= 1e-12);
    }
}

TEST_CASE("rates above the entropic quantity are vacuous") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const KIDecomposition d = ki_decompose(test::make_ki_fixture(seed).rho);
    for (double alpha : {1.25, 3.0}) {
      const BoundReport r = blind_bound(d, ki_entropy(d, alpha) + 0.1, 4, alpha);
      CHECK(r.exponent < 0.0);
      CHECK(r.fidelity_bound == 1.0);
    }
  }
}

TEST_CASE("blind exponent") {
  const DensityMatrix cbit = test::classical_source({0.5, 0.5});
  const ExponentReport at = blind_exponent(cbit, 1.0);
  CHECK(at.K == 0.0);
  CHECK(at.alpha_star_text() == "none");

  const ExponentReport zero = blind_exponent(cbit, 0.0);
  CHECK(zero.K >= 0.49);
  CHECK(zero.K <= 0.5);
  CHECK(zero.unbounded_alpha);
  CHECK(zero.alpha_star_text() == "->inf");

  const ExponentReport half = blind_exponent(cbit, 0.5);
  CHECK(std::abs(half.K - 0.2475) <= 1e-12);
  CHECK(half.unbounded_alpha);

  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const KIDecomposition d = ki_decompose(test::make_ki_fixture(seed).rho);
    const double s = ki_entropy(d, 1.0);
    for (double q : {0.0, 0.5 * s, s - 1e-6, s, s + 0.2}) {
      if (q < 0.0) continue;
      const ExponentReport rep = blind_exponent(d, q);
      for (const BoundReport& g : rep.grid) CHECK(rep.K >= g.exponent);
      CHECK((rep.K > 0.0) == (q < s - 1e-9));
      if (rep.K > 0.0 && !rep.unbounded_alpha) {
        REQUIRE(rep.alpha_star);
        CHECK(std::abs(blind_bound(d, q, 1, *rep.alpha_star).exponent - rep.K) <= 1e-15);
      }
    }
  }
}

TEST_CASE("visible bound examples") {
  const BoundReport prod = visible_bound(product_source(), 0.3, 1, 2.0);
  CHECK(std::abs(prod.entropic_quantity) <= 1e-6);
  CHECK(prod.fidelity_bound == 1.0);
  CHECK_FALSE(prod.certified);
  CHECK(prod.provenance == "eop_heuristic");

  const DensityMatrix pure = test::entangled_qubits(0.5);
  const double s2 = renyi_entropy(partial_trace(pure, {"A"}), 2.0).value;
  const BoundReport pr = visible_bound(pure, 0.0, 1, 2.0);
  CHECK(std::abs(pr.exponent - s2 / 4.0) <= 1e-4);
  CHECK(std::abs(pr.fidelity_bound - std::exp2(-s2 / 4.0)) <= 1e-4);

  const DensityMatrix cbit = test::classical_source({0.5, 0.5});
  const BoundReport cb = visible_bound(cbit, 0.5, 1, 2.0);
  CHECK(std::abs(cb.exponent - 0.125) <= 1e-4);
  CHECK(std::abs(cb.fidelity_bound - 0.917004043204671232) <= 1e-4);

  VisibleOptions cert;
  cert.certified_value = 1.0;
  const BoundReport cc = visible_bound(cbit, 0.5, 1, 2.0, cert);
  CHECK(cc.certified);
  CHECK(cc.provenance == "eop_certified");
  CHECK(std::abs(cc.fidelity_bound - 0.917004043204671232) <= 1e-12);
}

TEST_CASE("visible exponent") {
  EopOptions opts;
  opts.restarts = 8;
  const ExponentReport cb = visible_exponent(test::classical_source({0.5, 0.5}), 0.0, 1, opts);
  REQUIRE(cb.grid.size() == exponent_alpha_grid().size());
  CHECK(cb.grid.back().alpha == 100.0);
  CHECK(cb.grid.back().exponent >= 0.49);
  CHECK(cb.K >= 0.49);

  const ExponentReport above = visible_exponent(test::classical_source({0.5, 0.5}), 1.5, 1, opts);
  CHECK(above.K == 0.0);

  const DensityMatrix pure = test::entangled_qubits(0.4);
  const double q = 0.2;
  const ExponentReport vis = visible_exponent(pure, q, 1, opts);
  const ExponentReport bl = blind_exponent(pure, q);
  CHECK(std::abs(vis.K - bl.K) <= 1e-3);
}

TEST_CASE("csv emission") {
  const BoundReport r = blind_bound(test::classical_source({0.5, 0.5}), 0.5, 10, 2.0);
  CHECK(bound_csv_header() == "mode,Q,n,alpha,entropic,exponent,bound,provenance");
  CHECK(bound_csv_row(r) ==
        "blind,0.500000000000,10,2.00000000000,1.00000000000,0.125000000000,0.420448207627,ki_entropy");
  CHECK(format_number(0.0) == "0.00000000000");
}

TEST_CASE("argument errors") {
  const DensityMatrix cbit = test::classical_source({0.5, 0.5});
  CHECK_THROWS_AS(blind_bound(cbit, 0.5, 1, 1.0), ValidationError);
  CHECK_THROWS_AS(blind_bound(cbit, 0.5, 0, 2.0), ValidationError);
  CHECK_THROWS_AS(visible_bound(cbit, 0.5, 1, 0.9), ValidationError);
  CHECK_THROWS_AS(visible_bound(cbit, 0.5, 5, 2.0), BudgetError);
}
