#include <doctest.h>

#include <cmath>

#include "qsc/json_io.hpp"
#include "qsc/qcore.hpp"

using namespace qsc;

namespace {

DensityMatrix pure(const Layout& l, const Vector& v) { return PureState(l, v.normalized()).density(); }

Vector vec2(cplx a, cplx b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("layout bookkeeping") {
  Layout l{{"A", 2}, {"B", 3}, {"C", 4}};
  CHECK(l.total_dim() == 24);
  CHECK(l.index_of("C") == 2);
  CHECK(l.select({"C", "A"}) == Layout{{"A", 2}, {"C", 4}});
  CHECK(l.without({"B"}) == Layout{{"A", 2}, {"C", 4}});
  CHECK_THROWS_AS(l.index_of("Z"), LabelError);
  CHECK_THROWS_AS(Layout({{"A", 2}, {"A", 2}}), LabelError);
  CHECK_THROWS_AS(Layout({{"A", 0}}), DimensionError);
}

TEST_CASE("density matrix validation") {
  Matrix m = Matrix::Identity(2, 2) * 0.5;
  CHECK_NOTHROW(DensityMatrix(Layout{{"A", 2}}, m));
  Matrix bad_trace = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(DensityMatrix(Layout{{"A", 2}}, bad_trace), ValidationError);
  Matrix neg(2, 2);
  neg << 1.2, 0, 0, -0.2;
  CHECK_THROWS_AS(DensityMatrix(Layout{{"A", 2}}, neg), ValidationError);
  Matrix nonherm(2, 2);
  nonherm << 0.5, 0.1, 0.0, 0.5;
  CHECK_THROWS_AS(DensityMatrix(Layout{{"A", 2}}, nonherm), ValidationError);
  CHECK_THROWS_AS(DensityMatrix(Layout{{"A", 3}}, m), DimensionError);
  CHECK_THROWS_AS(PureState(Layout{{"A", 2}}, vec2(1.0, 1.0)), ValidationError);
}

TEST_CASE("partial trace examples") {
  const DensityMatrix ra = random_state(Layout{{"A", 2}}, 1);
  const DensityMatrix rb = random_state(Layout{{"B", 3}}, 2);
  const DensityMatrix ab = tensor(ra, rb);
  CHECK(linalg::max_abs(partial_trace(ab, {"A"}).matrix() - ra.matrix()) < 1e-12);
  CHECK(linalg::max_abs(partial_trace(ab, {"B"}).matrix() - rb.matrix()) < 1e-12);

  Vector bell = Vector::Zero(4);
  bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
  const DensityMatrix bell_a = partial_trace(PureState(Layout{{"A", 2}, {"B", 2}}, bell), {"A"});
  CHECK(linalg::max_abs(bell_a.matrix() - 0.5 * Matrix::Identity(2, 2)) < 1e-12);

  const DensityMatrix big = random_state(Layout{{"A", 2}, {"B", 3}, {"C", 2}}, 9);
  const DensityMatrix none = partial_trace(big, {});
  CHECK(none.dim() == 1);
  CHECK(std::abs(none.matrix()(0, 0) - 1.0) < 1e-10);
  CHECK_THROWS_AS(partial_trace(big, {"Z"}), LabelError);
}

TEST_CASE("partial trace keeps original order and matches an explicit sum") {
  const DensityMatrix big = random_state(Layout{{"A", 2}, {"B", 3}, {"C", 2}}, 4);
  const DensityMatrix ac = partial_trace(big, {"C", "A"});
  CHECK(ac.layout().labels() == std::vector<std::string>{"A", "C"});
  Matrix oracle = Matrix::Zero(4, 4);
  for (int a = 0; a < 2; ++a)
    for (int c = 0; c < 2; ++c)
      for (int a2 = 0; a2 < 2; ++a2)
        for (int c2 = 0; c2 < 2; ++c2)
          for (int b = 0; b < 3; ++b) oracle(a * 2 + c, a2 * 2 + c2) += big.matrix()((a * 3 + b) * 2 + c, (a2 * 3 + b) * 2 + c2);
  CHECK(linalg::max_abs(ac.matrix() - oracle) < 1e-14);
}

TEST_CASE("partial traces over disjoint sets commute") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DensityMatrix s = random_state(Layout{{"A", 2}, {"B", 2}, {"C", 3}, {"D", 2}}, seed);
    const DensityMatrix x = partial_trace(partial_trace(s, {"B", "C", "D"}), {"C", "D"});
    const DensityMatrix y = partial_trace(partial_trace(s, {"A", "C", "D"}), {"C", "D"});
    CHECK(linalg::max_abs(x.matrix() - y.matrix()) <= 1e-10);
  }
}

TEST_CASE("purification") {
  const DensityMatrix mm = maximally_mixed(Layout{{"A", 2}});
  const PureState p = purify(mm, "B");
  CHECK(p.layout() == Layout{{"A", 2}, {"B", 2}});
  CHECK(std::abs(std::abs(p.vector()(0)) - 1 / std::sqrt(2.0)) < 1e-12);
  CHECK(std::abs(std::abs(p.vector()(3)) - 1 / std::sqrt(2.0)) < 1e-12);
  CHECK(std::abs(p.vector()(1)) < 1e-12);
  CHECK(std::abs(p.vector()(2)) < 1e-12);

  const Vector phi = vec2(0.6, cplx(0.0, 0.8));
  const PureState pp = purify(pure(Layout{{"A", 2}}, phi), "B");
  // |phi>|0>: amplitudes on ancilla index 1 vanish.
  CHECK(std::abs(pp.vector()(1)) < 1e-12);
  CHECK(std::abs(pp.vector()(3)) < 1e-12);
  CHECK(std::abs(std::abs(pp.vector().dot(Vector(linalg::kron(phi, vec2(1.0, 0.0))))) - 1.0) < 1e-12);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DensityMatrix r = random_state(Layout{{"A", 3}}, seed);
    const DensityMatrix back = partial_trace(purify(r, "B"), {"A"});
    CHECK(linalg::max_abs(back.matrix() - r.matrix()) <= 1e-9);
  }
  const DensityMatrix r2 = random_state(Layout{{"A", 2}, {"R", 2}}, 3);
  CHECK(linalg::max_abs(partial_trace(purify(r2, "B"), {"A", "R"}).matrix() - r2.matrix()) <= 1e-9);
}

TEST_CASE("fidelity examples") {
  const Layout q{{"A", 2}};
  const DensityMatrix r = random_state(q, 5);
  CHECK(fidelity(r, r) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(fidelity(pure(q, vec2(1, 0)), pure(q, vec2(0, 1))) == doctest::Approx(0.0).epsilon(1e-12));
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(fidelity(pure(q, vec2(1, 0)), pure(q, vec2(s, s))) - 0.70710678118654752) < 1e-10);
  CHECK_THROWS_AS(fidelity(r, random_state(Layout{{"A", 3}}, 1)), DimensionError);
}

TEST_CASE("fidelity against the pure-state overlap") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const PureState a = random_pure_state(Layout{{"A", 3}}, seed);
    const PureState b = random_pure_state(Layout{{"A", 3}}, seed + 100);
    CHECK(std::abs(fidelity(a.density(), b.density()) - std::abs(a.vector().dot(b.vector()))) < 1e-8);
  }
}

TEST_CASE("fidelity properties") {
  const Layout l{{"A", 2}, {"B", 2}};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DensityMatrix r = random_state(l, seed);
    const DensityMatrix s = random_state(l, seed + 1000);
    const double f = fidelity(r, s);
    CHECK(std::abs(f - fidelity(s, r)) < 1e-10);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    CHECK(fidelity(partial_trace(r, {"A"}), partial_trace(s, {"A"})) >= f - 1e-10);
    CHECK(f < 1.0 - 1e-8);

    const Matrix v = random_isometry(4, 6, seed);
    const Channel iso = Channel::isometric(l, Layout{{"X", 6}}, v);
    const double fv = fidelity(apply_channel(iso, r), apply_channel(iso, s));
    CHECK(std::abs(fv - f) < 1e-8);
  }
}

TEST_CASE("uhlmann unitary") {
  const Layout l{{"A", 2}, {"B", 2}};
  const PureState psi = random_pure_state(l, 3);
  const Operator id = uhlmann_unitary(psi, psi, {"A"});
  CHECK(std::abs(std::abs(psi.vector().dot(apply_operator(id, psi).vector())) - 1.0) < 1e-8);

  // Same marginal on A, ancilla rotated by a known unitary.
  const Matrix w = random_isometry(2, 2, 77);
  const PureState phi = apply_operator(Operator{Layout{{"B", 2}}, w}, psi);
  const Operator u = uhlmann_unitary(psi, phi, {"A"});
  CHECK(std::abs(std::abs(psi.vector().dot(apply_operator(u, phi).vector())) - 1.0) < 1e-8);
  CHECK(linalg::max_abs(u.matrix * w - Matrix::Identity(2, 2) * (u.matrix * w)(0, 0)) < 1e-8);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Layout big{{"A", 3}, {"B", 2}, {"C", 2}};
    const PureState a = random_pure_state(big, seed);
    const PureState b = random_pure_state(big, seed + 50);
    const Operator v = uhlmann_unitary(a, b, {"A"});
    const double overlap = std::abs(a.vector().dot(apply_operator(v, b).vector()));
    CHECK(std::abs(overlap - fidelity(partial_trace(a, {"A"}), partial_trace(b, {"A"}))) <= 1e-8);
  }
  CHECK_THROWS_AS(uhlmann_unitary(psi, random_pure_state(Layout{{"A", 2}, {"C", 2}}, 1), {"A"}), LabelError);
}

TEST_CASE("apply channel") {
  const Layout l{{"A", 2}, {"B", 3}};
  const DensityMatrix r = random_state(l, 8);
  const DensityMatrix same = apply_channel(Channel::identity(Layout{{"A", 2}}), r);
  CHECK(linalg::max_abs(same.matrix() - r.matrix()) < 1e-14);

  const DensityMatrix dep = apply_channel(Channel::depolarizing(Layout{{"A", 2}}, Layout{{"A", 2}}), r);
  CHECK(linalg::max_abs(partial_trace(dep, {"A"}).matrix() - 0.5 * Matrix::Identity(2, 2)) < 1e-12);
  CHECK(linalg::max_abs(partial_trace(dep, {"B"}).matrix() - partial_trace(r, {"B"}).matrix()) < 1e-12);

  // Kraus-form oracle for a random Stinespring isometry A -> A' (x) E.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix v = random_isometry(2, 6, seed);
    const Channel ch(Layout{{"A", 2}}, Layout{{"X", 2}}, Layout{{"E", 3}}, v);
    const DensityMatrix out = apply_channel(ch, r);
    Matrix oracle = Matrix::Zero(6, 6);
    for (int e = 0; e < 3; ++e) {
      Matrix k(2, 2);
      for (int o = 0; o < 2; ++o)
        for (int i = 0; i < 2; ++i) k(o, i) = v(o * 3 + e, i);
      const Matrix kb = linalg::kron(k, Matrix::Identity(3, 3));
      oracle += kb * r.matrix() * kb.adjoint();
    }
    CHECK(out.layout() == Layout{{"X", 2}, {"B", 3}});
    CHECK(linalg::max_abs(out.matrix() - oracle) <= 1e-10);
    CHECK(std::abs(out.matrix().trace() - 1.0) <= 1e-9);
    CHECK(out.spectrum().minCoeff() >= -1e-9);
    const DensityMatrix with_env = apply_channel(ch, r, true);
    CHECK(with_env.layout() == Layout{{"X", 2}, {"E", 3}, {"B", 3}});
  }
  CHECK_THROWS_AS(apply_channel(Channel::identity(Layout{{"Z", 2}}), r), LabelError);
  CHECK_THROWS_AS(apply_channel(Channel::identity(Layout{{"A", 3}}), r), DimensionError);
}

TEST_CASE("random generators") {
  const Layout l{{"A", 3}, {"B", 2}};
  CHECK(random_state(l, 42).matrix() == random_state(l, 42).matrix());
  CHECK(random_pure_state(l, 42).vector() == random_pure_state(l, 42).vector());
  CHECK(random_isometry(2, 5, 42) == random_isometry(2, 5, 42));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DensityMatrix r = random_state(l, seed);
    CHECK(r.spectrum().minCoeff() >= -1e-12);
    CHECK(std::abs(r.matrix().trace() - 1.0) < 1e-12);
    const Matrix v = random_isometry(3, 7, seed);
    CHECK(linalg::isometry_defect(v) <= 1e-12);
  }
  CHECK_THROWS_AS(random_isometry(4, 3, 1), DimensionError);
}

TEST_CASE("channel construction checks") {
  CHECK_THROWS_AS(Channel(Layout{{"A", 2}}, Layout{{"A", 2}}, Layout{}, Matrix::Ones(2, 2)), ValidationError);
  const Channel k = Channel::from_kraus(Layout{{"A", 2}}, Layout{{"A", 2}},
                                        {Matrix::Identity(2, 2) * std::sqrt(0.5), Matrix::Identity(2, 2) * std::sqrt(0.5)});
  CHECK(k.env().total_dim() == 2);
  CHECK(linalg::isometry_defect(k.isometry()) < 1e-12);
  CHECK(k.kraus().size() == 2);
}

TEST_CASE("json round trip") {
  const DensityMatrix r = random_state(Layout{{"A", 2}, {"R", 3}}, 11);
  const DensityMatrix back = io::density_from_json(io::parse(io::to_json(r).dump(), "mem"));
  CHECK(back.layout() == r.layout());
  CHECK(linalg::max_abs(back.matrix() - r.matrix()) == 0.0);
  const PureState p = random_pure_state(Layout{{"A", 2}}, 3);
  CHECK(io::pure_from_json(io::to_json(p)).vector() == p.vector());
  const Channel ch(Layout{{"A", 2}}, Layout{{"X", 2}}, Layout{{"E", 3}}, random_isometry(2, 6, 1));
  CHECK(io::channel_from_json(io::to_json(ch)).isometry() == ch.isometry());
}

TEST_CASE("json diagnostics") {
  try {
    io::parse("{\n  \"factors\": [\n  }", "state.json");
    FAIL("expected a parse error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("state.json:3:") == 0);
  }
  const auto j = io::parse(R"({"factors":[{"label":"A","dim":2}],"matrix":[[[1,0],[0,0]],[[0,0]]]})", "x");
  try {
    io::density_from_json(j);
    FAIL("expected a field error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("matrix[1]") != std::string::npos);
  }
}
