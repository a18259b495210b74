#include <doctest.h>

#include <cmath>

#include "eop_oracle.hpp"
#include "qsc/eop.hpp"

using namespace qsc;

TEST_CASE("eop agrees with the dense oracle on random qubit pairs") {
  test::OracleOptions o;
  o.restarts = 4;
  const double alphas[] = {1.5, 2.0, 3.0};
  for (std::uint64_t k = 0; k < 20; ++k) {
    const DensityMatrix src = random_state(Layout{{"A", 2}, {"R", 2}}, 500 + k);
    const double alpha = alphas[k % 3];
    const double lib = eop(src, alpha).value;
    const double ref = test::eop_oracle(src, alpha, o);
    INFO("state " << k << " alpha " << alpha << " eop " << lib << " oracle " << ref);
    CHECK(std::abs(lib - ref) <= 1e-3);
  }
}

TEST_CASE("eop is never above the dense oracle at alpha = 1") {
  test::OracleOptions o;
  o.restarts = 4;
  for (std::uint64_t k = 0; k < 4; ++k) {
    const DensityMatrix src = random_state(Layout{{"A", 2}, {"R", 2}}, 500 + k);
    const double lib = eop(src, 1.0).value;
    const double ref = test::eop_oracle(src, 1.0, o);
    INFO("state " << k << " eop " << lib << " oracle " << ref);
    CHECK(lib <= ref + 1e-3);
  }
}
