#include "gelab/quadrature.hpp"
#include "gelab/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace gelab;

TEST_CASE("gauss-hermite integrates normal moments") {
    const GaussHermite& rule = gauss_hermite_rule(20);
    double wsum = 0.0;
    for (double w : rule.weights()) wsum += w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rule.expect([](double z) { return z * z; }) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rule.expect([](double z) { return z * z * z * z; }) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(std::abs(rule.expect([](double z) { return z * z * z; })) < 1e-12);
    // E cos(Z) = exp(-1/2)
    CHECK(rule.expect([](double z) { return std::cos(z); }) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("tensor rule factorizes") {
    const GaussHermite& rule = gauss_hermite_rule(30);
    const double v = rule.expect2([](double a, double b) { return std::cos(a) * std::cos(2.0 * b); });
    CHECK(v == doctest::Approx(std::exp(-0.5) * std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("refinement loop converges for smooth integrands") {
    const double v = gauss_expect_converged([](double z) { return std::tanh(z) * std::tanh(z); });
    CHECK(v == doctest::Approx(0.3942944903978410).epsilon(1e-10));
}

TEST_CASE("bad orders and non-finite integrands are rejected") {
    CHECK_THROWS_AS(gauss_hermite_expect([](double) { return 1.0; }, 1), std::invalid_argument);
    CHECK_THROWS_AS(gauss_hermite_expect([](double z) { return z > 0 ? 1.0 / 0.0 : 0.0; }, 10), QuadratureError);
}

TEST_CASE("seed derivation is stable and index sensitive") {
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2) != derive_seed(2, 2));
    Rng a = substream(42, 0), b = substream(42, 0);
    CHECK(a() == b());
}
