#include "gelab/activation.hpp"
#include "gelab/equivalence.hpp"
#include "gelab/model.hpp"

#include <doctest.h>

#include <cmath>

using namespace gelab;

// Closed forms: sine has rho = e^{-1/2}, E sin^2 = (1 - e^{-2})/2. For
// erf(a x) with a = sqrt(pi)/2, rho = 1/sqrt(1 + 2a^2) and
// E phi^2 = (2/pi) asin(2a^2 / (1 + 2a^2)).
TEST_CASE("sine constants match closed forms") {
    const GaussEquivParams eq = gauss_equiv_params(Activation(ActivationKind::sine));
    CHECK(std::abs(eq.rho - std::exp(-0.5)) < 1e-10);
    CHECK(std::abs(eq.epsilon - ((1.0 - std::exp(-2.0)) / 2.0 - std::exp(-1.0))) < 1e-10);
}

TEST_CASE("scaled erf constants match closed forms") {
    const double a2 = M_PI / 4.0;
    const double rho = 1.0 / std::sqrt(1.0 + 2.0 * a2);
    const double m2 = 2.0 / M_PI * std::asin(2.0 * a2 / (1.0 + 2.0 * a2));
    const GaussEquivParams eq = gauss_equiv_params(Activation(ActivationKind::scaled_erf));
    CHECK(std::abs(eq.rho - rho) < 1e-10);
    CHECK(std::abs(eq.second_moment - m2) < 1e-10);
    CHECK(std::abs(eq.epsilon - (m2 - rho * rho)) < 1e-10);
}

TEST_CASE("tanh constants match a high-order quadrature oracle") {
    // Frozen from an independent order-200 Gauss-Hermite evaluation.
    const GaussEquivParams eq = gauss_equiv_params(Activation(ActivationKind::tanh));
    CHECK(std::abs(eq.rho - 0.6057055096021591) < 1e-10);
    CHECK(std::abs(eq.epsilon - 0.02741532603542962) < 1e-10);
}

TEST_CASE("identity is exactly linear") {
    const GaussEquivParams eq = gauss_equiv_params(Activation(ActivationKind::identity));
    CHECK(eq.rho == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(eq.epsilon) < 1e-12);
}

TEST_CASE("activation derivatives agree with finite differences") {
    for (auto kind : {ActivationKind::tanh, ActivationKind::sine, ActivationKind::scaled_erf}) {
        const Activation phi(kind);
        for (double x : {-1.7, -0.2, 0.0, 0.4, 2.3}) {
            const double h = 1e-5;
            CHECK(phi.deriv(x) == doctest::Approx((phi(x + h) - phi(x - h)) / (2 * h)).epsilon(1e-7));
            CHECK(phi.deriv2(x) == doctest::Approx((phi.deriv(x + h) - phi.deriv(x - h)) / (2 * h)).epsilon(1e-6));
            CHECK(phi.deriv3(x) == doctest::Approx((phi.deriv2(x + h) - phi.deriv2(x - h)) / (2 * h)).epsilon(1e-6));
            CHECK(std::abs(phi(-x) + phi(x)) < 1e-15);
        }
    }
}

TEST_CASE("kappa follows its formula") {
    const Dims dims{16, 16, 4};
    const double expected = (1.0 + 4.0 / 16.0) * (4.0 / 16.0 + 4.0 / 64.0 + 0.25);
    CHECK(kappa(dims) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(kappa(Dims{256, 256, 4}) < kappa(Dims{64, 64, 4}));
}

TEST_CASE("unknown activation names are rejected") {
    CHECK_THROWS_AS(Activation::parse("relu"), std::invalid_argument);
    CHECK(Activation::parse("sine").kind() == ActivationKind::sine);
}
