#include "gelab/verify.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace gelab;

TEST_CASE("exact power law gives the exponent") {
    std::vector<std::pair<double, double>> pts;
    for (double d : {16.0, 64.0, 256.0, 1024.0}) pts.push_back({d, 3.0 * std::pow(d, -0.5)});
    const ScalingFit f = scaling_exponent_fit(pts);
    CHECK(std::abs(f.exponent + 0.5) < 1e-12);
    CHECK(f.intercept == doctest::Approx(std::log(3.0)));
    CHECK(f.r2 == doctest::Approx(1.0));
    CHECK(f.ci_low <= f.exponent);
    CHECK(f.ci_high >= f.exponent);
}

TEST_CASE("constant statistic has zero exponent") {
    const ScalingFit f = scaling_exponent_fit({{10, 2.0}, {20, 2.0}, {40, 2.0}});
    CHECK(std::abs(f.exponent) < 1e-12);
}

TEST_CASE("invalid inputs are rejected") {
    CHECK_THROWS(scaling_exponent_fit({{10, 2.0}, {20, 1.0}}));
    CHECK_THROWS(scaling_exponent_fit({{10, 2.0}, {20, -1.0}, {40, 0.5}}));
    CHECK_THROWS(scaling_exponent_fit({{0, 2.0}, {20, 1.0}, {40, 0.5}}));
}

TEST_CASE("bootstrap interval covers the true exponent") {
    std::mt19937_64 rng(123);
    std::normal_distribution<double> nd(0.0, 0.1);
    int covered = 0;
    const int trials = 100;
    for (int k = 0; k < trials; ++k) {
        std::vector<std::pair<double, double>> pts;
        for (double d = 8; d <= 2048; d *= 2) pts.push_back({d, 2.0 * std::pow(d, -0.75) * std::exp(nd(rng))});
        const ScalingFit f = scaling_exponent_fit(pts, 400, static_cast<std::uint64_t>(k));
        if (f.ci_low <= -0.75 && -0.75 <= f.ci_high) ++covered;
    }
    CHECK(covered >= 90);
}

TEST_CASE("report bookkeeping") {
    SuiteReport r;
    r.suite = "demo";
    r.expect_zero("a", 0.1, 0.05);
    CHECK(r.passed());
    r.expect_zero("b", 0.2, 0.05);
    CHECK_FALSE(r.passed());
    r.expect_zero("c", 0.0, 0.0);
    CHECK(r.assertions.back().pass);
    r.expect_zero("d", 1e-6, 0.0);
    CHECK_FALSE(r.assertions.back().pass);
    const std::string s = report_summary(r);
    CHECK(s.find("a PASS") != std::string::npos);
    CHECK(s.find("b FAIL") != std::string::npos);
}

TEST_CASE("channel identities hold for the pure-noise and tanh channels") {
    const ModelSpec zero(Activation(ActivationKind::tanh), Readout::zero(), 0.5, {4, 4, 2});
    CHECK(pout_property_suite(zero, 10000, 1).passed());
    const ModelSpec tanh(Activation(ActivationKind::tanh), Readout::sign_mixture(ReadoutShape::tanh, 0.3), 0.5, {4, 4, 2});
    CHECK(pout_property_suite(tanh, 40000, 2).passed());
    CHECK_THROWS(pout_property_suite(tanh, 100, 2));
}

TEST_CASE("gap scans on the pure-noise model") {
    const ModelSpec zero(Activation(ActivationKind::tanh), Readout::zero(), 0.5, {8, 8, 2});
    GapScanConfig cfg;
    cfg.sequence = {{8, 8, 2}, {16, 16, 2}, {32, 32, 2}};
    cfg.n_outer = 10;
    cfg.M = 500;
    cfg.n_test = 5;
    CHECK(theorem1_gap_scan(zero, cfg, 3).passed());
    CHECK(theorem2_gap_scan(zero, cfg, 4).passed());
    cfg.sequence = {{32, 32, 2}, {8, 8, 2}, {16, 16, 2}};
    CHECK_THROWS(theorem1_gap_scan(zero, cfg, 3));
}

TEST_CASE("derivative displays vanish identically for a linear activation") {
    ApproximationConfig cfg;
    cfg.d_grid = {8, 16, 32};
    cfg.pairs = 3;
    cfg.M = 2000;
    const SuiteReport r = approximation_suite(Activation(ActivationKind::identity), cfg, 5);
    int found = 0;
    for (const Assertion& a : r.assertions)
        if (a.id == "approx/phi_prime/identically_zero" || a.id == "approx/phi_prime_phi_prime/identically_zero") {
            ++found;
            CHECK(a.pass);
            CHECK(a.statistic == 0.0);
        }
    CHECK(found == 2);
    cfg.d_grid = {8, 16};
    CHECK_THROWS(approximation_suite(Activation(ActivationKind::identity), cfg, 5));
}
