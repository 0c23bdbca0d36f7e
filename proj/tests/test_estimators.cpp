#include "gelab/estimators.hpp"
#include "gelab/quadrature.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace gelab;

namespace {

ModelSpec null_model(Dims dims, double delta = 0.7) {
    return ModelSpec(Activation(ActivationKind::tanh), Readout::zero(), delta, dims);
}

SamplerConfig is_sampler(std::size_t M) {
    SamplerConfig s;
    s.M = M;
    return s;
}

double chi2_density(double q, double d) {
    // q = chi2_d / d
    const double k = d / 2.0;
    return std::exp(k * std::log(k) + (k - 1) * std::log(q) - k * q - std::lgamma(k));
}

}  // namespace

TEST_CASE("null model free entropy is the pure-noise log density") {
    const double delta = 0.7;
    const ModelSpec m = null_model({6, 4, 5}, delta);
    const Estimate f = free_entropy(m, 0.0, 300, is_sampler(200), 1);
    CHECK(std::abs(f.value + 0.5 * std::log(2 * M_PI * M_E * delta)) < 4 * f.se);
    CHECK(f.flagged == 0);
}

TEST_CASE("null model carries no information") {
    const ModelSpec m = null_model({6, 4, 3});
    const Estimate mi = mutual_information(m, 0.5, 300, is_sampler(200), 2000, 3);
    CHECK(std::abs(mi.value) < 4 * mi.se);
    const Estimate ge = gen_error(m, 0.5, 20, 5, is_sampler(200), 4);
    CHECK(ge.value == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(ge.se < 1e-12);
    const PairedEstimate pair = free_entropy_pair(m, 20, 200, 5);
    CHECK(std::abs(pair.gap.value) < 1e-12);
}

TEST_CASE("psi of the pure-noise channel") {
    const OutputKernel k(Readout::zero(), 0.4);
    CHECK(psi_at_scale(k, 1.3) == doctest::Approx(-0.5 * std::log(2 * M_PI * M_E * 0.4)).epsilon(1e-12));
    const ModelSpec m = null_model({8, 8, 2}, 0.4);
    const Estimate lim = psi_term(m, PsiMode::limit, 1000, 1);
    CHECK(lim.value == doctest::Approx(-0.5 * std::log(2 * M_PI * M_E * 0.4)).epsilon(1e-12));
    CHECK(lim.se == 0.0);
    CHECK(parse_psi_mode("glm") == PsiMode::glm);
    CHECK_THROWS(parse_psi_mode("other"));
}

TEST_CASE("psi at a scale matches an integral of the conditional entropy") {
    const OutputKernel k(Readout::sign_mixture(ReadoutShape::tanh, 0.3), 0.3);
    const double sigma = 0.8;
    double acc = 0;
    const double h = 0.01;
    for (double z = -9; z <= 9; z += h) acc += h * std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI) * k.expected_log_density(sigma * z);
    CHECK(psi_at_scale(k, sigma) == doctest::Approx(acc).epsilon(1e-7));
}

TEST_CASE("without data the Bayes error is the prior predictive error") {
    // n = 0 at t = 1: S ~ N(0, rho^2 q + eps) given q = |x|^2 / d, and the
    // predictor is E f(S) = 0, so the error is delta + E tanh(S)^2.
    const double delta = 0.5;
    const std::size_t d = 8;
    const ModelSpec m(Activation(ActivationKind::tanh), Readout::deterministic(ReadoutShape::tanh), delta, {d, 4, 0});
    const GaussEquivParams& eq = m.equiv();
    const GaussHermite& gh = gauss_hermite_rule(60);
    double oracle = 0;
    const double dq = 1e-3;
    for (double q = dq / 2; q < 12; q += dq) {
        const double s = std::sqrt(eq.rho * eq.rho * q + eq.epsilon);
        oracle += dq * chi2_density(q, static_cast<double>(d)) *
                  gh.expect([&](double z) { return std::tanh(s * z) * std::tanh(s * z); });
    }
    oracle += delta;
    const Estimate ge = gen_error(m, 1.0, 400, 20, is_sampler(20000), 6);
    CHECK(std::abs(ge.value - oracle) < 4 * ge.se + 1e-4);
}

TEST_CASE("data lowers the Bayes error") {
    const ModelSpec m(Activation(ActivationKind::tanh), Readout::deterministic(ReadoutShape::tanh), 0.1, {4, 4, 8});
    const ModelSpec empty = m.with_dims({4, 4, 0});
    const Estimate with = gen_error(m, 0.0, 60, 20, is_sampler(20000), 8);
    const Estimate without = gen_error(empty, 0.0, 60, 20, is_sampler(2000), 8);
    CHECK(with.value < without.value);
    CHECK(with.value >= 0.1);
}

TEST_CASE("the bracket term vanishes and the terms match the finite difference") {
    const ModelSpec m(Activation(ActivationKind::tanh), Readout::deterministic(ReadoutShape::tanh), 0.5, {6, 6, 3});
    const DerivativeCheck c = derivative_check(m, 0.5, 0.05, 200, 4000, 11);
    CHECK(std::abs(c.terms.B.value) < 4 * c.terms.B.se);
    CHECK(std::abs(c.difference.value) < 4 * c.difference.se);
}

TEST_CASE("side-information identity on a small model") {
    const ModelSpec m(Activation(ActivationKind::tanh), Readout::deterministic(ReadoutShape::tanh), 0.5, {3, 3, 3});
    const ImmseReport r = immse_check(m, 0.5, 0.5, 1.0, 200, 4000, 12);
    CHECK(std::abs(r.difference.value) < 4 * r.difference.se);
    const Estimate mi = side_information_mi(m, 0.5, 0.5, 1.0, 50, 2000, 13);
    CHECK(mi.value > 0.0);
}

TEST_CASE("csv row has one field per header column") {
    const ModelSpec m = null_model({6, 4, 5});
    const Estimate f = free_entropy(m, 0.0, 5, is_sampler(200), 1);
    auto fields = [](const std::string& s) { return std::count(s.begin(), s.end(), ',') + 1; };
    CHECK(fields(estimate_csv_row(f)) == fields(estimate_csv_header()));
    CHECK(estimate_csv_row(f).find(",free_entropy,") != std::string::npos);
}
