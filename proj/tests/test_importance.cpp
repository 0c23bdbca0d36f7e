#include "gelab/importance.hpp"
#include "gelab/quadrature.hpp"
#include "gelab/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace gelab;

namespace {

struct LogZ {
    double value;
    double se;
};

LogZ is_log_z(const IsProblem& problem, std::size_t M, std::uint64_t seed) {
    Rng rng(seed);
    WeightedAccumulator acc;
    run_prior_draws(problem, M, rng, [&](const PriorDraw& draw) { acc.add(draw.loglik[0]); });
    return {acc.log_mean_weight(), acc.log_mean_weight_se()};
}

IsProblem problem_for(const ModelSpec& m, const Dataset& data, double t, bool full) {
    return IsProblem{m, data.X, Matrix(0, data.X.cols()), full, false, {make_is_target(LogTarget(m, data, t))}};
}

}  // namespace

TEST_CASE("weighted accumulator on known weights") {
    WeightedAccumulator acc(1);
    const double lw[] = {std::log(1.0), std::log(3.0), std::log(2.0), std::log(6.0)};
    const double x[] = {1.0, 2.0, 3.0, 4.0};
    for (int i = 0; i < 4; ++i) acc.add(lw[i] + 700.0, &x[i]);
    CHECK(acc.log_mean_weight() == doctest::Approx(700.0 + std::log(3.0)));
    CHECK(acc.mean(0) == doctest::Approx((1 + 6 + 6 + 24) / 12.0));
    CHECK(acc.ess() == doctest::Approx(144.0 / 50.0));
    WeightedAccumulator empty;
    empty.add(-std::numeric_limits<double>::infinity());
    CHECK(empty.degenerate());
}

TEST_CASE("linear model at t = 1 matches the Gaussian evidence") {
    // identity activation: rho = 1, epsilon = 0, so Y ~ N(0, X X^T / d + delta I).
    const double delta = 0.6;
    const ModelSpec m(Activation(ActivationKind::identity), Readout::identity_unbounded(), delta, {7, 3, 3}, true);
    const Dataset data = gen_dataset(m, 1.0, 31);
    const Matrix C = data.X * data.X.transpose() / 7.0 + delta * Matrix::Identity(3, 3);
    const Eigen::LLT<Matrix> llt(C);
    const Vector w = llt.matrixL().solve(data.Y);
    const double logdet = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
    const double exact = -0.5 * w.squaredNorm() - 0.5 * logdet - 1.5 * std::log(2 * M_PI);
    for (bool full : {true, false}) {
        const LogZ est = is_log_z(problem_for(m, data, 1.0, full), 400000, 5);
        CHECK(std::abs(est.value - exact) < 4 * est.se);
        CHECK(est.se < 0.01);
    }
}

TEST_CASE("collapsed draws match a quadrature evidence for one sample") {
    // n = 1, p = 1: s_t = sqrt(1-t) a phi(sqrt(q) g) + sqrt(t) (rho sqrt(q) h + sqrt(eps) xi)
    // with q = |x|^2 / d and a, g, h, xi independent standard normals. The
    // trapezoid rule converges geometrically for these analytic integrands;
    // Gauss-Hermite does not (tanh has poles near the real axis).
    const ModelSpec m(Activation(ActivationKind::tanh), Readout::sign_mixture(ReadoutShape::tanh, 0.3), 0.2, {20, 1, 1});
    const Dataset data = gen_dataset(m, 0.5, 8);
    const double q = data.X.row(0).squaredNorm() / 20.0;
    const double y = data.Y(0);
    const double h = 0.05;
    std::vector<double> z, w;
    for (double x = -8.5; x <= 8.5; x += h) {
        z.push_back(x);
        w.push_back(h * std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI));
    }
    for (double t : {0.0, 0.5}) {
        const double lin_sd = std::sqrt(t * (m.equiv().rho * m.equiv().rho * q + m.equiv().epsilon));
        double exact = 0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double c = std::sqrt(1 - t) * std::tanh(std::sqrt(q) * z[i]);
            for (std::size_t j = 0; j < z.size(); ++j) {
                double inner = 0;
                for (std::size_t k = 0; k < (t > 0 ? z.size() : 1); ++k) {
                    const double lin = t > 0 ? lin_sd * z[k] : 0.0;
                    inner += (t > 0 ? w[k] : 1.0) * m.kernel().density(y, c * z[j] + lin);
                }
                exact += w[i] * w[j] * inner;
            }
        }
        const LogZ est = is_log_z(problem_for(m, data, t, false), 1000000, 17);
        CHECK(std::abs(est.value - std::log(exact)) < 4 * est.se);
    }
}

TEST_CASE("collapsed and full modes agree") {
    const ModelSpec m(Activation(ActivationKind::sine), Readout::deterministic(ReadoutShape::tanh), 0.5, {12, 4, 3});
    const Dataset data = gen_dataset(m, 0.3, 2);
    IsProblem collapsed = problem_for(m, data, 0.3, false);
    IsProblem full = problem_for(m, data, 0.3, true);
    CHECK_FALSE(uses_full_mode(collapsed));
    CHECK(uses_full_mode(full));
    const LogZ a = is_log_z(collapsed, 200000, 1);
    const LogZ b = is_log_z(full, 200000, 2);
    CHECK(std::abs(a.value - b.value) < 4 * std::hypot(a.se, b.se));
}

TEST_CASE("coupled linear block keeps its marginal law") {
    const ModelSpec m(Activation(ActivationKind::tanh), Readout::deterministic(ReadoutShape::tanh), 0.5, {30, 5, 2});
    const Dataset data = gen_dataset(m, 0.0, 3);
    IsProblem problem = problem_for(m, data, 1.0, false);
    problem.couple_linear = true;
    Rng rng(4);
    std::vector<double> z;
    const double sd = std::sqrt(data.X.row(0).squaredNorm() / 30.0);
    run_prior_draws(problem, 5000, rng, [&](const PriorDraw& draw) { z.push_back(draw.s_lin(0) / sd); });
    CHECK(ks_pvalue(ks_statistic(z, normal_cdf), z.size()) > 1e-3);
}

TEST_CASE("ensemble from prior draws") {
    const ModelSpec m(Activation(ActivationKind::tanh), Readout::deterministic(ReadoutShape::tanh), 0.5, {4, 3, 2});
    const Dataset data = gen_dataset(m, 0.0, 6);
    Rng rng(9);
    const WeightedEnsemble e = importance_ensemble(LogTarget(m, data, 0.0), 2000, rng);
    CHECK(e.size() == 2000);
    double total = 0;
    for (double w : e.normalized_weights()) total += w;
    CHECK(total == doctest::Approx(1.0));
    CHECK(e.ess_ok());
    CHECK_THROWS(importance_ensemble(LogTarget(m, data, 0.0), 10, rng));
}
