#include "gelab/output_kernel.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>

using namespace gelab;

namespace {

// Trapezoid rule on a wide uniform grid; an oracle independent of the
// Gauss-Hermite machinery used inside the kernel.
double integrate(const std::function<double(double)>& f, double lo = -14.0, double hi = 14.0, int n = 56000) {
    const double h = (hi - lo) / n;
    double acc = 0.5 * (f(lo) + f(hi));
    for (int i = 1; i < n; ++i) acc += f(lo + i * h);
    return acc * h;
}

std::vector<OutputKernel> kernels() {
    return {OutputKernel(Readout::deterministic(ReadoutShape::tanh), 1.0),
            OutputKernel(Readout::deterministic(ReadoutShape::tanh), 0.3),
            OutputKernel(Readout::sign_mixture(ReadoutShape::tanh, 0.3), 0.5),
            OutputKernel(Readout(ReadoutShape::tanh, {{2.0, 0.2}, {-0.5, 0.5}, {1.0, 0.3}}), 0.8)};
}

}  // namespace

TEST_CASE("channel density is normalized") {
    for (const auto& k : kernels())
        for (double x : {-1.3, 0.0, 0.7}) CHECK(integrate([&](double y) { return k.density(y, x); }) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("u' and P_xx/P agree with finite differences of the density") {
    for (const auto& k : kernels())
        for (double x : {-0.8, 0.25, 1.4})
            for (double y : {-1.1, 0.3, 2.0}) {
                const double h = 1e-4;
                const double fd1 = (k.log_density(y, x + h) - k.log_density(y, x - h)) / (2 * h);
                CHECK(k.u_prime(y, x) == doctest::Approx(fd1).epsilon(1e-6));
                const double pxx = (k.density(y, x + h) - 2 * k.density(y, x) + k.density(y, x - h)) / (h * h);
                CHECK(k.derivs(y, x).uu == doctest::Approx(pxx / k.density(y, x)).epsilon(1e-4));
                CHECK(k.derivs(y, x).u2 == doctest::Approx(k.u_double_prime(y, x)).epsilon(1e-12));
            }
}

TEST_CASE("conditional moments match quadrature over y") {
    for (const auto& k : kernels())
        for (double x : {-0.9, 0.4}) {
            const double m = integrate([&](double y) { return y * k.density(y, x); });
            const double s2 = integrate([&](double y) { return y * y * k.density(y, x); }) - m * m;
            CHECK(k.conditional_mean(x) == doctest::Approx(m).epsilon(1e-9));
            CHECK(k.conditional_variance(x) == doctest::Approx(s2).epsilon(1e-8));
        }
}

TEST_CASE("side posterior mean matches a direct integral") {
    for (const auto& k : kernels())
        for (double lambda : {0.0, 0.5, 4.0}) {
            const double x = 0.6, yt = 1.3;
            auto lik = [&](double y) {
                const double r = yt - std::sqrt(lambda) * y;
                return k.density(y, x) * std::exp(-0.5 * r * r);
            };
            const double num = integrate([&](double y) { return y * lik(y); });
            const double den = integrate(lik);
            CHECK(k.side_posterior_mean(yt, x, lambda) == doctest::Approx(num / den).epsilon(1e-8));
        }
}

TEST_CASE("side channel is the rescaled kernel") {
    const OutputKernel k(Readout::deterministic(ReadoutShape::tanh), 0.7);
    const OutputKernel s = k.side_channel(2.0);
    CHECK(s.delta() == doctest::Approx(2.0 * 0.7 + 1.0));
    CHECK(s.conditional_mean(0.5) == doctest::Approx(std::sqrt(2.0) * std::tanh(0.5)).epsilon(1e-12));
}

TEST_CASE("zero readout is a pure noise channel") {
    const double delta = 0.6;
    const OutputKernel k(Readout::zero(), delta);
    CHECK(k.u_prime(1.7, 0.4) == 0.0);
    CHECK(k.expected_log_density(0.3) == doctest::Approx(-0.5 * std::log(2 * M_PI * M_E * delta)).epsilon(1e-12));
}

TEST_CASE("expected log density matches a direct integral") {
    for (const auto& k : kernels()) {
        const double x = -0.4;
        const double direct = integrate([&](double y) {
            const double p = k.density(y, x);
            return p > 0 ? p * std::log(p) : 0.0;
        });
        CHECK(k.expected_log_density(x) == doctest::Approx(direct).epsilon(1e-8));
    }
}

TEST_CASE("sampling follows the conditional law") {
    const OutputKernel k(Readout::sign_mixture(ReadoutShape::tanh, 0.8), 0.5);
    Rng rng(3);
    double s = 0, s2 = 0;
    const int N = 200000;
    for (int i = 0; i < N; ++i) {
        const double y = k.sample(0.9, rng).y;
        s += y;
        s2 += y * y;
    }
    const double m = s / N, v = s2 / N - m * m;
    CHECK(std::abs(m - k.conditional_mean(0.9)) < 4 * std::sqrt(v / N));
    CHECK(v == doctest::Approx(k.conditional_variance(0.9)).epsilon(0.02));
}

TEST_CASE("unbounded readout needs an explicit override") {
    CHECK_THROWS(OutputKernel(Readout::identity_unbounded(), 1.0));
    CHECK_NOTHROW(OutputKernel(Readout::identity_unbounded(), 1.0, true));
    CHECK_THROWS(OutputKernel(Readout::deterministic(ReadoutShape::tanh), 0.0));
}

TEST_CASE("moment bounds dominate the empirical second moments") {
    for (const auto& k : kernels()) {
        Rng rng(11);
        double u2 = 0, uu2 = 0;
        const int N = 50000;
        for (int i = 0; i < N; ++i) {
            const auto draw = k.sample(0.7, rng);
            const KernelDerivs dv = k.derivs(draw.y, 0.7);
            u2 += dv.u1 * dv.u1;
            uu2 += dv.uu * dv.uu;
        }
        CHECK(u2 / N <= k.u_prime_second_moment_bound());
        CHECK(uu2 / N <= k.uu_second_moment_bound());
    }
}
