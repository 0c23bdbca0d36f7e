#include "gelab/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace gelab;

TEST_CASE("mean and standard error") {
    const MeanSe m = mean_se({1.0, 2.0, 3.0, 4.0});
    CHECK(m.mean == doctest::Approx(2.5));
    CHECK(m.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 12.0)));
    CHECK(m.count == 4);
    CHECK(sample_variance({2.0, 4.0}) == doctest::Approx(2.0));
}

TEST_CASE("jackknife of the mean is the usual standard error") {
    const std::vector<double> xs = {0.3, -1.2, 2.5, 0.7, 1.1, -0.4};
    const MeanSe direct = mean_se(xs);
    const MeanSe jk = jackknife(xs.size(), [&](std::size_t skip) {
        double s = 0;
        std::size_t c = 0;
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (i != skip) {
                s += xs[i];
                ++c;
            }
        return s / static_cast<double>(c);
    });
    CHECK(jk.mean == doctest::Approx(direct.mean));
    CHECK(jk.se == doctest::Approx(direct.se));
}

TEST_CASE("line fits") {
    const std::vector<double> x = {1, 2, 3, 4};
    const LineFit f = fit_line(x, {3, 5, 7, 9});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r2 == doctest::Approx(1.0));
    const LineFit g = fit_proportional(x, {2, 4, 6, 8});
    CHECK(g.slope == doctest::Approx(2.0));
    CHECK(g.intercept == 0.0);
    CHECK(g.r2 == doctest::Approx(1.0));
}

TEST_CASE("Kolmogorov-Smirnov") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975));
    CHECK(ks_statistic({0.5}, [](double x) { return x; }) == doctest::Approx(0.5));
    // Tabulated asymptotic critical value at 5%.
    CHECK(ks_pvalue(1.3581 / std::sqrt(1e6), 1000000) == doctest::Approx(0.05).epsilon(0.01));
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    std::vector<double> xs(2000), ys(2000);
    for (auto& x : xs) x = nd(rng);
    for (auto& y : ys) y = nd(rng) + 0.3;
    CHECK(ks_pvalue(ks_statistic(xs, normal_cdf), xs.size()) > 1e-3);
    CHECK(ks_pvalue(ks_statistic(ys, normal_cdf), ys.size()) < 1e-6);
}
