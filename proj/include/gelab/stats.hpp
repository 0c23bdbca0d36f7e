#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace gelab {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    double sd = 0.0;
    std::size_t count = 0;
};

MeanSe mean_se(const std::vector<double>& xs);
double sample_variance(const std::vector<double>& xs);

/// Delete-one jackknife for a statistic of n replicas. `stat(skip)` must
/// evaluate the statistic leaving out replica `skip`, or on all replicas
/// when skip == n.
MeanSe jackknife(std::size_t n, const std::function<double(std::size_t skip)>& stat);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Ordinary least squares y = intercept + slope x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Least squares y = c x through the origin; r2 is 1 - SS_res / SS_tot with
/// SS_tot about the mean of y.
LineFit fit_proportional(const std::vector<double>& x, const std::vector<double>& y);

/// One-sample Kolmogorov-Smirnov distance against a CDF and its asymptotic p-value.
double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf);
double ks_pvalue(double statistic, std::size_t n);
double normal_cdf(double x);

}  // namespace gelab
