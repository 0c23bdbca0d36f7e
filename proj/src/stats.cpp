#include "gelab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gelab {

MeanSe mean_se(const std::vector<double>& xs) {
    MeanSe out;
    out.count = xs.size();
    if (xs.empty()) return out;
    out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        out.sd = std::sqrt(sample_variance(xs));
        out.se = out.sd / std::sqrt(static_cast<double>(xs.size()));
    }
    return out;
}

double sample_variance(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

MeanSe jackknife(std::size_t n, const std::function<double(std::size_t)>& stat) {
    if (n < 2) throw std::invalid_argument("jackknife needs at least two replicas");
    MeanSe out;
    out.count = n;
    out.mean = stat(n);
    std::vector<double> loo(n);
    for (std::size_t i = 0; i < n; ++i) loo[i] = stat(i);
    const double m = std::accumulate(loo.begin(), loo.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double x : loo) ss += (x - m) * (x - m);
    out.se = std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n) * ss);
    out.sd = out.se * std::sqrt(static_cast<double>(n));
    return out;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line needs matching samples (>= 2)");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0) throw std::invalid_argument("fit_line needs at least two distinct abscissae");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return fit;
}

LineFit fit_proportional(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.empty()) throw std::invalid_argument("fit_proportional needs matching samples");
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        ss_res += (y[i] - fit.slope * x[i]) * (y[i] - fit.slope * x[i]);
        ss_tot += (y[i] - my) * (y[i] - my);
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
    if (xs.empty()) throw std::invalid_argument("ks_statistic needs samples");
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double dmax = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        dmax = std::max({dmax, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return dmax;
}

double ks_pvalue(double statistic, std::size_t n) {
    // Asymptotic Kolmogorov distribution with the Stephens small-sample correction.
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * statistic;
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace gelab
