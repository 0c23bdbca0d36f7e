#pragma once

#include "gelab/estimators.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace gelab {

/// One checked statement. `threshold` is what the statistic was compared
/// against (e.g. 3 SE for a zero test, 0.9 for an r^2 floor).
struct Assertion {
    std::string id;
    bool pass = false;
    double statistic = 0.0;
    double se = 0.0;
    double threshold = 0.0;
};

struct ScalingPoint {
    Dims coords;
    double kappa = 0.0;
    Estimate gap;
};

struct ScalingFit {
    std::vector<std::pair<double, double>> points;  // (size, statistic)
    double exponent = 0.0;
    double intercept = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double r2 = 0.0;
};

struct SuiteReport {
    std::string suite;
    std::vector<Assertion> assertions;
    std::vector<Estimate> estimates;
    std::vector<ScalingFit> fits;
    std::vector<ScalingPoint> points;
    std::vector<std::string> notes;

    bool passed() const;
    void add(std::string id, bool pass, double statistic, double se, double threshold);
    /// |mean| <= k SE; a zero SE demands an exact zero (to rounding).
    void expect_zero(std::string id, double mean, double se, double k = 3.0);
};

/// "id status statistic se threshold" lines followed by a suite line.
std::string report_summary(const SuiteReport& report);
std::string report_csv(const SuiteReport& report);

/// Log-log least squares of statistic against size with a residual
/// bootstrap interval for the exponent.
ScalingFit scaling_exponent_fit(const std::vector<std::pair<double, double>>& points, std::size_t resamples = 400,
                                std::uint64_t seed = 0, double level = 0.95);

struct NishimoriConfig {
    std::vector<Dims> sizes;
    std::vector<double> times = {0.0, 0.5, 1.0};
    std::size_t datasets = 200;
    std::size_t M = 200000;
    std::size_t pairs = 1000;  // resampled replica pairs per dataset
};

SuiteReport nishimori_suite(const ModelSpec& model, const NishimoriConfig& config, std::uint64_t seed);

/// Response-side properties of the channel at a few fixed pre-activations.
SuiteReport pout_property_suite(const ModelSpec& model, std::size_t M, std::uint64_t seed,
                                std::vector<double> s_values = {-1.2, 0.3, 2.0});

struct ApproximationConfig {
    std::vector<std::size_t> d_grid = {16, 64, 256};
    std::size_t pairs = 24;     // input pairs per d
    std::size_t M = 1000000;    // weight draws per pair
    double slope_tolerance = 0.3;
};

SuiteReport approximation_suite(const Activation& phi, const ApproximationConfig& config, std::uint64_t seed);

struct CancellationConfig {
    std::vector<std::size_t> d_grid = {16, 64, 256};
    std::size_t p = 1024;
    std::size_t M = 20000;
    double exponent_low = -0.75;
    double exponent_high = -0.25;
};

SuiteReport epsilon_cancellation_check(const Activation& phi, const CancellationConfig& config, std::uint64_t seed);

struct ConcentrationConfig {
    std::vector<Dims> grid;
    double t = 0.5;
    std::size_t groups = 40;       // teacher readouts a*
    std::size_t per_group = 5;     // datasets sharing each a*
    std::size_t M = 20000;
    double r2_floor = 0.9;
};

SuiteReport concentration_check(const ModelSpec& model, const ConcentrationConfig& config, std::uint64_t seed);

struct GapScanConfig {
    std::vector<Dims> sequence;
    std::size_t n_outer = 200;
    std::size_t M = 20000;
    std::size_t n_test = 20;
    double ratio_limit = 5.0;
};

SuiteReport theorem1_gap_scan(const ModelSpec& model, const GapScanConfig& config, std::uint64_t seed);
SuiteReport theorem2_gap_scan(const ModelSpec& model, const GapScanConfig& config, std::uint64_t seed);

}  // namespace gelab
