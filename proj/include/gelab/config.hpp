#pragma once

#include "gelab/model.hpp"
#include "gelab/sampler.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gelab {

/// Text format: "[section]" headers and "key = value" lines; '#' starts a
/// comment; lists are comma separated. Sections and keys:
///
///   [model]   activation, readout, aux_support (scale:prob list), delta,
///             allow_violation
///   [sizes]   d, p, n, t, lambda, eta, grid (zip | product)
///   [sampler] method (importance | mala), M, n_outer, n_test, resample,
///             step_size, n_steps, n_burn, adapt_target, thin
///   [suite]   datasets, pairs, approx_M, cancellation_p, cancellation_M,
///             groups, per_group, fd_step, psi_M
///   [run]     suites, seed, output_dir
///
/// Required: model.activation, model.readout, model.delta, sizes.d, sizes.n.
/// sizes.p defaults to sizes.d.
struct ExperimentConfig {
    std::string activation = "tanh";
    std::string readout = "tanh";
    std::vector<AuxAtom> aux_support;  // empty: the readout's own law
    double delta = 1.0;
    bool allow_violation = false;

    std::vector<std::size_t> d;
    std::vector<std::size_t> p;
    std::vector<std::size_t> n;
    std::vector<double> t = {0.0};
    std::vector<double> lambda = {0.5};
    std::vector<double> eta = {1.0};
    bool product_grid = false;

    SamplerConfig sampler;
    std::size_t n_outer = 50;
    std::size_t n_test = 20;

    std::size_t datasets = 200;
    std::size_t pairs = 1000;
    std::size_t approx_M = 1000000;
    std::size_t cancellation_p = 1024;
    std::size_t cancellation_M = 20000;
    std::size_t groups = 40;
    std::size_t per_group = 5;
    double fd_step = 0.05;
    std::size_t psi_M = 10000;

    std::vector<std::string> suites;
    std::uint64_t seed = 0;
    std::string output_dir = "out";

    /// Size triplets in run order (zipped with broadcasting of length-1
    /// lists, or the full product).
    std::vector<Dims> dims_grid() const;
    ModelSpec model(const Dims& dims) const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&);
};

struct ConfigIssue {
    std::size_t line = 0;  // 0 when the problem is not tied to a line
    std::string message;
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

/// Every problem in the text is collected before throwing ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Normalized form: every key present, fixed order, reals with 17 digits.
std::string serialize_config(const ExperimentConfig& config);
/// FNV-1a of the normalized form without output_dir, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Names accepted in run.suites.
const std::vector<std::string>& known_suites();

}  // namespace gelab
