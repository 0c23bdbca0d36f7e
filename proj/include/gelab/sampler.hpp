#pragma once

#include "gelab/importance.hpp"
#include "gelab/posterior.hpp"

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace gelab {

struct ChainConfig {
    double step_size = 0.05;
    std::size_t n_steps = 4000;
    std::size_t n_burn = 1000;
    double adapt_target = 0.574;
    std::size_t thin = 1;

    void validate() const;
};

class MixingFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ChainResult {
    std::vector<ParamPoint> samples;  // post burn-in, thinned
    std::vector<double> log_likelihoods;
    double acceptance = 0.0;          // post burn-in acceptance rate
    double step_size = 0.0;           // adapted step
};

/// Metropolis-adjusted Langevin chain on exp(log_posterior_unnorm). The step
/// is tuned toward `adapt_target` during burn-in and frozen afterwards.
ChainResult mala_chain(const LogTarget& target, const ChainConfig& config, Rng& rng);
ChainResult mala_chain(const LogTarget& target, const ChainConfig& config, Rng& rng, const ParamPoint& start);

enum class SamplerKind { importance, mala };

struct SamplerConfig {
    SamplerKind kind = SamplerKind::importance;
    std::size_t M = 20000;
    ChainConfig chain;
    /// Resampled draws per replica for importance replicas.
    std::size_t resample = 1000;
};

/// k conditionally independent posterior draws sequences for one dataset:
/// disjoint importance groups (draw j goes to group j mod k) resampled by
/// weight, or k independent chains.
std::vector<std::vector<ParamPoint>> replica_draws(const LogTarget& target, std::size_t k,
                                                   const SamplerConfig& sampler, Rng& rng);

/// Posterior mean of E[Y | s_new(theta)]. A fresh xi for the new input is
/// integrated out with Gauss-Hermite nodes when it enters (t > 0).
double bayes_predictor(const LogTarget& target, const Vector& x_new, const WeightedEnsemble& ensemble);

struct TiEstimate {
    double log_z = 0.0;
    double se = 0.0;
    std::vector<double> betas;
    std::vector<double> mean_loglik;
};

/// log Z = int_0^1 <log-likelihood>_beta d beta on Gauss-Legendre nodes,
/// each bracket from a MALA chain on the tempered posterior.
TiEstimate thermodynamic_log_z(const LogTarget& target, const ChainConfig& config, std::size_t nodes, Rng& rng);

/// Batch-means standard error of the mean of a correlated series.
double batch_means_se(const std::vector<double>& series, std::size_t batches = 20);

}  // namespace gelab
