#include "gelab/sampler.hpp"

#include "gelab/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gelab {

void ChainConfig::validate() const {
    if (!(step_size > 0.0)) throw std::invalid_argument("chain step_size must be > 0");
    if (!(n_steps > n_burn)) throw std::invalid_argument("chain n_steps must exceed n_burn");
    if (!(adapt_target > 0.0 && adapt_target < 1.0)) throw std::invalid_argument("adapt_target must lie in (0, 1)");
    if (thin == 0) throw std::invalid_argument("chain thin must be >= 1");
}

ChainResult mala_chain(const LogTarget& target, const ChainConfig& config, Rng& rng) {
    ParamPoint start = ParamPoint::prior(target.dims(), target.rows(), rng);
    return mala_chain(target, config, rng, start);
}

ChainResult mala_chain(const LogTarget& target, const ChainConfig& config, Rng& rng, const ParamPoint& start) {
    config.validate();
    const Dims& dims = target.dims();
    const std::size_t rows = target.rows();
    NormalSource normal(rng);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    ParamPoint grad;
    Vector x = start.flatten();
    double logp = log_posterior_and_grad(target, start, grad);
    Vector g = grad.flatten();
    double tau = config.step_size;
    double log_tau = std::log(tau);

    ChainResult result;
    std::size_t accepted_after_burn = 0;
    Vector noise(x.size());
    for (std::size_t step = 0; step < config.n_steps; ++step) {
        for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = normal();
        const Vector mean_fwd = x + tau * g;
        const Vector y = mean_fwd + std::sqrt(2.0 * tau) * noise;
        ParamPoint grad_y;
        const ParamPoint theta_y = ParamPoint::unflatten(y, dims, rows);
        const double logp_y = log_posterior_and_grad(target, theta_y, grad_y);
        const Vector g_y = grad_y.flatten();
        const Vector mean_bwd = y + tau * g_y;
        const double log_q_fwd = -(y - mean_fwd).squaredNorm() / (4.0 * tau);
        const double log_q_bwd = -(x - mean_bwd).squaredNorm() / (4.0 * tau);
        const double log_ratio = logp_y - logp + log_q_bwd - log_q_fwd;
        const double accept_prob = std::isfinite(log_ratio) ? std::min(1.0, std::exp(log_ratio)) : 0.0;
        const bool accept = unif(rng) < accept_prob;
        if (accept) {
            x = y;
            logp = logp_y;
            g = g_y;
        }
        if (step < config.n_burn) {
            // Robbins-Monro on log step size.
            const double rate = 1.0 / std::pow(static_cast<double>(step) + 10.0, 0.6);
            log_tau += rate * (accept_prob - config.adapt_target);
            log_tau = std::clamp(log_tau, std::log(1e-8), std::log(10.0));
            tau = std::exp(log_tau);
        } else {
            if (accept) ++accepted_after_burn;
            if ((step - config.n_burn) % config.thin == 0) {
                ParamPoint theta = ParamPoint::unflatten(x, dims, rows);
                result.log_likelihoods.push_back(log_likelihood(target, theta));
                result.samples.push_back(std::move(theta));
            }
        }
    }
    result.step_size = tau;
    result.acceptance =
        static_cast<double>(accepted_after_burn) / static_cast<double>(config.n_steps - config.n_burn);
    if (result.acceptance < 0.05)
        throw MixingFailure("MALA acceptance " + std::to_string(result.acceptance) + " below 0.05 after adaptation");
    return result;
}

std::vector<std::vector<ParamPoint>> replica_draws(const LogTarget& target, std::size_t k,
                                                   const SamplerConfig& sampler, Rng& rng) {
    if (k < 2) throw std::invalid_argument("replica_draws needs k >= 2");
    std::vector<std::vector<ParamPoint>> out(k);
    if (sampler.kind == SamplerKind::mala) {
        for (std::size_t r = 0; r < k; ++r) out[r] = mala_chain(target, sampler.chain, rng).samples;
        return out;
    }
    const WeightedEnsemble ensemble = importance_ensemble(target, sampler.M, rng);
    std::vector<std::vector<std::size_t>> members(k);
    std::vector<std::vector<double>> weights(k);
    const double top = *std::max_element(ensemble.log_weights.begin(), ensemble.log_weights.end());
    for (std::size_t j = 0; j < ensemble.size(); ++j) {
        members[j % k].push_back(j);
        weights[j % k].push_back(std::exp(ensemble.log_weights[j] - top));
    }
    for (std::size_t r = 0; r < k; ++r) {
        if (std::accumulate(weights[r].begin(), weights[r].end(), 0.0) <= 0.0)
            throw DegenerateTargetError("replica group carries no importance weight");
        std::discrete_distribution<std::size_t> pick(weights[r].begin(), weights[r].end());
        out[r].reserve(sampler.resample);
        for (std::size_t s = 0; s < sampler.resample; ++s) out[r].push_back(ensemble.points[members[r][pick(rng)]]);
    }
    return out;
}

double bayes_predictor(const LogTarget& target, const Vector& x_new, const WeightedEnsemble& ensemble) {
    if (ensemble.size() == 0) throw std::invalid_argument("bayes_predictor needs a nonempty ensemble");
    const ModelSpec& model = target.model();
    const Dims& dims = model.dims();
    if (x_new.size() != static_cast<Eigen::Index>(dims.d)) throw std::invalid_argument("x_new has the wrong length");
    const double t = target.t();
    const GaussEquivParams& eq = model.equiv();
    const bool integrate_xi = t > 0.0 && eq.epsilon > 0.0;
    const GaussHermite& rule = gauss_hermite_rule(16);
    const std::vector<double> w = ensemble.normalized_weights();
    double acc = 0.0;
    for (std::size_t j = 0; j < ensemble.size(); ++j) {
        if (w[j] == 0.0) continue;
        const ParamPoint& theta = ensemble.points[j];
        const double nn = preactivation_nn(TeacherNN{theta.a, theta.W}, x_new, model.activation());
        const double lin = linear_projection(theta.v, x_new);
        double m = 0.0;
        if (integrate_xi) {
            m = rule.expect([&](double z) {
                return model.kernel().conditional_mean(combine_preactivation(nn, lin, z, t, eq));
            });
        } else {
            m = model.kernel().conditional_mean(combine_preactivation(nn, lin, 0.0, t, eq));
        }
        acc += w[j] * m;
    }
    return acc;
}

double batch_means_se(const std::vector<double>& series, std::size_t batches) {
    const std::size_t n = series.size();
    if (n < 2) return std::numeric_limits<double>::infinity();
    batches = std::min(batches, n);
    const std::size_t len = n / batches;
    std::vector<double> means;
    for (std::size_t b = 0; b < batches; ++b) {
        double s = 0.0;
        for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += series[i];
        means.push_back(s / static_cast<double>(len));
    }
    const double mu = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(batches);
    double var = 0.0;
    for (double m : means) var += (m - mu) * (m - mu);
    var /= static_cast<double>(batches - 1);
    return std::sqrt(var / static_cast<double>(batches));
}

TiEstimate thermodynamic_log_z(const LogTarget& target, const ChainConfig& config, std::size_t nodes, Rng& rng) {
    std::vector<double> x, w;
    auto fill = [&](const auto& abscissa, const auto& weights) {
        // Symmetric rule on [-1, 1] stored as nonnegative half.
        for (std::size_t i = 0; i < abscissa.size(); ++i) {
            x.push_back(abscissa[i]);
            w.push_back(weights[i]);
            if (abscissa[i] != 0.0) {
                x.push_back(-abscissa[i]);
                w.push_back(weights[i]);
            }
        }
    };
    if (nodes == 5) {
        fill(boost::math::quadrature::gauss<double, 5>::abscissa(), boost::math::quadrature::gauss<double, 5>::weights());
    } else if (nodes == 8) {
        fill(boost::math::quadrature::gauss<double, 8>::abscissa(), boost::math::quadrature::gauss<double, 8>::weights());
    } else if (nodes == 12) {
        fill(boost::math::quadrature::gauss<double, 12>::abscissa(),
             boost::math::quadrature::gauss<double, 12>::weights());
    } else {
        throw std::invalid_argument("thermodynamic_log_z supports 5, 8 or 12 nodes");
    }
    TiEstimate out;
    double var = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double beta = 0.5 * (x[i] + 1.0);
        const ChainResult chain = mala_chain(target.with_beta(beta), config, rng);
        const double mean =
            std::accumulate(chain.log_likelihoods.begin(), chain.log_likelihoods.end(), 0.0) /
            static_cast<double>(chain.log_likelihoods.size());
        const double se = batch_means_se(chain.log_likelihoods);
        out.betas.push_back(beta);
        out.mean_loglik.push_back(mean);
        out.log_z += 0.5 * w[i] * mean;
        var += 0.25 * w[i] * w[i] * se * se;
    }
    out.se = std::sqrt(var);
    return out;
}

}  // namespace gelab
