#include "gelab/estimators.hpp"

#include "gelab/data_gen.hpp"
#include "gelab/parallel.hpp"
#include "gelab/quadrature.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gelab {

namespace {

// Stream layout per outer replica r: dataset, sampler, test inputs, side block.
std::uint64_t replica_seed(std::uint64_t seed, std::size_t r) { return derive_seed(seed, r); }
std::uint64_t dataset_seed(std::uint64_t rs) { return derive_seed(rs, 0); }
Rng sampler_rng(std::uint64_t rs) { return substream(rs, 1); }
Rng test_rng(std::uint64_t rs) { return substream(rs, 2); }
std::uint64_t side_seed(std::uint64_t rs) { return derive_seed(rs, 3); }

IsTarget plain_target(const ModelSpec& model, double t, const Vector& y) {
    IsTarget target;
    target.t = t;
    target.y = y;
    target.kernels.push_back(model.kernel());
    return target;
}

IsProblem make_problem(const ModelSpec& model, const Matrix& X, std::vector<IsTarget> targets,
                       Matrix probes = Matrix()) {
    IsProblem problem{model, X, probes.size() == 0 ? Matrix(0, X.cols()) : probes, false, false, std::move(targets)};
    return problem;
}

void require_log_z(const WeightedAccumulator& acc) {
    if (acc.degenerate()) throw DegenerateTargetError("every importance weight vanished (degenerate target)");
}

std::size_t count_flags(const std::vector<double>& ess) {
    std::size_t k = 0;
    for (double e : ess)
        if (e < kEssFloor) ++k;
    return k;
}

Matrix draw_inputs(std::size_t n, std::size_t d, Rng& rng) {
    if (n == 0) return Matrix(0, static_cast<Eigen::Index>(d));
    return sample_inputs(n, d, rng);
}

// Conditional mean of the response at a new input whose fresh xi is
// integrated out when it enters the pre-activation.
double predictive_mean(const OutputKernel& kernel, double nn, double lin, double t, const GaussEquivParams& eq) {
    if (t > 0.0 && eq.epsilon > 0.0) {
        const GaussHermite& rule = gauss_hermite_rule(16);
        return rule.expect([&](double z) { return kernel.conditional_mean(combine_preactivation(nn, lin, z, t, eq)); });
    }
    return kernel.conditional_mean(combine_preactivation(nn, lin, 0.0, t, eq));
}

// Squared error of a prediction against a response drawn at teacher
// pre-activation s, with the response noise integrated out.
double integrated_sq_error(const OutputKernel& kernel, double s, double prediction) {
    const double m = kernel.conditional_mean(s);
    return (m - prediction) * (m - prediction) + kernel.conditional_variance(s);
}

MeanSe pooled(const std::vector<double>& xs) { return mean_se(xs); }

}  // namespace

Estimate make_estimate(std::string quantity, const MeanSe& ms, const Dims& dims, double t, std::size_t n_inner,
                       std::uint64_t seed, std::size_t flagged) {
    Estimate e;
    e.quantity = std::move(quantity);
    e.value = ms.mean;
    e.se = ms.se;
    e.n_outer = ms.count;
    e.n_inner = n_inner;
    e.dims = dims;
    e.t = t;
    e.kappa = kappa(dims);
    e.seed = seed;
    e.flagged = flagged;
    return e;
}

std::string estimate_csv_header() { return "d,p,n,t,quantity,value,stderr,n_outer,n_inner,kappa,seed"; }

std::string estimate_csv_row(const Estimate& e) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.6g,%s,%.12g,%.6g,%zu,%zu,%.8g,%llu", e.dims.d, e.dims.p, e.dims.n,
                  e.t, e.quantity.c_str(), e.value, e.se, e.n_outer, e.n_inner, e.kappa,
                  static_cast<unsigned long long>(e.seed));
    return buf;
}

double dataset_log_z(const ModelSpec& model, const Dataset& data, double t, const SamplerConfig& sampler, Rng& rng,
                     double* ess) {
    if (sampler.kind == SamplerKind::mala) {
        const TiEstimate ti = thermodynamic_log_z(LogTarget(model, data, t), sampler.chain, 8, rng);
        if (ess != nullptr) *ess = std::numeric_limits<double>::infinity();
        return ti.log_z;
    }
    const IsProblem problem = make_problem(model, data.X, {plain_target(model, t, data.Y)});
    WeightedAccumulator acc;
    run_prior_draws(problem, sampler.M, rng, [&](const PriorDraw& draw) { acc.add(draw.loglik[0]); });
    require_log_z(acc);
    if (ess != nullptr) *ess = acc.ess();
    return acc.log_mean_weight();
}

Estimate free_entropy(const ModelSpec& model, double t, std::size_t n_outer, const SamplerConfig& sampler,
                      std::uint64_t seed) {
    const Dims& dims = model.dims();
    if (dims.n == 0) throw std::invalid_argument("free_entropy needs n >= 1");
    std::vector<double> values(n_outer), ess(n_outer);
    parallel_for(n_outer, [&](std::size_t r) {
        const std::uint64_t rs = replica_seed(seed, r);
        const Dataset data = gen_dataset(model, t, dataset_seed(rs));
        Rng rng = sampler_rng(rs);
        values[r] = dataset_log_z(model, data, t, sampler, rng, &ess[r]) / static_cast<double>(dims.n);
    });
    return make_estimate("free_entropy", pooled(values), dims, t, sampler.M, seed, count_flags(ess));
}

Estimate conditional_entropy_term(const ModelSpec& model, double t, std::size_t M, std::uint64_t seed) {
    if (M < 1000) throw std::invalid_argument("conditional_entropy_term needs M >= 1000");
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("interpolation time t must lie in [0, 1]");
    const Dims& dims = model.dims();
    const GaussEquivParams& eq = model.equiv();
    const Activation& phi = model.activation();
    Rng rng = substream(seed, 0);
    NormalSource normal(rng);
    std::gamma_distribution<double> chi2(0.5 * static_cast<double>(dims.d), 2.0);
    std::vector<double> values(M);
    const double sqrt_p = std::sqrt(static_cast<double>(dims.p));
    for (std::size_t j = 0; j < M; ++j) {
        // Given the input, W x / sqrt(d) and v^T x / sqrt(d) are independent
        // N(0, |x|^2/d) variables.
        const double q = chi2(rng) / static_cast<double>(dims.d);
        const double sq = std::sqrt(q);
        double nn = 0.0;
        if (t < 1.0)
            for (std::size_t i = 0; i < dims.p; ++i) {
                const double a = normal();
                nn += a * phi.value(sq * normal());
            }
        const double lin = sq * normal();
        const double xi = normal();
        const double s = combine_preactivation(nn / sqrt_p, lin, xi, t, eq);
        values[j] = model.kernel().expected_log_density(s);
    }
    return make_estimate("conditional_entropy", mean_se(values), dims, t, M, seed);
}

PsiMode parse_psi_mode(const std::string& name) {
    if (name == "nn") return PsiMode::nn;
    if (name == "glm") return PsiMode::glm;
    if (name == "limit") return PsiMode::limit;
    throw std::invalid_argument("unknown psi mode '" + name + "' (expected nn, glm or limit)");
}

double psi_at_scale(const OutputKernel& kernel, double sigma, int order) {
    return gauss_trapezoid_expect([&](double z) { return kernel.expected_log_density(sigma * z, order); });
}

Estimate psi_term(const ModelSpec& model, PsiMode mode, std::size_t M, std::uint64_t seed) {
    const Dims& dims = model.dims();
    const GaussEquivParams& eq = model.equiv();
    if (mode == PsiMode::limit) {
        MeanSe ms;
        ms.mean = psi_at_scale(model.kernel(), std::sqrt(eq.second_moment));
        ms.count = 1;
        return make_estimate("psi_limit", ms, dims, 1.0, 0, seed);
    }
    if (M < 1000) throw std::invalid_argument("psi_term needs M >= 1000");
    Rng rng = substream(seed, 0);
    NormalSource normal(rng);
    std::gamma_distribution<double> chi2(0.5 * static_cast<double>(dims.d), 2.0);
    std::vector<double> values(M);
    for (std::size_t j = 0; j < M; ++j) {
        const double q = chi2(rng) / static_cast<double>(dims.d);
        double var = 0.0;
        if (mode == PsiMode::nn) {
            const double sq = std::sqrt(q);
            for (std::size_t i = 0; i < dims.p; ++i) {
                const double f = model.activation().value(sq * normal());
                var += f * f;
            }
            var /= static_cast<double>(dims.p);
        } else {
            var = eq.rho * eq.rho * q + eq.epsilon;
        }
        values[j] = psi_at_scale(model.kernel(), std::sqrt(var), 40);
    }
    return make_estimate(mode == PsiMode::nn ? "psi_nn" : "psi_glm", mean_se(values), dims,
                         mode == PsiMode::nn ? 0.0 : 1.0, M, seed);
}

Estimate mutual_information(const ModelSpec& model, double t, std::size_t n_outer, const SamplerConfig& sampler,
                            std::size_t M_cond, std::uint64_t seed) {
    const Estimate f = free_entropy(model, t, n_outer, sampler, derive_seed(seed, 0));
    const Estimate c = conditional_entropy_term(model, t, M_cond, derive_seed(seed, 1));
    MeanSe ms;
    ms.mean = -f.value + c.value;
    ms.se = std::hypot(f.se, c.se);
    ms.count = f.n_outer;
    return make_estimate("mutual_information", ms, model.dims(), t, sampler.M, seed, f.flagged);
}

Estimate gen_error(const ModelSpec& model, double t, std::size_t n_outer, std::size_t n_test,
                   const SamplerConfig& sampler, std::uint64_t seed) {
    if (n_test == 0) throw std::invalid_argument("gen_error needs n_test >= 1");
    const Dims& dims = model.dims();
    const GaussEquivParams& eq = model.equiv();
    const OutputKernel& kernel = model.kernel();
    std::vector<double> values(n_outer), ess(n_outer, std::numeric_limits<double>::infinity());
    parallel_for(n_outer, [&](std::size_t r) {
        const std::uint64_t rs = replica_seed(seed, r);
        const Dataset data = gen_dataset(model, t, dataset_seed(rs));
        Rng trng = test_rng(rs);
        const Matrix probes = draw_inputs(n_test, dims.d, trng);
        NormalSource tnormal(trng);
        std::vector<double> teacher_s(n_test);
        for (std::size_t k = 0; k < n_test; ++k) {
            const Vector x = probes.row(static_cast<Eigen::Index>(k)).transpose();
            const double nn = preactivation_nn(data.nn, x, model.activation());
            teacher_s[k] = combine_preactivation(nn, linear_projection(data.glm.v, x), tnormal(), t, eq);
        }
        Rng rng = sampler_rng(rs);
        std::vector<double> prediction(n_test);
        if (sampler.kind == SamplerKind::mala) {
            const LogTarget target(model, data, t);
            const WeightedEnsemble ensemble = WeightedEnsemble::uniform(mala_chain(target, sampler.chain, rng).samples, t);
            for (std::size_t k = 0; k < n_test; ++k)
                prediction[k] = bayes_predictor(target, probes.row(static_cast<Eigen::Index>(k)).transpose(), ensemble);
        } else {
            const IsProblem problem = make_problem(model, data.X, {plain_target(model, t, data.Y)}, probes);
            const auto n_rows = static_cast<std::size_t>(data.X.rows());
            WeightedAccumulator acc(n_test);
            Vector obs(static_cast<Eigen::Index>(n_test));
            run_prior_draws(problem, sampler.M, rng, [&](const PriorDraw& draw) {
                for (std::size_t k = 0; k < n_test; ++k) {
                    const auto col = static_cast<Eigen::Index>(n_rows + k);
                    const double nn = draw.s_nn.size() > 0 ? draw.s_nn(col) : 0.0;
                    obs(static_cast<Eigen::Index>(k)) = predictive_mean(kernel, nn, draw.s_lin(col), t, eq);
                }
                acc.add(draw.loglik[0], obs);
            });
            require_log_z(acc);
            ess[r] = acc.ess();
            for (std::size_t k = 0; k < n_test; ++k) prediction[k] = acc.mean(k);
        }
        double err = 0.0;
        for (std::size_t k = 0; k < n_test; ++k) err += integrated_sq_error(kernel, teacher_s[k], prediction[k]);
        values[r] = err / static_cast<double>(n_test);
    });
    const std::size_t inner = sampler.kind == SamplerKind::mala ? sampler.chain.n_steps : sampler.M;
    return make_estimate("gen_error", mean_se(values), dims, t, inner, seed, count_flags(ess));
}

namespace {

struct SideRun {
    std::vector<double> log_z;       // joint evidence per lambda
    double log_z_train = 0.0;        // evidence of D alone
    std::vector<double> proxy_error; // per lambda
    double min_ess = 0.0;
    std::size_t m = 0;
};

SideRun side_run(const ModelSpec& model, double t, const std::vector<double>& lambdas, double eta, std::size_t M,
                 std::uint64_t rs) {
    const Dims& dims = model.dims();
    const Dataset data = gen_dataset(model, t, dataset_seed(rs));
    const SideInfo base = gen_side_info(data, model, 0.0, eta, side_seed(rs));
    const std::size_t n = dims.n;
    const std::size_t m = base.X_new.rows();
    const auto rows = static_cast<Eigen::Index>(n + m);

    Matrix X(rows, static_cast<Eigen::Index>(dims.d));
    X.topRows(static_cast<Eigen::Index>(n)) = data.X;
    X.bottomRows(static_cast<Eigen::Index>(m)) = base.X_new;

    std::vector<std::size_t> row_kernel(n + m, 0);
    for (std::size_t k = n; k < n + m; ++k) row_kernel[k] = 1;
    std::vector<IsTarget> targets;
    std::vector<SideInfo> sides;
    // Target 0 is lambda = 0 against Y~ = Z': it carries D alone up to the
    // s-independent factor prod N(Z'; 0, 1).
    std::vector<double> all = {0.0};
    all.insert(all.end(), lambdas.begin(), lambdas.end());
    for (double lambda : all) {
        SideInfo side = with_lambda(base, lambda);
        IsTarget target;
        target.t = t;
        target.y = Vector(rows);
        target.y.head(static_cast<Eigen::Index>(n)) = data.Y;
        target.y.tail(static_cast<Eigen::Index>(m)) = side.Y_tilde;
        target.kernels = {model.kernel(), model.kernel().side_channel(lambda)};
        target.row_kernel = row_kernel;
        targets.push_back(std::move(target));
        sides.push_back(std::move(side));
    }
    IsProblem problem = make_problem(model, X, targets);
    const GaussEquivParams& eq = model.equiv();
    std::vector<WeightedAccumulator> accs(all.size(), WeightedAccumulator(m));
    Vector obs(static_cast<Eigen::Index>(m));
    Rng rng = sampler_rng(rs);
    run_prior_draws(problem, M, rng, [&](const PriorDraw& draw) {
        for (std::size_t k = 0; k < all.size(); ++k) {
            for (std::size_t nu = 0; nu < m; ++nu) {
                const std::size_t row = n + nu;
                const double s = draw.s_t(row, t, eq, draw.xi(static_cast<Eigen::Index>(row)));
                obs(static_cast<Eigen::Index>(nu)) =
                    model.kernel().side_posterior_mean(sides[k].Y_tilde(static_cast<Eigen::Index>(nu)), s, all[k]);
            }
            accs[k].add(draw.loglik[k], obs);
        }
    });
    SideRun out;
    out.m = m;
    out.min_ess = std::numeric_limits<double>::infinity();
    for (const auto& acc : accs) {
        require_log_z(acc);
        out.min_ess = std::min(out.min_ess, acc.ess());
    }
    double constant = 0.0;
    for (Eigen::Index nu = 0; nu < static_cast<Eigen::Index>(m); ++nu)
        constant += -0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * base.tilde_noise(nu) * base.tilde_noise(nu);
    out.log_z_train = accs[0].log_mean_weight() - constant;
    for (std::size_t k = 1; k < all.size(); ++k) {
        out.log_z.push_back(accs[k].log_mean_weight());
        double err = 0.0;
        for (std::size_t nu = 0; nu < m; ++nu) {
            const double r = base.Y_prime(static_cast<Eigen::Index>(nu)) - accs[k].mean(nu);
            err += r * r;
        }
        out.proxy_error.push_back(m > 0 ? err / static_cast<double>(m) : 0.0);
    }
    return out;
}

}  // namespace

Estimate gen_error_proxy(const ModelSpec& model, double t, double lambda, double eta, std::size_t n_outer,
                         std::size_t M, std::uint64_t seed) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
    std::vector<double> values(n_outer), ess(n_outer);
    parallel_for(n_outer, [&](std::size_t r) {
        const SideRun run = side_run(model, t, {lambda}, eta, M, replica_seed(seed, r));
        values[r] = run.proxy_error[0];
        ess[r] = run.min_ess;
    });
    return make_estimate("gen_error_proxy", mean_se(values), model.dims(), t, M, seed, count_flags(ess));
}

Estimate side_information_mi(const ModelSpec& model, double t, double lambda, double eta, std::size_t n_outer,
                             std::size_t M, std::uint64_t seed) {
    const Dims& dims = model.dims();
    const double n = static_cast<double>(dims.n);
    std::vector<double> values(n_outer), ess(n_outer);
    parallel_for(n_outer, [&](std::size_t r) {
        const SideRun run = side_run(model, t, {lambda}, eta, M, replica_seed(seed, r));
        const double m = static_cast<double>(run.m);
        values[r] = -(run.log_z[0] - run.log_z_train) / n - 0.5 * m / n * std::log(2.0 * std::numbers::pi * std::numbers::e);
        ess[r] = run.min_ess;
    });
    return make_estimate("side_information_mi", mean_se(values), dims, t, M, seed, count_flags(ess));
}

ImmseReport immse_check(const ModelSpec& model, double t, double lambda_mid, double eta, std::size_t n_outer,
                        std::size_t M, std::uint64_t seed, double relative_spacing) {
    if (!(lambda_mid > 0.0)) throw std::invalid_argument("immse_check needs lambda_mid > 0");
    const Dims& dims = model.dims();
    const double n = static_cast<double>(dims.n);
    const double h = relative_spacing * lambda_mid;
    const std::vector<double> grid = {lambda_mid - h, lambda_mid, lambda_mid + h};
    std::vector<double> deriv(n_outer), rhs(n_outer), diff(n_outer), ess(n_outer);
    parallel_for(n_outer, [&](std::size_t r) {
        const SideRun run = side_run(model, t, grid, eta, M, replica_seed(seed, r));
        const double m = static_cast<double>(run.m);
        // (1/n) I(lambda) = -(log Z_lambda - log Z_D)/n + const.
        deriv[r] = -(run.log_z[2] - run.log_z[0]) / (2.0 * h * n);
        rhs[r] = 0.5 * m / n * run.proxy_error[1];
        diff[r] = deriv[r] - rhs[r];
        ess[r] = run.min_ess;
    });
    ImmseReport report;
    report.lambda_mid = lambda_mid;
    report.spacing = h;
    report.eta = eta;
    const std::size_t flags = count_flags(ess);
    report.derivative = make_estimate("immse_lhs", mean_se(deriv), dims, t, M, seed, flags);
    report.rhs = make_estimate("immse_rhs", mean_se(rhs), dims, t, M, seed, flags);
    report.difference = make_estimate("immse_difference", mean_se(diff), dims, t, M, seed, flags);
    report.discrepancy_se_units =
        report.difference.se > 0.0 ? std::abs(report.difference.value) / report.difference.se : 0.0;
    return report;
}

namespace {

struct DerivReplica {
    double log_z = 0.0;
    double g1 = 0.0, g2 = 0.0, g3 = 0.0;
    double b = 0.0;
    double fd = 0.0;
    double ess = 0.0;
};

DerivReplica derivative_replica(const ModelSpec& model, double t, double h, std::size_t M, std::uint64_t rs) {
    const Dims& dims = model.dims();
    const GaussEquivParams& eq = model.equiv();
    const double n = static_cast<double>(dims.n);
    const Dataset data = gen_dataset(model, t, dataset_seed(rs));

    DerivReplica out;
    // Teacher-side sums.
    for (Eigen::Index mu = 0; mu < data.X.rows(); ++mu) {
        const Vector x = data.X.row(mu).transpose();
        const double s_nn = preactivation_nn(data.nn, x, model.activation());
        const double lin = linear_projection(data.glm.v, x);
        const double s = combine_preactivation(s_nn, lin, data.glm.xi(mu), t, eq);
        const double u1 = model.kernel().u_prime(data.Y(mu), s);
        out.g1 += u1 * s_nn / std::sqrt(1.0 - t);
        out.g2 += u1 * eq.rho * lin / std::sqrt(t);
        out.g3 += u1 * std::sqrt(eq.epsilon / t) * data.glm.xi(mu);
    }
    out.g1 /= 2.0 * n;
    out.g2 /= 2.0 * n;
    out.g3 /= 2.0 * n;

    std::vector<IsTarget> targets = {plain_target(model, t, data.Y)};
    if (h > 0.0) {
        targets.push_back(plain_target(model, t - h, retime(data, model, t - h).Y));
        targets.push_back(plain_target(model, t + h, retime(data, model, t + h).Y));
    }
    const IsProblem problem = make_problem(model, data.X, targets);
    std::vector<WeightedAccumulator> accs(targets.size(), WeightedAccumulator(1));
    accs[0] = WeightedAccumulator(1);
    const double c_nn = -0.5 / std::sqrt(1.0 - t);
    const double c_lin = 0.5 * eq.rho / std::sqrt(t);
    const double c_xi = 0.5 * std::sqrt(eq.epsilon / t);
    Rng rng = sampler_rng(rs);
    run_prior_draws(problem, M, rng, [&](const PriorDraw& draw) {
        double b = 0.0;
        for (Eigen::Index mu = 0; mu < data.X.rows(); ++mu) {
            const auto k = static_cast<std::size_t>(mu);
            const double s = draw.s_t(k, t, eq, draw.xi(mu));
            const double sdot = c_nn * draw.s_nn(mu) + c_lin * draw.s_lin(mu) + c_xi * draw.xi(mu);
            b += model.kernel().u_prime(data.Y(mu), s) * sdot;
        }
        b /= n;
        accs[0].add(draw.loglik[0], &b);
        for (std::size_t k = 1; k < accs.size(); ++k) accs[k].add(draw.loglik[k]);
    });
    for (const auto& acc : accs) require_log_z(acc);
    out.log_z = accs[0].log_mean_weight();
    out.b = accs[0].mean(0);
    out.ess = accs[0].ess();
    if (h > 0.0) out.fd = (accs[2].log_mean_weight() - accs[1].log_mean_weight()) / (2.0 * h * n);
    return out;
}

DerivativeTerms terms_from(const std::vector<DerivReplica>& reps, const ModelSpec& model, double t, std::size_t M,
                           std::uint64_t seed, std::size_t flags) {
    const std::size_t R = reps.size();
    auto centered = [&](std::size_t skip, auto member) {
        double mean_l = 0.0;
        std::size_t count = 0;
        for (std::size_t r = 0; r < R; ++r)
            if (r != skip) {
                mean_l += reps[r].log_z;
                ++count;
            }
        mean_l /= static_cast<double>(count);
        double acc = 0.0;
        for (std::size_t r = 0; r < R; ++r)
            if (r != skip) acc += (reps[r].log_z - mean_l) * (reps[r].*member);
        return acc / static_cast<double>(count);
    };
    auto plain = [&](std::size_t skip, auto member) {
        double acc = 0.0;
        std::size_t count = 0;
        for (std::size_t r = 0; r < R; ++r)
            if (r != skip) {
                acc += reps[r].*member;
                ++count;
            }
        return acc / static_cast<double>(count);
    };
    const Dims& dims = model.dims();
    DerivativeTerms out;
    out.A1 = make_estimate("A1", jackknife(R, [&](std::size_t s) { return centered(s, &DerivReplica::g1); }), dims, t, M,
                           seed, flags);
    out.A2 = make_estimate("A2", jackknife(R, [&](std::size_t s) { return centered(s, &DerivReplica::g2); }), dims, t, M,
                           seed, flags);
    out.A3 = make_estimate("A3", jackknife(R, [&](std::size_t s) { return centered(s, &DerivReplica::g3); }), dims, t, M,
                           seed, flags);
    out.B = make_estimate("B", jackknife(R, [&](std::size_t s) { return plain(s, &DerivReplica::b); }), dims, t, M, seed,
                          flags);
    out.total = make_estimate("dfdt_terms", jackknife(R, [&](std::size_t s) {
                                  return -centered(s, &DerivReplica::g1) + centered(s, &DerivReplica::g2) +
                                         centered(s, &DerivReplica::g3) + plain(s, &DerivReplica::b);
                              }),
                              dims, t, M, seed, flags);
    return out;
}

void check_open_t(double t) {
    if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("interpolation derivative terms need 0 < t < 1");
}

}  // namespace

DerivativeTerms interp_derivative_terms(const ModelSpec& model, double t, std::size_t n_outer, std::size_t M,
                                        std::uint64_t seed) {
    check_open_t(t);
    if (n_outer < 2) throw std::invalid_argument("interp_derivative_terms needs n_outer >= 2");
    std::vector<DerivReplica> reps(n_outer);
    parallel_for(n_outer, [&](std::size_t r) { reps[r] = derivative_replica(model, t, 0.0, M, replica_seed(seed, r)); });
    std::vector<double> ess;
    for (const auto& rep : reps) ess.push_back(rep.ess);
    return terms_from(reps, model, t, M, seed, count_flags(ess));
}

DerivativeCheck derivative_check(const ModelSpec& model, double t, double h, std::size_t n_outer, std::size_t M,
                                 std::uint64_t seed) {
    check_open_t(t);
    if (!(h > 0.0 && t - h > 0.0 && t + h < 1.0))
        throw std::invalid_argument("finite-difference step must keep t +- h inside (0, 1)");
    if (n_outer < 2) throw std::invalid_argument("derivative_check needs n_outer >= 2");
    std::vector<DerivReplica> reps(n_outer);
    parallel_for(n_outer, [&](std::size_t r) { reps[r] = derivative_replica(model, t, h, M, replica_seed(seed, r)); });
    std::vector<double> ess, fd;
    for (const auto& rep : reps) {
        ess.push_back(rep.ess);
        fd.push_back(rep.fd);
    }
    const std::size_t flags = count_flags(ess);
    DerivativeCheck out;
    out.terms = terms_from(reps, model, t, M, seed, flags);
    out.finite_difference = make_estimate("dfdt_fd", mean_se(fd), model.dims(), t, M, seed, flags);
    // The difference uses the same jackknife so that the paired correlation is kept.
    const std::size_t R = reps.size();
    const DerivativeTerms& terms = out.terms;
    (void)terms;
    auto stat = [&](std::size_t skip) {
        double mean_l = 0.0, fd_mean = 0.0;
        std::size_t count = 0;
        for (std::size_t r = 0; r < R; ++r)
            if (r != skip) {
                mean_l += reps[r].log_z;
                fd_mean += reps[r].fd;
                ++count;
            }
        mean_l /= static_cast<double>(count);
        fd_mean /= static_cast<double>(count);
        double total = 0.0;
        for (std::size_t r = 0; r < R; ++r)
            if (r != skip)
                total += (reps[r].log_z - mean_l) * (-reps[r].g1 + reps[r].g2 + reps[r].g3) + reps[r].b;
        return total / static_cast<double>(count) - fd_mean;
    };
    out.difference = make_estimate("dfdt_terms_minus_fd", jackknife(R, stat), model.dims(), t, M, seed, flags);
    return out;
}

PairedEstimate free_entropy_pair(const ModelSpec& model, std::size_t n_outer, std::size_t M, std::uint64_t seed) {
    const Dims& dims = model.dims();
    if (dims.n == 0) throw std::invalid_argument("free_entropy_pair needs n >= 1");
    const double n = static_cast<double>(dims.n);
    std::vector<double> nn(n_outer), glm(n_outer), gap(n_outer), ess(n_outer);
    parallel_for(n_outer, [&](std::size_t r) {
        const std::uint64_t rs = replica_seed(seed, r);
        const Dataset d0 = gen_dataset(model, 0.0, dataset_seed(rs), TeacherCoupling::shared);
        const Dataset d1 = gen_dataset(model, 1.0, dataset_seed(rs), TeacherCoupling::shared);
        IsProblem problem = make_problem(model, d0.X, {plain_target(model, 0.0, d0.Y), plain_target(model, 1.0, d1.Y)});
        problem.couple_linear = true;
        WeightedAccumulator a0, a1;
        Rng rng = sampler_rng(rs);
        run_prior_draws(problem, M, rng, [&](const PriorDraw& draw) {
            a0.add(draw.loglik[0]);
            a1.add(draw.loglik[1]);
        });
        require_log_z(a0);
        require_log_z(a1);
        nn[r] = a0.log_mean_weight() / n;
        glm[r] = a1.log_mean_weight() / n;
        gap[r] = nn[r] - glm[r];
        ess[r] = std::min(a0.ess(), a1.ess());
    });
    const std::size_t flags = count_flags(ess);
    PairedEstimate out;
    out.nn = make_estimate("free_entropy_nn", mean_se(nn), dims, 0.0, M, seed, flags);
    out.glm = make_estimate("free_entropy_glm", mean_se(glm), dims, 1.0, M, seed, flags);
    out.gap = make_estimate("free_entropy_gap", mean_se(gap), dims, 0.0, M, seed, flags);
    return out;
}

PairedEstimate gen_error_pair(const ModelSpec& model, std::size_t n_outer, std::size_t n_test, std::size_t M,
                              std::uint64_t seed) {
    if (n_test == 0) throw std::invalid_argument("gen_error_pair needs n_test >= 1");
    const Dims& dims = model.dims();
    const GaussEquivParams& eq = model.equiv();
    const OutputKernel& kernel = model.kernel();
    std::vector<double> nn(n_outer), glm(n_outer), gap(n_outer), ess(n_outer);
    parallel_for(n_outer, [&](std::size_t r) {
        const std::uint64_t rs = replica_seed(seed, r);
        const Dataset d0 = gen_dataset(model, 0.0, dataset_seed(rs), TeacherCoupling::shared);
        const Dataset d1 = gen_dataset(model, 1.0, dataset_seed(rs), TeacherCoupling::shared);
        Rng trng = test_rng(rs);
        const Matrix probes = draw_inputs(n_test, dims.d, trng);
        NormalSource tnormal(trng);
        std::vector<double> s0(n_test), s1(n_test);
        for (std::size_t k = 0; k < n_test; ++k) {
            const Vector x = probes.row(static_cast<Eigen::Index>(k)).transpose();
            s0[k] = preactivation_nn(d0.nn, x, model.activation());
            s1[k] = combine_preactivation(0.0, linear_projection(d1.glm.v, x), tnormal(), 1.0, eq);
        }
        IsProblem problem =
            make_problem(model, d0.X, {plain_target(model, 0.0, d0.Y), plain_target(model, 1.0, d1.Y)}, probes);
        problem.couple_linear = true;
        const auto n_rows = static_cast<std::size_t>(d0.X.rows());
        WeightedAccumulator a0(n_test), a1(n_test);
        Vector o0(static_cast<Eigen::Index>(n_test)), o1(static_cast<Eigen::Index>(n_test));
        Rng rng = sampler_rng(rs);
        run_prior_draws(problem, M, rng, [&](const PriorDraw& draw) {
            for (std::size_t k = 0; k < n_test; ++k) {
                const auto col = static_cast<Eigen::Index>(n_rows + k);
                o0(static_cast<Eigen::Index>(k)) = kernel.conditional_mean(draw.s_nn(col));
                o1(static_cast<Eigen::Index>(k)) = predictive_mean(kernel, 0.0, draw.s_lin(col), 1.0, eq);
            }
            a0.add(draw.loglik[0], o0);
            a1.add(draw.loglik[1], o1);
        });
        require_log_z(a0);
        require_log_z(a1);
        double e0 = 0.0, e1 = 0.0;
        for (std::size_t k = 0; k < n_test; ++k) {
            e0 += integrated_sq_error(kernel, s0[k], a0.mean(k));
            e1 += integrated_sq_error(kernel, s1[k], a1.mean(k));
        }
        nn[r] = e0 / static_cast<double>(n_test);
        glm[r] = e1 / static_cast<double>(n_test);
        gap[r] = nn[r] - glm[r];
        ess[r] = std::min(a0.ess(), a1.ess());
    });
    const std::size_t flags = count_flags(ess);
    PairedEstimate out;
    out.nn = make_estimate("gen_error_nn", mean_se(nn), dims, 0.0, M, seed, flags);
    out.glm = make_estimate("gen_error_glm", mean_se(glm), dims, 1.0, M, seed, flags);
    out.gap = make_estimate("gen_error_gap", mean_se(gap), dims, 0.0, M, seed, flags);
    return out;
}

}  // namespace gelab
