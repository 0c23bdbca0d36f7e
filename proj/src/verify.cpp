#include "gelab/verify.hpp"

#include "gelab/data_gen.hpp"
#include "gelab/importance.hpp"
#include "gelab/parallel.hpp"
#include "gelab/posterior.hpp"
#include "gelab/quadrature.hpp"
#include "gelab/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace gelab {

bool SuiteReport::passed() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
}

void SuiteReport::add(std::string id, bool pass, double statistic, double se, double threshold) {
    assertions.push_back(Assertion{std::move(id), pass, statistic, se, threshold});
}

void SuiteReport::expect_zero(std::string id, double mean, double se, double k) {
    const bool pass = se > 0.0 ? std::abs(mean) <= k * se : std::abs(mean) <= 1e-12;
    add(std::move(id), pass, mean, se, k * se);
}

std::string report_summary(const SuiteReport& report) {
    std::ostringstream out;
    char buf[512];
    for (const Assertion& a : report.assertions) {
        std::snprintf(buf, sizeof buf, "%s %s %.6g %.6g %.6g\n", a.id.c_str(), a.pass ? "PASS" : "FAIL", a.statistic,
                      a.se, a.threshold);
        out << buf;
    }
    for (const std::string& note : report.notes) out << "# " << note << '\n';
    const std::size_t failed = static_cast<std::size_t>(
        std::count_if(report.assertions.begin(), report.assertions.end(), [](const Assertion& a) { return !a.pass; }));
    std::snprintf(buf, sizeof buf,
                  "suite %s %s (%zu assertions, %zu failed; each at 3 SE, no multiplicity correction, "
                  "Bonferroni level would be %.2g per assertion)\n",
                  report.suite.c_str(), report.passed() ? "PASS" : "FAIL", report.assertions.size(), failed,
                  report.assertions.empty() ? 0.0 : 0.0027 / static_cast<double>(report.assertions.size()));
    out << buf;
    return out.str();
}

std::string report_csv(const SuiteReport& report) {
    std::ostringstream out;
    out << estimate_csv_header() << '\n';
    for (const Estimate& e : report.estimates) out << estimate_csv_row(e) << '\n';
    return out.str();
}

ScalingFit scaling_exponent_fit(const std::vector<std::pair<double, double>>& points, std::size_t resamples,
                                std::uint64_t seed, double level) {
    if (points.size() < 3) throw std::invalid_argument("scaling fit needs at least 3 points");
    std::vector<double> lx, ly;
    for (const auto& [x, y] : points) {
        if (!(x > 0.0)) throw std::invalid_argument("scaling fit needs positive sizes");
        if (!(y > 0.0)) throw std::invalid_argument("scaling fit needs positive statistics");
        lx.push_back(std::log(x));
        ly.push_back(std::log(y));
    }
    const LineFit base = fit_line(lx, ly);
    ScalingFit out;
    out.points = points;
    out.exponent = base.slope;
    out.intercept = base.intercept;
    out.r2 = base.r2;

    // Residual bootstrap with leverage-corrected residuals; raw residuals of a
    // fit on a handful of points understate the noise.
    const std::size_t k = lx.size();
    double mx = 0.0;
    for (double x : lx) mx += x;
    mx /= static_cast<double>(k);
    double sxx = 0.0;
    for (double x : lx) sxx += (x - mx) * (x - mx);
    std::vector<double> resid(k), fitted(k);
    double rmean = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        fitted[i] = base.intercept + base.slope * lx[i];
        const double h = 1.0 / static_cast<double>(k) + (sxx > 0.0 ? (lx[i] - mx) * (lx[i] - mx) / sxx : 0.0);
        resid[i] = (ly[i] - fitted[i]) / std::sqrt(std::max(1.0 - h, 1e-12));
        rmean += resid[i];
    }
    rmean /= static_cast<double>(k);
    for (double& r : resid) r -= rmean;

    // Studentized (bootstrap-t) intervals: the percentile interval treats the
    // residual scale as known and undercovers when only a few sizes are fitted.
    auto slope_se = [&](const std::vector<double>& y, const LineFit& f) {
        if (k < 3 || !(sxx > 0.0)) return 0.0;
        double ssr = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double e = y[i] - f.intercept - f.slope * lx[i];
            ssr += e * e;
        }
        return std::sqrt(ssr / static_cast<double>(k - 2) / sxx);
    };
    const double se = slope_se(ly, base);

    Rng rng(derive_seed(seed, 0x5ca1e));
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    std::vector<double> pivots;
    pivots.reserve(resamples);
    std::vector<double> yb(k);
    for (std::size_t b = 0; b < resamples; ++b) {
        for (std::size_t i = 0; i < k; ++i) yb[i] = fitted[i] + resid[pick(rng)];
        const LineFit fb = fit_line(lx, yb);
        const double se_b = slope_se(yb, fb);
        // A resample drawing one residual k times has no scale information.
        if (se_b > 1e-12 * (1.0 + std::abs(fb.slope))) pivots.push_back((fb.slope - base.slope) / se_b);
    }
    std::sort(pivots.begin(), pivots.end());
    if (pivots.empty() || !(se > 0.0)) {
        out.ci_low = out.ci_high = out.exponent;
    } else {
        const double tail = 0.5 * (1.0 - level);
        auto at = [&](double q) {
            const double pos = q * static_cast<double>(pivots.size() - 1);
            const auto lo = static_cast<std::size_t>(std::floor(pos));
            const std::size_t hi = std::min(lo + 1, pivots.size() - 1);
            return pivots[lo] + (pos - static_cast<double>(lo)) * (pivots[hi] - pivots[lo]);
        };
        out.ci_low = base.slope - at(1.0 - tail) * se;
        out.ci_high = base.slope - at(tail) * se;
    }
    return out;
}

namespace {

std::string dims_tag(const Dims& dims) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "d%zu_p%zu_n%zu", dims.d, dims.p, dims.n);
    return buf;
}

std::string time_tag(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "t%g", t);
    return buf;
}

Estimate row_estimate(const std::string& quantity, double value, double se, std::size_t count, const Dims& dims,
                      double t, std::size_t inner, std::uint64_t seed) {
    MeanSe ms;
    ms.mean = value;
    ms.se = se;
    ms.count = count;
    return make_estimate(quantity, ms, dims, t, inner, seed);
}

// ---- Nishimori -----------------------------------------------------------

struct Replica {
    const ParamPoint* theta;
    Vector s;
};

using Observable = double (*)(const Replica&, const Replica&, const LogTarget&);

double obs_readout(const Replica& A, const Replica& B, const LogTarget& target) {
    return A.theta->a.dot(B.theta->a) / static_cast<double>(target.dims().p);
}
double obs_readout_sq(const Replica& A, const Replica& B, const LogTarget& target) {
    const double q = obs_readout(A, B, target);
    return q * q;
}
double obs_hidden(const Replica& A, const Replica& B, const LogTarget& target) {
    const Dims& dims = target.dims();
    return A.theta->W.cwiseProduct(B.theta->W).sum() / static_cast<double>(dims.p * dims.d);
}
double obs_hidden_sq(const Replica& A, const Replica& B, const LogTarget& target) {
    const Dims& dims = target.dims();
    const Vector rows = A.theta->W.cwiseProduct(B.theta->W).rowwise().sum() / static_cast<double>(dims.d);
    return rows.squaredNorm() / static_cast<double>(dims.p);
}
double obs_unit_tanh(const Replica& A, const Replica& B, const LogTarget& target) {
    const Dims& dims = target.dims();
    const Vector rows = A.theta->W.cwiseProduct(B.theta->W).rowwise().sum() / static_cast<double>(dims.d);
    return std::tanh(A.theta->a.cwiseProduct(B.theta->a).dot(rows) / static_cast<double>(dims.p));
}
double obs_glm(const Replica& A, const Replica& B, const LogTarget& target) {
    return A.theta->v.dot(B.theta->v) / static_cast<double>(target.dims().d);
}
double obs_glm_tanh_sq(const Replica& A, const Replica& B, const LogTarget& target) {
    const double q = obs_glm(A, B, target);
    return std::tanh(q * q);
}
double obs_preact(const Replica& A, const Replica& B, const LogTarget&) {
    double acc = 0.0;
    for (Eigen::Index mu = 0; mu < A.s.size(); ++mu) acc += std::tanh(A.s(mu) * B.s(mu));
    return acc / static_cast<double>(A.s.size());
}
double obs_uprime(const Replica& A, const Replica& B, const LogTarget& target) {
    double acc = 0.0;
    for (Eigen::Index mu = 0; mu < A.s.size(); ++mu) {
        const auto row = static_cast<std::size_t>(mu);
        const double ua = target.kernel(row).u_prime(target.y()(mu), A.s(mu));
        const double ub = target.kernel(row).u_prime(target.y()(mu), B.s(mu));
        acc += std::tanh(ua * ub);
    }
    return acc / static_cast<double>(A.s.size());
}
double obs_constant(const Replica&, const Replica&, const LogTarget&) { return 1.0; }

struct NamedObservable {
    const char* name;
    Observable g;
};

constexpr NamedObservable kObservables[] = {
    {"readout_overlap", obs_readout},   {"readout_overlap_sq", obs_readout_sq},
    {"hidden_overlap", obs_hidden},     {"hidden_overlap_sq", obs_hidden_sq},
    {"tanh_unit_overlap", obs_unit_tanh}, {"glm_overlap", obs_glm},
    {"tanh_glm_overlap_sq", obs_glm_tanh_sq}, {"tanh_preactivation_product", obs_preact},
    {"tanh_uprime_product", obs_uprime}, {"constant", obs_constant},
};
constexpr std::size_t kNumObservables = sizeof kObservables / sizeof kObservables[0];

}  // namespace

SuiteReport nishimori_suite(const ModelSpec& base_model, const NishimoriConfig& config, std::uint64_t seed) {
    if (config.datasets < 2) throw std::invalid_argument("nishimori_suite needs at least 2 datasets");
    SuiteReport report;
    report.suite = "nishimori";
    std::size_t job = 0;
    for (const Dims& dims : config.sizes) {
        const ModelSpec model = base_model.with_dims(dims);
        for (double t : config.times) {
            const std::uint64_t job_seed = derive_seed(seed, job++);
            std::vector<std::vector<double>> diff(kNumObservables, std::vector<double>(config.datasets));
            std::vector<double> ess(config.datasets);
            parallel_for(config.datasets, [&](std::size_t r) {
                const std::uint64_t rs = derive_seed(job_seed, r);
                const Dataset data = gen_dataset(model, t, derive_seed(rs, 0));
                const LogTarget target(model, data, t);
                Rng rng = substream(rs, 1);
                const WeightedEnsemble ens = importance_ensemble(target, config.M, rng);

                // Two disjoint halves of the draws give two independent replicas.
                std::vector<double> w[2];
                std::vector<std::size_t> idx[2];
                const double top = *std::max_element(ens.log_weights.begin(), ens.log_weights.end());
                for (std::size_t j = 0; j < ens.size(); ++j) {
                    w[j % 2].push_back(std::exp(ens.log_weights[j] - top));
                    idx[j % 2].push_back(j);
                }
                double min_ess = std::numeric_limits<double>::infinity();
                for (const auto& wg : w) {
                    double s1 = 0.0, s2 = 0.0;
                    for (double x : wg) {
                        s1 += x;
                        s2 += x * x;
                    }
                    min_ess = std::min(min_ess, s2 > 0.0 ? s1 * s1 / s2 : 0.0);
                }
                ess[r] = min_ess;
                std::discrete_distribution<std::size_t> pick0(w[0].begin(), w[0].end());
                std::discrete_distribution<std::size_t> pick1(w[1].begin(), w[1].end());

                const ParamPoint star = teacher_point(data);
                const Replica teacher{&star, student_preactivations(target, star)};
                std::vector<double> lhs(kNumObservables, 0.0), rhs(kNumObservables, 0.0);
                for (std::size_t k = 0; k < config.pairs; ++k) {
                    const ParamPoint& p1 = ens.points[idx[0][pick0(rng)]];
                    const ParamPoint& p2 = ens.points[idx[1][pick1(rng)]];
                    const Replica r1{&p1, student_preactivations(target, p1)};
                    const Replica r2{&p2, student_preactivations(target, p2)};
                    for (std::size_t o = 0; o < kNumObservables; ++o) {
                        lhs[o] += kObservables[o].g(teacher, r1, target);
                        rhs[o] += kObservables[o].g(r1, r2, target);
                    }
                }
                for (std::size_t o = 0; o < kNumObservables; ++o)
                    diff[o][r] = (lhs[o] - rhs[o]) / static_cast<double>(config.pairs);
            });
            const std::string tag = dims_tag(dims) + "/" + time_tag(t);
            for (std::size_t o = 0; o < kNumObservables; ++o) {
                const MeanSe ms = mean_se(diff[o]);
                const std::string id = "nishimori/" + tag + "/" + kObservables[o].name;
                report.expect_zero(id, ms.mean, ms.se);
                report.estimates.push_back(row_estimate(std::string("nishimori_diff_") + kObservables[o].name, ms.mean,
                                                        ms.se, ms.count, dims, t, config.M, job_seed));
            }
            std::size_t low = 0;
            for (double e : ess)
                if (e < kEssFloor) ++low;
            if (low > 0)
                report.notes.push_back(tag + ": " + std::to_string(low) + " datasets below the ESS floor");
        }
    }
    return report;
}

SuiteReport pout_property_suite(const ModelSpec& model, std::size_t M, std::uint64_t seed,
                                std::vector<double> s_values) {
    if (M < 10000) throw std::invalid_argument("pout_property_suite needs M >= 10^4");
    if (s_values.empty()) throw std::invalid_argument("pout_property_suite needs at least one pre-activation");
    const OutputKernel& kernel = model.kernel();
    const double b1 = kernel.u_prime_second_moment_bound();
    const double b2 = kernel.uu_second_moment_bound();
    SuiteReport report;
    report.suite = "pout_properties";
    char tag[64];
    for (std::size_t k = 0; k < s_values.size(); ++k) {
        const double s = s_values[k];
        const double s2 = s_values[(k + 1) % s_values.size()] + 0.1;
        Rng rng = substream(seed, k);
        std::vector<double> u1(M), uu(M), cross(M), u1sq(M), uusq(M), crosssq(M);
        for (std::size_t j = 0; j < M; ++j) {
            const ChannelDraw y = kernel.sample(s, rng);
            const ChannelDraw y2 = kernel.sample(s2, rng);
            const KernelDerivs dv = kernel.derivs(y.y, s);
            const double u1b = kernel.u_prime(y2.y, s2);
            u1[j] = dv.u1;
            uu[j] = dv.uu;
            cross[j] = dv.u1 * u1b;
            u1sq[j] = dv.u1 * dv.u1;
            uusq[j] = dv.uu * dv.uu;
            crosssq[j] = cross[j] * cross[j];
        }
        std::snprintf(tag, sizeof tag, "pout/s%g", s);
        const std::string base(tag);
        const MeanSe m1 = mean_se(u1), m2 = mean_se(uu), m3 = mean_se(cross);
        report.expect_zero(base + "/mean_uprime", m1.mean, m1.se);
        report.expect_zero(base + "/mean_U_diag", m2.mean, m2.se);
        report.expect_zero(base + "/mean_U_offdiag", m3.mean, m3.se);
        const MeanSe q1 = mean_se(u1sq), q2 = mean_se(uusq), q3 = mean_se(crosssq);
        report.add(base + "/second_moment_uprime", q1.mean <= b1, q1.mean, q1.se, b1);
        report.add(base + "/second_moment_U_diag", q2.mean <= b2, q2.mean, q2.se, b2);
        report.add(base + "/second_moment_U_offdiag", q3.mean <= b1 * b1, q3.mean, q3.se, b1 * b1);
        const Dims& dims = model.dims();
        report.estimates.push_back(row_estimate("mean_uprime", m1.mean, m1.se, M, dims, s, M, seed));
        report.estimates.push_back(row_estimate("mean_U_diag", m2.mean, m2.se, M, dims, s, M, seed));
        report.estimates.push_back(row_estimate("mean_U_offdiag", m3.mean, m3.se, M, dims, s, M, seed));
    }
    report.notes.push_back("the t column of pout rows holds the fixed pre-activation S");
    return report;
}

namespace {

struct DisplayAverages {
    double r[5] = {0, 0, 0, 0, 0};     // mean |residual| over pairs
    double pred[5] = {0, 0, 0, 0, 0};  // mean predicted remainder
    double lead3 = 0.0;                // mean |leading term| of the third display
};

}  // namespace

SuiteReport approximation_suite(const Activation& phi, const ApproximationConfig& config, std::uint64_t seed) {
    if (config.d_grid.size() < 3) throw std::invalid_argument("approximation_suite needs at least 3 sizes");
    if (config.pairs == 0 || config.M == 0) throw std::invalid_argument("approximation_suite needs pairs, M >= 1");
    const GaussEquivParams eq = gauss_equiv_params(phi);
    const double rho = eq.rho;
    const double m2 = eq.second_moment;
    const GaussHermite& rule = gauss_hermite_rule(40);
    static const char* names[5] = {"phi_prime", "phi_square", "phi_phi", "phi_prime_phi_prime", "phi_sq_phi_sq"};

    std::vector<DisplayAverages> per_d(config.d_grid.size());
    for (std::size_t g = 0; g < config.d_grid.size(); ++g) {
        const std::size_t d = config.d_grid[g];
        std::vector<std::array<double, 11>> pair_rows(config.pairs);
        parallel_for(config.pairs, [&](std::size_t k) {
            Rng rng = substream(derive_seed(seed, d), k);
            NormalSource normal(rng);
            Vector xm(static_cast<Eigen::Index>(d)), xn(static_cast<Eigen::Index>(d));
            for (auto& x : xm) x = normal();
            for (auto& x : xn) x = normal();
            if (xm.squaredNorm() == 0.0 || xn.squaredNorm() == 0.0)
                throw std::invalid_argument("approximation_suite drew a zero input");
            const double dd = static_cast<double>(d);
            const double qm = xm.squaredNorm() / dd;
            const double qn = xn.squaredNorm() / dd;
            const double c = xm.dot(xn) / dd;
            const double sqm = std::sqrt(qm);
            const double slope = c / qm;
            const double cond_sd = std::sqrt(std::max(qn - c * c / qm, 0.0));

            // alpha_mu is drawn; alpha_nu | alpha_mu is integrated by Gauss-Hermite.
            double s1 = 0, s2 = 0, s3 = 0, s4 = 0, s5 = 0;
            for (std::size_t j = 0; j < config.M; ++j) {
                const double a = sqm * normal();
                const double fa = phi.value(a);
                const double da = phi.deriv(a);
                s1 += da;
                s2 += fa * fa;
                double e3 = 0, e4 = 0, e5 = 0;
                const auto nodes = rule.nodes();
                const auto weights = rule.weights();
                for (std::size_t i = 0; i < nodes.size(); ++i) {
                    const double b = slope * a + cond_sd * nodes[i];
                    const double fb = phi.value(b);
                    e3 += weights[i] * fb;
                    e4 += weights[i] * phi.deriv(b);
                    e5 += weights[i] * fb * fb;
                }
                s3 += fa * e3;
                s4 += da * e4;
                s5 += fa * fa * e5;
            }
            const double M = static_cast<double>(config.M);
            const double dq = std::abs(qm - 1.0);
            const double cross = xm.dot(xn);
            const double nn2 = xn.squaredNorm();
            auto& row = pair_rows[k];
            row[0] = std::abs(s1 / M - rho);
            row[1] = std::abs(s2 / M - m2);
            row[2] = std::abs(s3 / M - rho * rho * c);
            row[3] = std::abs(s4 / M - rho * rho);
            row[4] = std::abs(s5 / M - m2 * m2);
            row[5] = dq;
            row[6] = dq;
            row[7] = std::abs(c) * dq + (cross / nn2) * (cross / nn2) + cross * cross / (nn2 * dd);
            row[8] = dq + std::abs(cross) / nn2;
            row[9] = row[8];
            row[10] = std::abs(rho * rho * c);
        });
        DisplayAverages& avg = per_d[g];
        for (const auto& row : pair_rows) {
            for (int i = 0; i < 5; ++i) {
                avg.r[i] += row[static_cast<std::size_t>(i)];
                avg.pred[i] += row[static_cast<std::size_t>(i) + 5];
            }
            avg.lead3 += row[10];
        }
        const double K = static_cast<double>(config.pairs);
        for (int i = 0; i < 5; ++i) {
            avg.r[i] /= K;
            avg.pred[i] /= K;
        }
        avg.lead3 /= K;
    }

    SuiteReport report;
    report.suite = "approximations";
    for (int i = 0; i < 5; ++i) {
        std::vector<std::pair<double, double>> pts;
        bool all_zero = true;
        for (const auto& avg : per_d) {
            pts.emplace_back(avg.pred[i], avg.r[i]);
            all_zero = all_zero && avg.r[i] == 0.0;
        }
        const std::string id = std::string("approx/") + names[i];
        if (all_zero) {
            report.add(id + "/identically_zero", true, 0.0, 0.0, 0.0);
            continue;
        }
        const ScalingFit fit = scaling_exponent_fit(pts, 400, derive_seed(seed, 1000 + static_cast<std::uint64_t>(i)));
        report.fits.push_back(fit);
        report.add(id + "/slope_vs_remainder", std::abs(fit.exponent - 1.0) <= config.slope_tolerance, fit.exponent,
                   0.5 * (fit.ci_high - fit.ci_low), config.slope_tolerance);
        for (std::size_t g = 0; g < per_d.size(); ++g) {
            const std::size_t d = config.d_grid[g];
            report.estimates.push_back(row_estimate(std::string("residual_") + names[i], per_d[g].r[i], 0.0,
                                                    config.pairs, Dims{d, 1, 2}, 0.0, config.M, seed));
            report.estimates.push_back(row_estimate(std::string("remainder_") + names[i], per_d[g].pred[i], 0.0,
                                                    config.pairs, Dims{d, 1, 2}, 0.0, config.M, seed));
        }
    }
    // The cross display's leading term should dominate more and more.
    if (per_d.front().lead3 > 0.0 && per_d.back().lead3 > 0.0) {
        const double first = per_d.front().r[2] / per_d.front().lead3;
        const double last = per_d.back().r[2] / per_d.back().lead3;
        report.add("approx/phi_phi/relative_error_shrinks", last < first, last, 0.0, first);
    }
    return report;
}

SuiteReport epsilon_cancellation_check(const Activation& phi, const CancellationConfig& config, std::uint64_t seed) {
    if (config.d_grid.size() < 3) throw std::invalid_argument("epsilon_cancellation_check needs at least 3 sizes");
    if (config.p < 64) throw std::invalid_argument("epsilon_cancellation_check needs p >= 64");
    const GaussEquivParams eq = gauss_equiv_params(phi);
    SuiteReport report;
    report.suite = "epsilon_cancellation";
    std::vector<std::pair<double, double>> ms_points, rms_points;
    const double p = static_cast<double>(config.p);
    MeanSe last_mean;
    bool degenerate = true;
    for (std::size_t d : config.d_grid) {
        std::vector<double> sq(config.M), stat(config.M);
        const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(config.M, 64));
        parallel_for(chunks, [&](std::size_t c) {
            Rng rng = substream(derive_seed(seed, d), c);
            NormalSource normal(rng);
            std::gamma_distribution<double> chi2(0.5 * static_cast<double>(d), 2.0);
            for (std::size_t j = c; j < config.M; j += chunks) {
                // W* x / sqrt(d) given x has i.i.d. N(0, |x|^2/d) entries.
                const double sq_q = std::sqrt(chi2(rng) / static_cast<double>(d));
                double ff = 0.0, af = 0.0;
                for (std::size_t i = 0; i < config.p; ++i) {
                    const double a = sq_q * normal();
                    const double f = phi.value(a);
                    ff += f * f;
                    af += a * f;
                }
                stat[j] = (ff - eq.rho * af) / p;
                sq[j] = (eq.epsilon - stat[j]) * (eq.epsilon - stat[j]);
            }
        });
        const MeanSe ms = mean_se(sq);
        last_mean = mean_se(stat);
        degenerate = degenerate && ms.mean == 0.0;
        ms_points.emplace_back(static_cast<double>(d), ms.mean);
        rms_points.emplace_back(static_cast<double>(d), std::sqrt(ms.mean));
        report.estimates.push_back(make_estimate("cancellation_mean_square", ms, Dims{d, config.p, 1}, 0.0, config.M, seed));
        report.estimates.push_back(make_estimate("cancellation_statistic", last_mean, Dims{d, config.p, 1}, 0.0, config.M, seed));
    }
    report.expect_zero("cancellation/mean_at_largest_d_minus_epsilon", last_mean.mean - eq.epsilon, last_mean.se);
    if (degenerate) {
        report.add("cancellation/identically_zero", true, 0.0, 0.0, 0.0);
        return report;
    }
    const ScalingFit fit = scaling_exponent_fit(ms_points, 400, derive_seed(seed, 77));
    report.fits.push_back(fit);
    report.add("cancellation/mean_square_exponent",
               fit.exponent >= config.exponent_low && fit.exponent <= config.exponent_high, fit.exponent,
               0.5 * (fit.ci_high - fit.ci_low), config.exponent_high);
    const ScalingFit rms = scaling_exponent_fit(rms_points, 400, derive_seed(seed, 78));
    report.fits.push_back(rms);
    char buf[160];
    std::snprintf(buf, sizeof buf, "root-mean-square exponent %.3f [%.3f, %.3f] (information only)", rms.exponent,
                  rms.ci_low, rms.ci_high);
    report.notes.push_back(buf);
    return report;
}

SuiteReport concentration_check(const ModelSpec& base_model, const ConcentrationConfig& config, std::uint64_t seed) {
    if (config.grid.empty()) throw std::invalid_argument("concentration_check needs a grid");
    if (config.groups * config.per_group < 100 || config.per_group < 2)
        throw std::invalid_argument("concentration_check needs >= 100 replicas and >= 2 per readout group");
    SuiteReport report;
    report.suite = "concentration";
    std::vector<double> xs, ys, ses, totals;
    const std::size_t R = config.groups * config.per_group;
    for (std::size_t g = 0; g < config.grid.size(); ++g) {
        const Dims& dims = config.grid[g];
        const ModelSpec model = base_model.with_dims(dims);
        const std::uint64_t job_seed = derive_seed(seed, g);
        std::vector<double> values(R), ess(R);
        parallel_for(R, [&](std::size_t r) {
            const std::size_t group = r / config.per_group;
            const std::uint64_t rs = derive_seed(job_seed, r);
            Dataset data = gen_dataset(model, config.t, derive_seed(rs, 0));
            // Datasets in a group share the teacher readout a*.
            Rng arng = substream(derive_seed(job_seed, 1u << 20, group), 0);
            NormalSource normal(arng);
            for (auto& a : data.nn.a) a = normal();
            data = retime(data, model, config.t);
            SamplerConfig sampler;
            sampler.M = config.M;
            Rng rng = substream(rs, 1);
            values[r] = dataset_log_z(model, data, config.t, sampler, rng, &ess[r]) / static_cast<double>(dims.n);
        });
        // Pooled within-group variance; its error is a delete-one-group
        // jackknife, since log Z need not be Gaussian across datasets.
        std::vector<double> group_ss(config.groups, 0.0);
        for (std::size_t k = 0; k < config.groups; ++k) {
            double mean = 0.0;
            for (std::size_t j = 0; j < config.per_group; ++j) mean += values[k * config.per_group + j];
            mean /= static_cast<double>(config.per_group);
            for (std::size_t j = 0; j < config.per_group; ++j) {
                const double e = values[k * config.per_group + j] - mean;
                group_ss[k] += e * e;
            }
        }
        const MeanSe pooled = jackknife(config.groups, [&](std::size_t skip) {
            double ss = 0.0;
            std::size_t used = 0;
            for (std::size_t k = 0; k < config.groups; ++k)
                if (k != skip) {
                    ss += group_ss[k];
                    ++used;
                }
            return ss / static_cast<double>(used * (config.per_group - 1));
        });
        const double within = pooled.mean;
        const double se = pooled.se;
        const double total = sample_variance(values);
        xs.push_back(1.0 / static_cast<double>(dims.d) + 1.0 / static_cast<double>(dims.n));
        ys.push_back(within);
        totals.push_back(total);
        ses.push_back(se);
        report.estimates.push_back(row_estimate("var_within_readout", within, se, R, dims, config.t, config.M, job_seed));
        report.estimates.push_back(row_estimate("var_total", total, total * std::sqrt(2.0 / (R - 1.0)), R, dims,
                                                config.t, config.M, job_seed));
        report.add("concentration/" + dims_tag(dims) + "/variance_positive", within > 0.0 && std::isfinite(within),
                   within, se, 0.0);
        std::size_t low = 0;
        for (double e : ess)
            if (e < kEssFloor) ++low;
        if (low > 0) report.notes.push_back(dims_tag(dims) + ": " + std::to_string(low) + " replicas below the ESS floor");
    }
    if (xs.size() >= 2) {
        const LineFit fit = fit_proportional(xs, ys);
        ScalingFit sf;
        for (std::size_t i = 0; i < xs.size(); ++i) sf.points.emplace_back(xs[i], ys[i]);
        sf.exponent = fit.slope;
        sf.r2 = fit.r2;
        report.fits.push_back(sf);
        report.add("concentration/proportional_fit_r2", fit.r2 >= config.r2_floor, fit.r2, 0.0, config.r2_floor);
        char buf[96];
        std::snprintf(buf, sizeof buf, "fitted constant c = %.6g", fit.slope);
        report.notes.push_back(buf);
        const LineFit total_fit = fit_proportional(xs, totals);
        std::snprintf(buf, sizeof buf, "total variance fit: c = %.6g, r2 = %.4f (information only)", total_fit.slope,
                      total_fit.r2);
        report.notes.push_back(buf);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double resid = ys[i] - fit.slope * xs[i];
            report.add("concentration/" + dims_tag(config.grid[i]) + "/within_3se_of_fit",
                       std::abs(resid) <= 3.0 * ses[i], resid, ses[i], 3.0 * ses[i]);
        }
    }
    return report;
}

namespace {

// The ratio test is meaningless for the null model, whose gap vanishes identically.
void gap_assertions(SuiteReport& report, const std::string& prefix, double ratio_limit, bool check_ratio) {
    const auto& pts = report.points;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double g0 = std::abs(pts[i].gap.value);
        const double g1 = std::abs(pts[i + 1].gap.value);
        const double se = std::hypot(pts[i].gap.se, pts[i + 1].gap.se);
        report.add(prefix + "/non_increasing/" + dims_tag(pts[i].coords) + "_to_" + dims_tag(pts[i + 1].coords),
                   g1 - g0 <= 3.0 * se, g1 - g0, se, 3.0 * se);
    }
    if (check_ratio && pts.size() >= 2) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (const auto& p : pts) {
            const double r = std::abs(p.gap.value) / std::sqrt(p.kappa);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        const double ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
        report.add(prefix + "/gap_over_sqrt_kappa_ratio", ratio < ratio_limit, ratio, 0.0, ratio_limit);
    }
}

void check_sequence(const std::vector<Dims>& seq) {
    for (std::size_t i = 0; i + 1 < seq.size(); ++i)
        if (!(kappa(seq[i + 1]) < kappa(seq[i])))
            throw std::invalid_argument("gap scan sequence must have strictly decreasing kappa");
}

}  // namespace

SuiteReport theorem1_gap_scan(const ModelSpec& base_model, const GapScanConfig& config, std::uint64_t seed) {
    check_sequence(config.sequence);
    SuiteReport report;
    report.suite = "theorem1_gap";
    for (std::size_t k = 0; k < config.sequence.size(); ++k) {
        const Dims& dims = config.sequence[k];
        const ModelSpec model = base_model.with_dims(dims);
        const PairedEstimate pe = free_entropy_pair(model, config.n_outer, config.M, derive_seed(seed, k));
        report.points.push_back(ScalingPoint{dims, kappa(dims), pe.gap});
        report.estimates.insert(report.estimates.end(), {pe.nn, pe.glm, pe.gap});
        if (model.readout().is_zero())
            report.expect_zero("theorem1/" + dims_tag(dims) + "/null_gap", pe.gap.value, pe.gap.se);
    }
    gap_assertions(report, "theorem1", config.ratio_limit, !base_model.readout().is_zero());
    return report;
}

SuiteReport theorem2_gap_scan(const ModelSpec& base_model, const GapScanConfig& config, std::uint64_t seed) {
    check_sequence(config.sequence);
    SuiteReport report;
    report.suite = "theorem2_gap";
    for (std::size_t k = 0; k < config.sequence.size(); ++k) {
        const Dims& dims = config.sequence[k];
        const ModelSpec model = base_model.with_dims(dims);
        const PairedEstimate pe = gen_error_pair(model, config.n_outer, config.n_test, config.M, derive_seed(seed, k));
        report.points.push_back(ScalingPoint{dims, kappa(dims), pe.gap});
        report.estimates.insert(report.estimates.end(), {pe.nn, pe.glm, pe.gap});
        if (model.readout().is_zero()) {
            report.expect_zero("theorem2/" + dims_tag(dims) + "/null_gap", pe.gap.value, pe.gap.se);
            report.expect_zero("theorem2/" + dims_tag(dims) + "/null_error_minus_delta", pe.nn.value - model.delta(),
                               pe.nn.se);
        }
    }
    gap_assertions(report, "theorem2", config.ratio_limit, !base_model.readout().is_zero());
    return report;
}

}  // namespace gelab
