#include "gelab/importance.hpp"

#include <algorithm>
#include <cmath>

namespace gelab {

void WeightedAccumulator::add(double log_w, const double* x) {
    ++count_;
    if (!(log_w > -std::numeric_limits<double>::infinity())) return;
    if (log_w > shift_) {
        const double scale = std::exp(shift_ - log_w);
        sum_w_ *= scale;
        sum_w2_ *= scale * scale;
        for (double& s : sums_) s *= scale;
        shift_ = log_w;
    }
    const double w = std::exp(log_w - shift_);
    sum_w_ += w;
    sum_w2_ += w * w;
    if (x != nullptr)
        for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i] += w * x[i];
}

double WeightedAccumulator::log_mean_weight() const {
    if (degenerate()) return -std::numeric_limits<double>::infinity();
    return shift_ + std::log(sum_w_) - std::log(static_cast<double>(count_));
}

double WeightedAccumulator::log_mean_weight_se() const {
    if (degenerate() || count_ < 2) return std::numeric_limits<double>::infinity();
    const double m = static_cast<double>(count_);
    // Var(mean w)/mean(w)^2 = (m sum w^2 / (sum w)^2 - 1) / (m - 1)
    const double rel = (m * sum_w2_ / (sum_w_ * sum_w_) - 1.0) / (m - 1.0);
    return std::sqrt(std::max(rel, 0.0));
}

double WeightedAccumulator::ess() const {
    if (degenerate()) return 0.0;
    return sum_w_ * sum_w_ / sum_w2_;
}

double WeightedAccumulator::mean(std::size_t i) const { return sums_.at(i) / sum_w_; }

Vector WeightedAccumulator::means() const {
    Vector out(static_cast<Eigen::Index>(sums_.size()));
    for (std::size_t i = 0; i < sums_.size(); ++i) out(static_cast<Eigen::Index>(i)) = sums_[i] / sum_w_;
    return out;
}

IsTarget make_is_target(const LogTarget& target) {
    IsTarget out;
    out.t = target.t();
    out.beta = target.beta();
    out.y = target.y();
    out.kernels.push_back(target.model().kernel());
    if (target.has_side()) {
        out.kernels.push_back(target.kernel(target.train_rows()));
        out.row_kernel.assign(target.rows(), 0);
        std::fill(out.row_kernel.begin() + static_cast<std::ptrdiff_t>(target.train_rows()), out.row_kernel.end(), 1);
    }
    return out;
}

double PriorDraw::s_t(std::size_t k, double t, const GaussEquivParams& eq, double xi_value) const {
    const auto col = static_cast<Eigen::Index>(k);
    const double nn = s_nn.size() > 0 ? s_nn(col) : 0.0;
    return combine_preactivation(nn, s_lin(col), xi_value, t, eq);
}

bool uses_full_mode(const IsProblem& problem) {
    const auto cols = static_cast<std::size_t>(problem.X.rows() + problem.probes.rows());
    return problem.full || problem.model.dims().d <= cols;
}

void run_prior_draws(const IsProblem& problem, std::size_t M, Rng& rng, const DrawVisitor& visit) {
    const Dims& dims = problem.model.dims();
    const auto p = static_cast<Eigen::Index>(dims.p);
    const auto d = static_cast<Eigen::Index>(dims.d);
    const Eigen::Index n_rows = problem.X.rows();
    const Eigen::Index n_cols = n_rows + problem.probes.rows();
    if (problem.X.cols() != d || (problem.probes.rows() > 0 && problem.probes.cols() != d))
        throw std::invalid_argument("importance problem inputs do not match d");
    for (const IsTarget& target : problem.targets) {
        if (target.y.size() != n_rows) throw std::invalid_argument("importance target has the wrong number of rows");
        if (target.kernels.empty()) throw std::invalid_argument("importance target has no kernel");
        if (!target.row_kernel.empty() && target.row_kernel.size() != static_cast<std::size_t>(n_rows))
            throw std::invalid_argument("importance target row-kernel map has the wrong length");
    }

    Matrix inputs(n_cols, d);
    inputs.topRows(n_rows) = problem.X;
    inputs.bottomRows(problem.probes.rows()) = problem.probes;
    const double sqrt_d = std::sqrt(static_cast<double>(d));
    const double sqrt_p = std::sqrt(static_cast<double>(p));
    const bool full = uses_full_mode(problem);

    bool need_nn = full || problem.couple_linear;
    for (const IsTarget& target : problem.targets) need_nn = need_nn || target.t < 1.0;

    // Collapsed mode: every d-vector enters only through inputs * w / sqrt(d),
    // a Gaussian vector with covariance G = inputs inputs^T / d.
    Matrix factor;
    if (!full) {
        const Matrix gram = inputs * inputs.transpose() / static_cast<double>(d);
        Eigen::LLT<Matrix> llt(gram);
        if (llt.info() != Eigen::Success) throw std::runtime_error("input Gram matrix is not positive definite");
        factor = llt.matrixL();
    }
    const Matrix inputs_t = inputs.transpose() / sqrt_d;  // d x cols

    NormalSource normal(rng);
    PriorDraw draw;
    draw.loglik.assign(problem.targets.size(), 0.0);
    Vector z(full ? d : n_cols);
    Matrix zs;
    const Activation& phi = problem.model.activation();
    const GaussEquivParams& eq = problem.model.equiv();

    for (std::size_t j = 0; j < M; ++j) {
        if (need_nn) {
            draw.a.resize(p);
            for (Eigen::Index i = 0; i < p; ++i) draw.a(i) = normal();
            if (full) {
                draw.W.resize(p, d);
                for (Eigen::Index i = 0; i < p; ++i)
                    for (Eigen::Index k = 0; k < d; ++k) draw.W(i, k) = normal();
                draw.alpha.noalias() = draw.W * inputs_t;
            } else {
                zs.resize(n_cols, p);
                for (Eigen::Index i = 0; i < p; ++i)
                    for (Eigen::Index k = 0; k < n_cols; ++k) zs(k, i) = normal();
                draw.alpha.noalias() = (factor * zs).transpose();
            }
            draw.s_nn.resize(n_cols);
            for (Eigen::Index k = 0; k < n_cols; ++k) {
                double acc = 0.0;
                for (Eigen::Index i = 0; i < p; ++i) acc += draw.a(i) * phi.value(draw.alpha(i, k));
                draw.s_nn(k) = acc / sqrt_p;
            }
        } else {
            draw.s_nn.resize(0);
        }

        if (problem.couple_linear) {
            const double norm_a = draw.a.norm();
            draw.s_lin.noalias() = draw.alpha.transpose() * draw.a / norm_a;
            if (full) draw.v.noalias() = draw.W.transpose() * draw.a / norm_a;
        } else if (full) {
            draw.v.resize(d);
            for (Eigen::Index k = 0; k < d; ++k) draw.v(k) = normal();
            draw.s_lin.noalias() = inputs_t.transpose() * draw.v;
        } else {
            for (Eigen::Index k = 0; k < n_cols; ++k) z(k) = normal();
            draw.s_lin.noalias() = factor * z.head(n_cols);
        }

        draw.xi.resize(n_rows);
        for (Eigen::Index k = 0; k < n_rows; ++k) draw.xi(k) = normal();

        for (std::size_t ti = 0; ti < problem.targets.size(); ++ti) {
            const IsTarget& target = problem.targets[ti];
            double ll = 0.0;
            for (Eigen::Index mu = 0; mu < n_rows; ++mu) {
                const std::size_t kernel_index =
                    target.row_kernel.empty() ? 0 : target.row_kernel[static_cast<std::size_t>(mu)];
                const double s = draw.s_t(static_cast<std::size_t>(mu), target.t, eq, draw.xi(mu));
                ll += target.kernels[kernel_index].log_density(target.y(mu), s);
            }
            draw.loglik[ti] = target.beta * ll;
        }
        visit(draw);
    }
}

std::vector<double> WeightedEnsemble::normalized_weights() const {
    std::vector<double> w(log_weights.size(), 0.0);
    if (log_weights.empty()) return w;
    const double top = *std::max_element(log_weights.begin(), log_weights.end());
    double total = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        w[j] = std::exp(log_weights[j] - top);
        total += w[j];
    }
    for (double& x : w) x /= total;
    return w;
}

WeightedEnsemble WeightedEnsemble::uniform(std::vector<ParamPoint> points, double t) {
    WeightedEnsemble out;
    out.t = t;
    out.log_weights.assign(points.size(), 0.0);
    out.ess = static_cast<double>(points.size());
    out.points = std::move(points);
    return out;
}

WeightedEnsemble importance_ensemble(const LogTarget& target, std::size_t M, Rng& rng) {
    if (M < 100) throw std::invalid_argument("importance_ensemble needs M >= 100");
    IsProblem problem{target.model(), target.X(), Matrix(0, target.X().cols()), true, false, {make_is_target(target)}};
    WeightedEnsemble out;
    out.t = target.t();
    out.points.reserve(M);
    out.log_weights.reserve(M);
    WeightedAccumulator acc;
    run_prior_draws(problem, M, rng, [&](const PriorDraw& draw) {
        out.points.push_back(ParamPoint{draw.a, draw.W, draw.v, draw.xi});
        out.log_weights.push_back(draw.loglik[0]);
        acc.add(draw.loglik[0]);
    });
    if (acc.degenerate()) throw DegenerateTargetError("every importance weight vanished (degenerate target)");
    out.log_Z_hat = acc.log_mean_weight();
    out.log_Z_se = acc.log_mean_weight_se();
    out.ess = acc.ess();
    return out;
}

}  // namespace gelab
