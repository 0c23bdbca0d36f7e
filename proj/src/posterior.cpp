#include "gelab/posterior.hpp"

#include <cmath>
#include <stdexcept>

namespace gelab {

namespace {

void check_shapes(const LogTarget& target, const ParamPoint& theta) {
    const Dims& dims = target.dims();
    const auto p = static_cast<Eigen::Index>(dims.p);
    const auto d = static_cast<Eigen::Index>(dims.d);
    if (theta.a.size() != p || theta.W.rows() != p || theta.W.cols() != d || theta.v.size() != d ||
        theta.xi.size() != static_cast<Eigen::Index>(target.rows()))
        throw std::invalid_argument("parameter point does not match the target dimensions");
}

Vector normals(Eigen::Index n, NormalSource& normal) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
}

// Hidden pre-activations alpha = W X^T / sqrt(d), one column per row.
Matrix hidden_fields(const LogTarget& target, const ParamPoint& theta) {
    return theta.W * target.X().transpose() / std::sqrt(static_cast<double>(target.dims().d));
}

}  // namespace

ParamPoint ParamPoint::zeros(const Dims& dims, std::size_t rows) {
    const auto p = static_cast<Eigen::Index>(dims.p);
    const auto d = static_cast<Eigen::Index>(dims.d);
    return {Vector::Zero(p), Matrix::Zero(p, d), Vector::Zero(d), Vector::Zero(static_cast<Eigen::Index>(rows))};
}

ParamPoint ParamPoint::prior(const Dims& dims, std::size_t rows, Rng& rng) {
    NormalSource normal(rng);
    ParamPoint theta = zeros(dims, rows);
    theta.a = normals(theta.a.size(), normal);
    for (Eigen::Index i = 0; i < theta.W.rows(); ++i)
        for (Eigen::Index j = 0; j < theta.W.cols(); ++j) theta.W(i, j) = normal();
    theta.v = normals(theta.v.size(), normal);
    theta.xi = normals(theta.xi.size(), normal);
    return theta;
}

std::size_t ParamPoint::size() const {
    return static_cast<std::size_t>(a.size() + W.size() + v.size() + xi.size());
}

bool ParamPoint::all_finite() const {
    return a.allFinite() && W.allFinite() && v.allFinite() && xi.allFinite();
}

double ParamPoint::squared_norm() const {
    return a.squaredNorm() + W.squaredNorm() + v.squaredNorm() + xi.squaredNorm();
}

Vector ParamPoint::flatten() const {
    Vector flat(static_cast<Eigen::Index>(size()));
    Eigen::Index k = 0;
    flat.segment(k, a.size()) = a;
    k += a.size();
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
        flat.segment(k, W.cols()) = W.row(i).transpose();
        k += W.cols();
    }
    flat.segment(k, v.size()) = v;
    k += v.size();
    flat.segment(k, xi.size()) = xi;
    return flat;
}

ParamPoint ParamPoint::unflatten(const Vector& flat, const Dims& dims, std::size_t rows) {
    ParamPoint theta = zeros(dims, rows);
    if (flat.size() != static_cast<Eigen::Index>(theta.size()))
        throw std::invalid_argument("flat parameter vector has the wrong length");
    Eigen::Index k = 0;
    theta.a = flat.segment(k, theta.a.size());
    k += theta.a.size();
    for (Eigen::Index i = 0; i < theta.W.rows(); ++i) {
        theta.W.row(i) = flat.segment(k, theta.W.cols()).transpose();
        k += theta.W.cols();
    }
    theta.v = flat.segment(k, theta.v.size());
    k += theta.v.size();
    theta.xi = flat.segment(k, theta.xi.size());
    return theta;
}

ParamPoint teacher_point(const Dataset& data) {
    return {data.nn.a, data.nn.W, data.glm.v, data.glm.xi};
}

ParamPoint teacher_point(const Dataset& data, const SideInfo& side) {
    ParamPoint theta = teacher_point(data);
    theta.xi.conservativeResize(data.glm.xi.size() + side.xi_new.size());
    theta.xi.tail(side.xi_new.size()) = side.xi_new;
    return theta;
}

LogTarget::LogTarget(const ModelSpec& model, const Dataset& data, double t, double beta)
    : model_(model),
      side_kernel_(model.kernel()),
      X_(data.X),
      y_(data.Y),
      n_train_(static_cast<std::size_t>(data.X.rows())),
      t_(t),
      beta_(beta) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("interpolation time t must lie in [0, 1]");
    if (model.dims() != data.dims) throw std::invalid_argument("dataset dimensions differ from the model");
}

LogTarget::LogTarget(const ModelSpec& model, const Dataset& data, const SideInfo& side, double t, double beta)
    : LogTarget(model, data, t, beta) {
    side_kernel_ = model.kernel().side_channel(side.lambda);
    lambda_ = side.lambda;
    const Eigen::Index n = X_.rows();
    const Eigen::Index m = side.X_new.rows();
    X_.conservativeResize(n + m, Eigen::NoChange);
    X_.bottomRows(m) = side.X_new;
    y_.conservativeResize(n + m);
    y_.tail(m) = side.Y_tilde;
}

LogTarget LogTarget::with_beta(double beta) const {
    LogTarget out = *this;
    out.beta_ = beta;
    return out;
}

Vector student_preactivations(const LogTarget& target, const ParamPoint& theta) {
    check_shapes(target, theta);
    const Activation& phi = target.model().activation();
    const GaussEquivParams& eq = target.model().equiv();
    const double t = target.t();
    const double inv_sqrt_p = 1.0 / std::sqrt(static_cast<double>(target.dims().p));
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(target.dims().d));
    const Matrix alpha = hidden_fields(target, theta);
    const Vector lin = target.X() * theta.v * inv_sqrt_d;
    Vector s(static_cast<Eigen::Index>(target.rows()));
    for (Eigen::Index mu = 0; mu < s.size(); ++mu) {
        double nn = 0.0;
        for (Eigen::Index i = 0; i < alpha.rows(); ++i) nn += theta.a(i) * phi.value(alpha(i, mu));
        s(mu) = combine_preactivation(nn * inv_sqrt_p, lin(mu), theta.xi(mu), t, eq);
    }
    return s;
}

double log_likelihood(const LogTarget& target, const ParamPoint& theta) {
    const Vector s = student_preactivations(target, theta);
    double total = 0.0;
    for (Eigen::Index mu = 0; mu < s.size(); ++mu)
        total += target.kernel(static_cast<std::size_t>(mu)).log_density(target.y()(mu), s(mu));
    return total;
}

double log_posterior_unnorm(const LogTarget& target, const ParamPoint& theta) {
    return target.beta() * log_likelihood(target, theta) - 0.5 * theta.squared_norm();
}

double log_posterior_and_grad(const LogTarget& target, const ParamPoint& theta, ParamPoint& grad) {
    check_shapes(target, theta);
    const Activation& phi = target.model().activation();
    const GaussEquivParams& eq = target.model().equiv();
    const double t = target.t();
    const double sqrt_p = std::sqrt(static_cast<double>(target.dims().p));
    const double sqrt_d = std::sqrt(static_cast<double>(target.dims().d));
    const double c_nn = std::sqrt(1.0 - t);
    const double c_lin = std::sqrt(t) * eq.rho;
    const double c_xi = std::sqrt(t * eq.epsilon);

    const Matrix alpha = hidden_fields(target, theta);
    const Vector lin = target.X() * theta.v / sqrt_d;
    const Eigen::Index rows = alpha.cols();

    Vector du(rows);
    double loglik = 0.0;
    Matrix phi_alpha(alpha.rows(), rows);
    for (Eigen::Index mu = 0; mu < rows; ++mu) {
        double nn = 0.0;
        for (Eigen::Index i = 0; i < alpha.rows(); ++i) {
            phi_alpha(i, mu) = phi.value(alpha(i, mu));
            nn += theta.a(i) * phi_alpha(i, mu);
        }
        const double s = combine_preactivation(nn / sqrt_p, lin(mu), theta.xi(mu), t, eq);
        double u1 = 0.0;
        loglik += target.kernel(static_cast<std::size_t>(mu)).log_density_and_prime(target.y()(mu), s, u1);
        du(mu) = target.beta() * u1;
    }

    // ds/da_i = c_nn phi(alpha_i)/sqrt(p); ds/dW_ij = c_nn a_i phi'(alpha_i) X_j /sqrt(pd)
    grad.a = c_nn / sqrt_p * (phi_alpha * du) - theta.a;
    Matrix weighted(alpha.rows(), rows);
    for (Eigen::Index mu = 0; mu < rows; ++mu)
        for (Eigen::Index i = 0; i < alpha.rows(); ++i)
            weighted(i, mu) = du(mu) * theta.a(i) * phi.deriv(alpha(i, mu));
    grad.W = c_nn / (sqrt_p * sqrt_d) * (weighted * target.X()) - theta.W;
    grad.v = c_lin / sqrt_d * (target.X().transpose() * du) - theta.v;
    grad.xi = c_xi * du - theta.xi;

    return target.beta() * loglik - 0.5 * theta.squared_norm();
}

ParamPoint grad_log_posterior(const LogTarget& target, const ParamPoint& theta) {
    ParamPoint grad;
    log_posterior_and_grad(target, theta, grad);
    return grad;
}

}  // namespace gelab
