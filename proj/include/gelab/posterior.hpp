#pragma once

#include "gelab/data_gen.hpp"
#include "gelab/model.hpp"

#include <Eigen/Dense>

#include <cstddef>

namespace gelab {

/// Student parameters for the interpolating model. Blocks that do not enter
/// the likelihood at a given t are still carried (they keep their prior law).
struct ParamPoint {
    Vector a;   // p
    Matrix W;   // p x d
    Vector v;   // d
    Vector xi;  // one entry per likelihood row

    static ParamPoint zeros(const Dims& dims, std::size_t rows);
    static ParamPoint prior(const Dims& dims, std::size_t rows, Rng& rng);

    std::size_t size() const;
    bool all_finite() const;
    double squared_norm() const;
    Vector flatten() const;
    static ParamPoint unflatten(const Vector& flat, const Dims& dims, std::size_t rows);
};

/// The teacher blocks of a dataset (and of its side-information rows) as a
/// point of the student parameter space.
ParamPoint teacher_point(const Dataset& data);
ParamPoint teacher_point(const Dataset& data, const SideInfo& side);

/// Unnormalized tempered posterior exp(beta sum_mu u_{Y_mu}(s_{t mu})) N(theta; 0, I).
/// With side information the extra rows use the rescaled channel
/// (readout sqrt(lambda) f, noise lambda delta + 1) against Y~.
class LogTarget {
public:
    LogTarget(const ModelSpec& model, const Dataset& data, double t, double beta = 1.0);
    LogTarget(const ModelSpec& model, const Dataset& data, const SideInfo& side, double t, double beta = 1.0);

    const ModelSpec& model() const noexcept { return model_; }
    const Dims& dims() const noexcept { return model_.dims(); }
    double t() const noexcept { return t_; }
    double beta() const noexcept { return beta_; }
    std::size_t rows() const noexcept { return static_cast<std::size_t>(X_.rows()); }
    std::size_t train_rows() const noexcept { return n_train_; }
    bool has_side() const noexcept { return rows() > n_train_; }
    double lambda() const noexcept { return lambda_; }
    const Matrix& X() const noexcept { return X_; }
    const Vector& y() const noexcept { return y_; }
    const OutputKernel& kernel(std::size_t row) const noexcept {
        return row < n_train_ ? model_.kernel() : side_kernel_;
    }

    LogTarget with_beta(double beta) const;

private:
    ModelSpec model_;
    OutputKernel side_kernel_;
    Matrix X_;
    Vector y_;
    std::size_t n_train_;
    double t_;
    double beta_;
    double lambda_ = 0.0;
};

/// s_{t mu}(theta) for every likelihood row.
Vector student_preactivations(const LogTarget& target, const ParamPoint& theta);

double log_likelihood(const LogTarget& target, const ParamPoint& theta);
/// beta * log_likelihood - |theta|^2 / 2 over all four blocks.
double log_posterior_unnorm(const LogTarget& target, const ParamPoint& theta);
ParamPoint grad_log_posterior(const LogTarget& target, const ParamPoint& theta);
/// Value and gradient in one pass.
double log_posterior_and_grad(const LogTarget& target, const ParamPoint& theta, ParamPoint& grad);

}  // namespace gelab
