#pragma once

#include "gelab/posterior.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace gelab {

/// Effective sample size below which an importance estimate is flagged.
inline constexpr double kEssFloor = 50.0;

class DegenerateTargetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Running self-normalized weighted means with an online log-sum-exp shift.
/// Observables are fixed-size vectors given at construction.
class WeightedAccumulator {
public:
    explicit WeightedAccumulator(std::size_t dim = 0) : sums_(dim, 0.0) {}

    void add(double log_w, const double* x = nullptr);
    void add(double log_w, const Vector& x) { add(log_w, x.data()); }

    std::size_t count() const noexcept { return count_; }
    std::size_t dim() const noexcept { return sums_.size(); }
    /// log of (1/count) sum_j w_j.
    double log_mean_weight() const;
    /// Delta-method standard error of log_mean_weight.
    double log_mean_weight_se() const;
    double ess() const;
    double mean(std::size_t i) const;
    Vector means() const;
    bool degenerate() const noexcept { return sum_w_ <= 0.0; }

private:
    std::vector<double> sums_;
    double shift_ = -std::numeric_limits<double>::infinity();
    double sum_w_ = 0.0;
    double sum_w2_ = 0.0;
    std::size_t count_ = 0;
};

/// One likelihood evaluated on every prior draw of a run. Rows index the
/// problem's X; each row picks one of `kernels`.
struct IsTarget {
    double t = 0.0;
    double beta = 1.0;
    Vector y;
    std::vector<OutputKernel> kernels;
    std::vector<std::size_t> row_kernel;  // empty: kernel 0 everywhere
};

IsTarget make_is_target(const LogTarget& target);

/// A batch of prior draws shared by several targets (common random numbers).
/// The NN block is collapsed to its d-independent Gaussian hidden fields
/// unless `full` is set or d does not exceed the number of rows.
struct IsProblem {
    ModelSpec model;
    Matrix X;       // likelihood rows
    Matrix probes;  // extra inputs where pre-activations are recorded
    bool full = false;
    /// Draw the linear teacher as v = W^T a / |a| (exactly standard normal),
    /// which couples NN and GLM draws.
    bool couple_linear = false;
    std::vector<IsTarget> targets;
};

struct PriorDraw {
    Vector a;       // p (empty when the NN block is not needed)
    Matrix W;       // p x d, full mode only
    Vector v;       // d, full mode only
    Matrix alpha;   // p x (rows + probes)
    Vector s_nn;    // rows + probes
    Vector s_lin;   // rows + probes, v^T x / sqrt(d)
    Vector xi;      // rows
    std::vector<double> loglik;  // one per target

    /// s_t for the given interpolation time at column k (row or probe).
    double s_t(std::size_t k, double t, const GaussEquivParams& eq, double xi_value) const;
};

bool uses_full_mode(const IsProblem& problem);

using DrawVisitor = std::function<void(const PriorDraw&)>;
void run_prior_draws(const IsProblem& problem, std::size_t M, Rng& rng, const DrawVisitor& visit);

/// Posterior approximation: draws with log-weights and the evidence estimate.
struct WeightedEnsemble {
    std::vector<ParamPoint> points;
    std::vector<double> log_weights;
    double log_Z_hat = 0.0;
    double log_Z_se = 0.0;
    double ess = 0.0;
    double t = 0.0;

    std::size_t size() const noexcept { return points.size(); }
    bool ess_ok() const noexcept { return ess >= kEssFloor; }
    /// Self-normalized weights (sum to one).
    std::vector<double> normalized_weights() const;
    static WeightedEnsemble uniform(std::vector<ParamPoint> points, double t);
};

/// M prior draws weighted by exp(beta * log_likelihood).
WeightedEnsemble importance_ensemble(const LogTarget& target, std::size_t M, Rng& rng);

}  // namespace gelab
