#include "gelab/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <map>
#include <memory>
#include <mutex>
#include <sstream>

namespace gelab {

namespace {

// Orthonormal probabilists' Hermite values p_{n-1}(z), p_n(z) with running
// rescaling so high orders do not overflow. Returns log of the scale factor.
struct HermitePair {
    double prev;   // p_{n-1} / scale
    double curr;   // p_n / scale
    double log_scale;
};

HermitePair hermite_pair(int n, double z) {
    double pm1 = 0.0;
    double p = 1.0;
    double log_scale = 0.0;
    for (int k = 0; k < n; ++k) {
        const double next = (z * p - std::sqrt(static_cast<double>(k)) * pm1) /
                            std::sqrt(static_cast<double>(k + 1));
        pm1 = p;
        p = next;
        if (std::abs(p) > 1e150) {
            p *= 1e-150;
            pm1 *= 1e-150;
            log_scale += 150.0 * std::log(10.0);
        }
    }
    return {pm1, p, log_scale};
}

}  // namespace

GaussHermite::GaussHermite(int order) {
    if (order < 2) throw std::invalid_argument("Gauss-Hermite order must be >= 2");
    const int n = order;

    // Golub-Welsch start: eigenvalues of the Jacobi matrix.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& eig = solver.eigenvalues();

    nodes_.resize(n);
    weights_.resize(n);
    for (int i = 0; i < n; ++i) {
        double z = eig(i);
        for (int it = 0; it < 6; ++it) {
            const auto hp = hermite_pair(n, z);
            // p_n' = sqrt(n) p_{n-1}
            const double step = hp.curr / (std::sqrt(static_cast<double>(n)) * hp.prev);
            z -= step;
            if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        const auto hp = hermite_pair(n, z);
        const double log_prev = std::log(std::abs(hp.prev)) + hp.log_scale;
        nodes_[i] = z;
        weights_[i] = std::exp(-std::log(static_cast<double>(n)) - 2.0 * log_prev);
    }
    // Symmetrize: exact odd symmetry of nodes and even symmetry of weights.
    for (int i = 0; i < n / 2; ++i) {
        const int j = n - 1 - i;
        const double z = 0.5 * (nodes_[j] - nodes_[i]);
        const double w = 0.5 * (weights_[i] + weights_[j]);
        nodes_[i] = -z;
        nodes_[j] = z;
        weights_[i] = weights_[j] = w;
    }
    if (n % 2 == 1) nodes_[n / 2] = 0.0;
}

void GaussHermite::throw_nonfinite(std::size_t i) const {
    std::ostringstream msg;
    msg.precision(17);
    msg << "integrand is not finite at Gauss-Hermite node " << i << " (z = " << nodes_[i]
        << ", order " << nodes_.size() << ")";
    throw QuadratureError(msg.str());
}

const GaussHermite& gauss_hermite_rule(int order) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<const GaussHermite>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[order];
    if (!slot) slot = std::make_unique<const GaussHermite>(order);
    return *slot;
}

double gauss_hermite_expect(const std::function<double(double)>& h, int order) {
    return gauss_hermite_rule(order).expect(h);
}

double gauss_expect_converged(const std::function<double(double)>& h, double tol, int start_order) {
    int order = std::max(start_order, 2);
    double prev = gauss_hermite_expect(h, order);
    while (order * 2 <= kMaxQuadratureOrder) {
        order *= 2;
        const double next = gauss_hermite_expect(h, order);
        if (std::abs(next - prev) < tol) return next;
        prev = next;
    }
    throw QuadratureError("Gauss-Hermite estimate did not converge to tolerance before order " +
                          std::to_string(kMaxQuadratureOrder));
}

}  // namespace gelab
