#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gelab {

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Gauss-Hermite rule for the standard normal measure: sum_i w_i h(z_i)
/// approximates E[h(Z)], Z ~ N(0,1). Weights sum to one.
class GaussHermite {
public:
    explicit GaussHermite(int order);

    int order() const noexcept { return static_cast<int>(nodes_.size()); }
    std::span<const double> nodes() const noexcept { return nodes_; }
    std::span<const double> weights() const noexcept { return weights_; }

    template <class F>
    double expect(F&& h) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const double v = h(nodes_[i]);
            if (!std::isfinite(v)) throw_nonfinite(i);
            sum += weights_[i] * v;
        }
        return sum;
    }

    /// E[h(Z1, Z2)] for independent standard normals (tensor rule).
    template <class F>
    double expect2(F&& h) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            double inner = 0.0;
            for (std::size_t j = 0; j < nodes_.size(); ++j) {
                const double v = h(nodes_[i], nodes_[j]);
                if (!std::isfinite(v)) throw_nonfinite(i);
                inner += weights_[j] * v;
            }
            sum += weights_[i] * inner;
        }
        return sum;
    }

private:
    [[noreturn]] void throw_nonfinite(std::size_t i) const;

    std::vector<double> nodes_;
    std::vector<double> weights_;
};

/// Shared immutable rule of the given order (built once, thread-safe).
const GaussHermite& gauss_hermite_rule(int order);

/// E[h(Z)] with a rule of the given order. Throws QuadratureError naming the
/// node when h is not finite there; std::invalid_argument when order < 2.
double gauss_hermite_expect(const std::function<double(double)>& h, int order);

inline constexpr int kDefaultQuadratureOrder = 80;
inline constexpr int kMaxQuadratureOrder = 1280;

/// Doubles the order starting at `start_order` until two successive
/// estimates differ by less than `tol`.
double gauss_expect_converged(const std::function<double(double)>& h,
                              double tol = 1e-10,
                              int start_order = kDefaultQuadratureOrder);

/// E[h(Z)] by the trapezoid rule on [-half_width, half_width]. For integrands
/// analytic in a strip around the real axis this converges geometrically in
/// 1/step, while Gauss-Hermite stalls on compositions with tanh, whose poles
/// sit at distance pi/2 from the axis.
template <class F>
double gauss_trapezoid_expect(F&& h, double step = 0.1, double half_width = 9.0) {
    const int half = static_cast<int>(std::ceil(half_width / step));
    const double norm = step / std::sqrt(2.0 * M_PI);
    double sum = 0.0;
    for (int i = -half; i <= half; ++i) {
        const double z = i * step;
        sum += std::exp(-0.5 * z * z) * h(z);
    }
    return norm * sum;
}

}  // namespace gelab
