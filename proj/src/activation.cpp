#include "gelab/activation.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gelab {

namespace {

// erf(c x) with c = sqrt(pi)/2, so that phi'(0) = 2c/sqrt(pi) = 1.
constexpr double kErfScale = 0.88622692545275801365;  // sqrt(pi)/2
constexpr double kErfSlope = 1.0;                      // 2c/sqrt(pi)

}  // namespace

Activation Activation::parse(std::string_view name) {
    if (name == "tanh") return Activation(ActivationKind::tanh);
    if (name == "sine" || name == "sin") return Activation(ActivationKind::sine);
    if (name == "scaled-erf" || name == "erf") return Activation(ActivationKind::scaled_erf);
    if (name == "identity" || name == "linear") return Activation(ActivationKind::identity);
    throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::string Activation::name() const {
    switch (kind_) {
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::sine: return "sine";
    case ActivationKind::scaled_erf: return "scaled-erf";
    case ActivationKind::identity: return "identity";
    }
    return "?";
}

double Activation::value(double x) const noexcept {
    switch (kind_) {
    case ActivationKind::tanh: return std::tanh(x);
    case ActivationKind::sine: return std::sin(x);
    case ActivationKind::scaled_erf: return std::erf(kErfScale * x);
    case ActivationKind::identity: return x;
    }
    return 0.0;
}

double Activation::deriv(double x) const noexcept {
    switch (kind_) {
    case ActivationKind::tanh: {
        const double th = std::tanh(x);
        return 1.0 - th * th;
    }
    case ActivationKind::sine: return std::cos(x);
    case ActivationKind::scaled_erf: return kErfSlope * std::exp(-kErfScale * kErfScale * x * x);
    case ActivationKind::identity: return 1.0;
    }
    return 0.0;
}

double Activation::deriv2(double x) const noexcept {
    switch (kind_) {
    case ActivationKind::tanh: {
        const double th = std::tanh(x);
        return -2.0 * th * (1.0 - th * th);
    }
    case ActivationKind::sine: return -std::sin(x);
    case ActivationKind::scaled_erf:
        return -2.0 * kErfScale * kErfScale * x * deriv(x);
    case ActivationKind::identity: return 0.0;
    }
    return 0.0;
}

double Activation::deriv3(double x) const noexcept {
    switch (kind_) {
    case ActivationKind::tanh: {
        const double th = std::tanh(x);
        const double s = 1.0 - th * th;
        return -2.0 * s * s + 4.0 * th * th * s;
    }
    case ActivationKind::sine: return -std::cos(x);
    case ActivationKind::scaled_erf: {
        const double c2 = kErfScale * kErfScale;
        return (4.0 * c2 * c2 * x * x - 2.0 * c2) * deriv(x);
    }
    case ActivationKind::identity: return 0.0;
    }
    return 0.0;
}

double Activation::lipschitz_bound() const noexcept {
    return 1.0;  // all four kinds have sup |phi'| = 1
}

double Activation::deriv2_bound() const noexcept {
    switch (kind_) {
    case ActivationKind::tanh: return 4.0 / (3.0 * std::sqrt(3.0));
    case ActivationKind::sine: return 1.0;
    case ActivationKind::scaled_erf:
        // max of 2c^2 |x| exp(-c^2 x^2) at x = 1/(c sqrt 2)
        return std::sqrt(2.0) * kErfScale * std::exp(-0.5);
    case ActivationKind::identity: return 0.0;
    }
    return 0.0;
}

double Activation::deriv3_bound() const noexcept {
    switch (kind_) {
    case ActivationKind::tanh: return 2.0;
    case ActivationKind::sine: return 1.0;
    case ActivationKind::scaled_erf: return 2.0 * kErfScale * kErfScale;
    case ActivationKind::identity: return 0.0;
    }
    return 0.0;
}

}  // namespace gelab
