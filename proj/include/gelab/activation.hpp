#pragma once

#include <string>
#include <string_view>

namespace gelab {

enum class ActivationKind { tanh, sine, scaled_erf, identity };

/// Odd, Lipschitz hidden-layer activation with bounded second and third
/// derivatives. `scaled_erf` is erf(sqrt(pi) x / 2), which has unit slope at 0.
class Activation {
public:
    explicit Activation(ActivationKind kind = ActivationKind::tanh) : kind_(kind) {}

    static Activation parse(std::string_view name);

    ActivationKind kind() const noexcept { return kind_; }
    std::string name() const;

    double value(double x) const noexcept;
    double deriv(double x) const noexcept;
    double deriv2(double x) const noexcept;
    double deriv3(double x) const noexcept;

    double operator()(double x) const noexcept { return value(x); }

    // Global bounds: |phi'| <= lipschitz, |phi''| <= deriv2, |phi'''| <= deriv3.
    double lipschitz_bound() const noexcept;
    double deriv2_bound() const noexcept;
    double deriv3_bound() const noexcept;

    friend bool operator==(const Activation&, const Activation&) = default;

private:
    ActivationKind kind_;
};

}  // namespace gelab
