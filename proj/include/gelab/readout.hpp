#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace gelab {

/// Shape g of the readout; the auxiliary variable enters as f(x; A) = A g(x).
enum class ReadoutShape { zero, tanh, identity };

/// One support point of the finite auxiliary law P_A.
struct AuxAtom {
    double scale = 1.0;
    double prob = 1.0;

    friend bool operator==(const AuxAtom&, const AuxAtom&) = default;
};

/// Readout f(x; A) = A g(x) with A drawn from a finite-support law.
/// Deterministic readouts have the single atom {scale 1, prob 1}.
class Readout {
public:
    Readout() : Readout(ReadoutShape::tanh, {{1.0, 1.0}}) {}
    Readout(ReadoutShape shape, std::vector<AuxAtom> support);

    static Readout deterministic(ReadoutShape shape) { return Readout(shape, {{1.0, 1.0}}); }
    static Readout zero() { return deterministic(ReadoutShape::zero); }
    /// A = +1 with probability p_plus, -1 otherwise.
    static Readout sign_mixture(ReadoutShape shape, double p_plus = 0.5);
    /// f(x) = x; violates the boundedness assumption.
    static Readout identity_unbounded() { return deterministic(ReadoutShape::identity); }

    /// Accepts "zero", "tanh", "identity", "sign-tanh" (equiprobable signs).
    static Readout parse(std::string_view name);

    ReadoutShape shape() const noexcept { return shape_; }
    const std::vector<AuxAtom>& support() const noexcept { return support_; }
    std::size_t atoms() const noexcept { return support_.size(); }
    std::string name() const;

    bool is_zero() const noexcept { return shape_ == ReadoutShape::zero; }
    bool is_deterministic() const noexcept { return support_.size() == 1; }

    double value(double x, std::size_t atom) const noexcept;
    double deriv(double x, std::size_t atom) const noexcept;
    double deriv2(double x, std::size_t atom) const noexcept;

    /// B_f with |f|, |f'|, |f''| <= B_f for every atom; infinite when the
    /// shape is unbounded.
    double bound() const noexcept;
    bool satisfies_a2() const noexcept { return shape_ != ReadoutShape::identity; }

    /// Same law with every atom scale multiplied by c (readout c f).
    Readout scaled(double c) const;

    friend bool operator==(const Readout&, const Readout&) = default;

private:
    double shape_value(double x) const noexcept;
    double shape_deriv(double x) const noexcept;
    double shape_deriv2(double x) const noexcept;

    ReadoutShape shape_;
    std::vector<AuxAtom> support_;
};

}  // namespace gelab
