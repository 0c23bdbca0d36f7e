#include "gelab/readout.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gelab {

Readout::Readout(ReadoutShape shape, std::vector<AuxAtom> support)
    : shape_(shape), support_(std::move(support)) {
    if (support_.empty()) throw std::invalid_argument("auxiliary law needs at least one atom");
    double total = 0.0;
    for (const auto& atom : support_) {
        if (!(atom.prob > 0.0) || !std::isfinite(atom.scale))
            throw std::invalid_argument("auxiliary atoms need positive probability and finite scale");
        total += atom.prob;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("auxiliary probabilities must sum to 1");
}

Readout Readout::sign_mixture(ReadoutShape shape, double p_plus) {
    if (!(p_plus > 0.0 && p_plus < 1.0))
        throw std::invalid_argument("sign mixture needs 0 < p_plus < 1");
    return Readout(shape, {{1.0, p_plus}, {-1.0, 1.0 - p_plus}});
}

Readout Readout::parse(std::string_view name) {
    if (name == "zero") return zero();
    if (name == "tanh") return deterministic(ReadoutShape::tanh);
    if (name == "identity") return identity_unbounded();
    if (name == "sign-tanh") return sign_mixture(ReadoutShape::tanh);
    throw std::invalid_argument("unknown readout '" + std::string(name) + "'");
}

std::string Readout::name() const {
    std::string base;
    switch (shape_) {
    case ReadoutShape::zero: base = "zero"; break;
    case ReadoutShape::tanh: base = "tanh"; break;
    case ReadoutShape::identity: base = "identity"; break;
    }
    if (is_deterministic() && support_[0].scale == 1.0) return base;
    std::ostringstream out;
    out << base << "[";
    for (std::size_t k = 0; k < support_.size(); ++k) {
        if (k) out << ";";
        out << support_[k].scale << ":" << support_[k].prob;
    }
    out << "]";
    return out.str();
}

double Readout::shape_value(double x) const noexcept {
    switch (shape_) {
    case ReadoutShape::zero: return 0.0;
    case ReadoutShape::tanh: return std::tanh(x);
    case ReadoutShape::identity: return x;
    }
    return 0.0;
}

double Readout::shape_deriv(double x) const noexcept {
    switch (shape_) {
    case ReadoutShape::zero: return 0.0;
    case ReadoutShape::tanh: {
        const double th = std::tanh(x);
        return 1.0 - th * th;
    }
    case ReadoutShape::identity: return 1.0;
    }
    return 0.0;
}

double Readout::shape_deriv2(double x) const noexcept {
    switch (shape_) {
    case ReadoutShape::zero: return 0.0;
    case ReadoutShape::tanh: {
        const double th = std::tanh(x);
        return -2.0 * th * (1.0 - th * th);
    }
    case ReadoutShape::identity: return 0.0;
    }
    return 0.0;
}

double Readout::value(double x, std::size_t atom) const noexcept {
    return support_[atom].scale * shape_value(x);
}

double Readout::deriv(double x, std::size_t atom) const noexcept {
    return support_[atom].scale * shape_deriv(x);
}

double Readout::deriv2(double x, std::size_t atom) const noexcept {
    return support_[atom].scale * shape_deriv2(x);
}

double Readout::bound() const noexcept {
    double max_scale = 0.0;
    for (const auto& atom : support_) max_scale = std::max(max_scale, std::abs(atom.scale));
    switch (shape_) {
    case ReadoutShape::zero: return 0.0;
    case ReadoutShape::tanh: return max_scale;  // |tanh|, |tanh'|, |tanh''| <= 1
    case ReadoutShape::identity: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

Readout Readout::scaled(double c) const {
    auto atoms = support_;
    for (auto& atom : atoms) atom.scale *= c;
    return Readout(shape_, std::move(atoms));
}

}  // namespace gelab
