#include "gelab/model.hpp"

#include <cmath>
#include <stdexcept>

namespace gelab {

double kappa(const Dims& dims) {
    const double d = static_cast<double>(dims.d);
    const double p = static_cast<double>(dims.p);
    const double n = static_cast<double>(dims.n);
    return (1.0 + n / d) * (n / p + n / std::pow(d, 1.5) + 1.0 / std::sqrt(d));
}

ModelSpec::ModelSpec(Activation activation, Readout readout, double delta, Dims dims,
                     bool allow_violation)
    : activation_(activation),
      kernel_(std::move(readout), delta, allow_violation),
      dims_(dims),
      equiv_(gauss_equiv_params(activation)),
      allow_violation_(allow_violation) {
    if (dims.d == 0 || dims.p == 0) throw std::invalid_argument("dimensions d and p must be >= 1");
}

ModelSpec ModelSpec::with_dims(Dims dims) const {
    ModelSpec copy = *this;
    if (dims.d == 0 || dims.p == 0) throw std::invalid_argument("dimensions d and p must be >= 1");
    copy.dims_ = dims;
    return copy;
}

ModelSpec ModelSpec::with_delta(double delta) const {
    return ModelSpec(activation_, kernel_.readout(), delta, dims_, allow_violation_);
}

}  // namespace gelab
