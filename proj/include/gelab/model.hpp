#pragma once

#include "gelab/activation.hpp"
#include "gelab/equivalence.hpp"
#include "gelab/output_kernel.hpp"
#include "gelab/readout.hpp"

#include <cstddef>

namespace gelab {

/// Input dimension d, hidden width p, number of samples n.
struct Dims {
    std::size_t d = 1;
    std::size_t p = 1;
    std::size_t n = 1;

    friend bool operator==(const Dims&, const Dims&) = default;
};

/// Control parameter (1 + n/d)(n/p + n/d^{3/2} + 1/sqrt(d)); the
/// equivalence regime is any sequence along which it vanishes.
double kappa(const Dims& dims);

class ModelSpec {
public:
    ModelSpec(Activation activation, Readout readout, double delta, Dims dims,
              bool allow_violation = false);

    const Activation& activation() const noexcept { return activation_; }
    const Readout& readout() const noexcept { return kernel_.readout(); }
    double delta() const noexcept { return kernel_.delta(); }
    const Dims& dims() const noexcept { return dims_; }
    const GaussEquivParams& equiv() const noexcept { return equiv_; }
    const OutputKernel& kernel() const noexcept { return kernel_; }
    bool allow_violation() const noexcept { return allow_violation_; }

    ModelSpec with_dims(Dims dims) const;
    ModelSpec with_delta(double delta) const;

private:
    Activation activation_;
    OutputKernel kernel_;
    Dims dims_;
    GaussEquivParams equiv_;
    bool allow_violation_;
};

}  // namespace gelab
