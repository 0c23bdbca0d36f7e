#include "gelab/equivalence.hpp"

#include <algorithm>
#include <string>

namespace gelab {

namespace {

template <class F>
double expect(F&& h, int order) {
    if (order > 0) return gauss_hermite_expect(h, order);
    return gauss_expect_converged(h);
}

}  // namespace

double compute_rho(const Activation& phi, int order) {
    if (phi.kind() == ActivationKind::identity) return 1.0;
    return expect([&](double z) { return phi.deriv(z); }, order);
}

double compute_second_moment(const Activation& phi, int order) {
    if (phi.kind() == ActivationKind::identity) return 1.0;
    return expect([&](double z) {
        const double v = phi.value(z);
        return v * v;
    }, order);
}

double compute_epsilon(const Activation& phi, int order) {
    return gauss_equiv_params(phi, order).epsilon;
}

GaussEquivParams gauss_equiv_params(const Activation& phi, int order) {
    GaussEquivParams params;
    params.rho = compute_rho(phi, order);
    params.second_moment = compute_second_moment(phi, order);
    params.epsilon = params.second_moment - params.rho * params.rho;
    if (params.epsilon < -1e-12)
        throw ConsistencyError("negative effective noise variance " + std::to_string(params.epsilon) +
                               " for " + phi.name());
    params.epsilon = std::max(params.epsilon, 0.0);
    return params;
}

}  // namespace gelab
