#pragma once

#include "gelab/activation.hpp"
#include "gelab/quadrature.hpp"

#include <stdexcept>

namespace gelab {

/// Constants of the equivalent noisy linear model:
/// rho = E phi'(Z), second_moment = E phi(Z)^2, epsilon = second_moment - rho^2.
/// epsilon is the variance of the effective Gaussian noise (injected as
/// sqrt(epsilon) xi), so rho^2 + epsilon matches the pre-activation variance.
struct GaussEquivParams {
    double rho = 1.0;
    double epsilon = 0.0;
    double second_moment = 1.0;
};

class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// E_{N(0,1)} phi'. With order <= 0 the order is doubled from the default
/// until successive values agree to 1e-10.
double compute_rho(const Activation& phi, int order = 0);
/// E_{N(0,1)} phi^2 - rho^2; throws ConsistencyError below -1e-12.
double compute_epsilon(const Activation& phi, int order = 0);
double compute_second_moment(const Activation& phi, int order = 0);

GaussEquivParams gauss_equiv_params(const Activation& phi, int order = 0);

}  // namespace gelab
