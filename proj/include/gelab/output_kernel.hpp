#pragma once

#include "gelab/readout.hpp"
#include "gelab/rng.hpp"

#include <cstddef>
#include <string_view>

namespace gelab {

/// Which partial derivative of P_out(y|x) a ratio P^{.}/P refers to.
enum class PoutDerivative { y, x, yy, yx, xx };

PoutDerivative parse_pout_derivative(std::string_view tag);

/// u = log P_out, its first two x-derivatives, and U = u'' + u'^2 = P^xx/P.
struct KernelDerivs {
    double u = 0.0;
    double u1 = 0.0;
    double u2 = 0.0;
    double uu = 0.0;
};

/// A response drawn from the channel together with its latent draws.
struct ChannelDraw {
    double y = 0.0;
    std::size_t atom = 0;
    double noise = 0.0;
};

/// Output kernel P_out(y|x) = sum_A P_A(A) N(y; f(x;A), delta).
class OutputKernel {
public:
    /// Readouts violating boundedness are refused unless `allow_violation`;
    /// when allowed, a warning is emitted.
    OutputKernel(Readout readout, double delta, bool allow_violation = false);

    const Readout& readout() const noexcept { return readout_; }
    double delta() const noexcept { return delta_; }

    double density(double y, double x) const;
    double log_density(double y, double x) const;
    double u_prime(double y, double x) const;
    double u_double_prime(double y, double x) const;
    KernelDerivs derivs(double y, double x) const;

    /// u and u' only (cheaper; used in hot loops).
    double log_density_and_prime(double y, double x, double& u1) const;

    /// P^{which}_out / P_out through the auxiliary-posterior brackets.
    double ratio(PoutDerivative which, double y, double x) const;

    /// E[Y | x] and Var[Y | x].
    double conditional_mean(double x) const;
    double conditional_variance(double x) const;

    /// E[Y' | x, Y~] for the side observation Y~ = sqrt(lambda) Y' + Z'.
    double side_posterior_mean(double y_tilde, double x, double lambda) const;
    /// E[log P_out(Y | x) | x] with the label noise integrated by Gauss-Hermite.
    double expected_log_density(double x, int order = 40) const;

    ChannelDraw sample(double x, Rng& rng) const;
    /// Deterministic channel map from pinned latents.
    double respond(double x, std::size_t atom, double noise) const;
    /// Index of the atom selected by a uniform draw in [0, 1).
    std::size_t atom_for_uniform(double u) const;

    /// C with |ratio| <= C (|Z|^2 + 1) whenever y = f(x; A0) + sqrt(delta) Z.
    double ratio_bound(PoutDerivative which) const;
    /// Explicit bounds on E[u'^2 | x] and E[U_{mu mu}^2 | x].
    double u_prime_second_moment_bound() const;
    double uu_second_moment_bound() const;

    /// Kernel of sqrt(lambda) Y + Z' with Y ~ P_out(.|x): readout sqrt(lambda) f,
    /// noise variance lambda delta + 1.
    OutputKernel side_channel(double lambda) const;

private:
    // Log of the unnormalized auxiliary posterior weights and their softmax.
    template <class Visit>
    double bracket(double y, double x, Visit&& visit) const;

    Readout readout_;
    double delta_;
    double log_norm_;
    bool allow_violation_;
};

}  // namespace gelab
