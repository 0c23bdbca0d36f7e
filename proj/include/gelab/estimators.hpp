#pragma once

#include "gelab/importance.hpp"
#include "gelab/model.hpp"
#include "gelab/sampler.hpp"
#include "gelab/stats.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gelab {

/// A Monte Carlo value with its standard error and the coordinates it was
/// measured at.
struct Estimate {
    std::string quantity;
    double value = 0.0;
    double se = 0.0;
    std::size_t n_outer = 0;
    std::size_t n_inner = 0;
    Dims dims;
    double t = 0.0;
    double kappa = 0.0;
    std::uint64_t seed = 0;
    std::size_t flagged = 0;  // replicas below the ESS floor
};

Estimate make_estimate(std::string quantity, const MeanSe& ms, const Dims& dims, double t, std::size_t n_inner,
                       std::uint64_t seed, std::size_t flagged = 0);

/// CSV schema shared by every estimator output.
std::string estimate_csv_header();
std::string estimate_csv_row(const Estimate& e);

struct DerivativeTerms {
    Estimate A1, A2, A3, B, total;
};

/// (1/n) E log Z_t over n_outer datasets generated at time t.
Estimate free_entropy(const ModelSpec& model, double t, std::size_t n_outer, const SamplerConfig& sampler,
                      std::uint64_t seed);

/// log Z of one dataset (importance evidence, or thermodynamic integration
/// when the sampler is MALA). `ess` is set for importance runs.
double dataset_log_z(const ModelSpec& model, const Dataset& data, double t, const SamplerConfig& sampler, Rng& rng,
                     double* ess = nullptr);

/// E log P_out(Y_1 | S_1) for the teacher at time t; the label noise is
/// integrated exactly, teacher and input are sampled.
Estimate conditional_entropy_term(const ModelSpec& model, double t, std::size_t M, std::uint64_t seed);

enum class PsiMode { nn, glm, limit };
PsiMode parse_psi_mode(const std::string& name);

/// Psi at the finite-size scale S_d(1) (nn, glm) or at sqrt(E phi^2) (limit).
Estimate psi_term(const ModelSpec& model, PsiMode mode, std::size_t M, std::uint64_t seed);
/// E_{Z} E_{Y | sigma Z} log P_out(Y | sigma Z): trapezoid rule in Z, Gauss-Hermite
/// of the given order in the label noise.
double psi_at_scale(const OutputKernel& kernel, double sigma, int order = 60);

/// (1/n) I(theta*; D) = -free entropy + E log P_out(Y_1 | S_1).
Estimate mutual_information(const ModelSpec& model, double t, std::size_t n_outer, const SamplerConfig& sampler,
                            std::size_t M_cond, std::uint64_t seed);

/// Bayes-optimal test error E (Y_new - E[Y_new | D, X_new])^2; the label noise
/// of the test response is integrated out.
Estimate gen_error(const ModelSpec& model, double t, std::size_t n_outer, std::size_t n_test,
                   const SamplerConfig& sampler, std::uint64_t seed);

/// Error on the side-information responses Y' given D and Y~.
Estimate gen_error_proxy(const ModelSpec& model, double t, double lambda, double eta, std::size_t n_outer,
                         std::size_t M, std::uint64_t seed);

/// (1/n) I(Y'; sqrt(lambda) Y' + Z' | Y, X).
Estimate side_information_mi(const ModelSpec& model, double t, double lambda, double eta, std::size_t n_outer,
                             std::size_t M, std::uint64_t seed);

struct ImmseReport {
    double lambda_mid = 0.0;
    double spacing = 0.0;
    double eta = 0.0;
    Estimate derivative;  // central difference of (1/n) I over lambda
    Estimate rhs;         // (m / 2n) E_n(lambda_mid, eta), m/n = eta when n eta is integral
    Estimate difference;  // paired per dataset
    double discrepancy_se_units = 0.0;
};

/// Three-point central difference on lambda_mid (1 +- 0.1), shared latents
/// and shared importance draws across the three lambdas.
ImmseReport immse_check(const ModelSpec& model, double t, double lambda_mid, double eta, std::size_t n_outer,
                        std::size_t M, std::uint64_t seed, double relative_spacing = 0.1);

/// A1, A2, A3 (quenched log Z_t times teacher-side u' sums, log Z centered by
/// its across-replica mean) and B (posterior bracket), jackknife errors.
DerivativeTerms interp_derivative_terms(const ModelSpec& model, double t, std::size_t n_outer, std::size_t M,
                                        std::uint64_t seed);

struct DerivativeCheck {
    DerivativeTerms terms;
    Estimate finite_difference;  // central difference of the free entropy in t
    Estimate difference;         // total - finite_difference, jackknife
};

/// interp_derivative_terms together with the finite-difference oracle on the
/// same datasets (latents pinned across t) and the same importance draws.
DerivativeCheck derivative_check(const ModelSpec& model, double t, double h, std::size_t n_outer, std::size_t M,
                                 std::uint64_t seed);

/// Paired NN-vs-GLM estimates on coupled datasets: v* = W*^T a*/|a*|, shared
/// inputs and channel latents, and prior draws shared by both posteriors.
struct PairedEstimate {
    Estimate nn;
    Estimate glm;
    Estimate gap;  // nn - glm
};

PairedEstimate free_entropy_pair(const ModelSpec& model, std::size_t n_outer, std::size_t M, std::uint64_t seed);
PairedEstimate gen_error_pair(const ModelSpec& model, std::size_t n_outer, std::size_t n_test, std::size_t M,
                              std::uint64_t seed);

}  // namespace gelab
