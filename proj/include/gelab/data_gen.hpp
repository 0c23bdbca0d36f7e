#pragma once

#include "gelab/model.hpp"
#include "gelab/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace gelab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct TeacherNN {
    Vector a;  // p
    Matrix W;  // p x d
};

struct TeacherGLM {
    Vector v;   // d
    Vector xi;  // n
};

/// Realized auxiliary atoms A_mu and label noises Z_mu.
struct ResponseLatents {
    std::vector<std::size_t> atom;
    Vector noise;
};

/// A training set at interpolation time t (0: two-layer network, 1: GLM),
/// together with every latent draw that generated it. Both teacher blocks are
/// always present; the inactive one is prior-distributed.
struct Dataset {
    Dims dims;
    double t = 0.0;
    std::uint64_t seed = 0;
    Matrix X;  // n x d
    Vector Y;  // n
    TeacherNN nn;
    TeacherGLM glm;
    ResponseLatents aux;
};

/// Fresh side-information block: clean responses Y' from the same teacher and
/// Y~ = sqrt(lambda) Y' + Z'. m = ceil(n * eta) rows.
struct SideInfo {
    Matrix X_new;     // m x d
    Vector Y_prime;   // m
    Vector Y_tilde;   // m
    Vector xi_new;    // m, teacher effective noise for the new rows
    Vector tilde_noise;
    ResponseLatents aux;
    double lambda = 0.0;
    double eta = 1.0;
};

Matrix sample_inputs(std::size_t n, std::size_t d, Rng& rng);

/// a^T phi(W x / sqrt(d)) / sqrt(p).
double preactivation_nn(const TeacherNN& teacher, const Eigen::Ref<const Vector>& x, const Activation& phi);
/// v^T x / sqrt(d) (the linear part, before the rho factor).
double linear_projection(const Eigen::Ref<const Vector>& v, const Eigen::Ref<const Vector>& x);
/// rho v^T x / sqrt(d) + sqrt(epsilon) xi_mu.
double preactivation_glm(const TeacherGLM& teacher, const Eigen::Ref<const Vector>& x, std::size_t mu,
                         const GaussEquivParams& params);
/// sqrt(1-t) nn + sqrt(t) rho v^T x/sqrt(d) + sqrt(t epsilon) xi_mu.
double preactivation_interp(const TeacherNN& nn, const TeacherGLM& glm, const Eigen::Ref<const Vector>& x,
                            std::size_t mu, double t, const Activation& phi, const GaussEquivParams& params);
/// Same combination from already computed parts.
double combine_preactivation(double s_nn, double s_lin, double xi, double t, const GaussEquivParams& params);

/// How the linear teacher v* relates to the network teacher. `shared` sets
/// v* = W*^T a* / |a*|, which is exactly standard normal and independent of
/// the inputs, so NN and GLM datasets from one seed are coupled.
enum class TeacherCoupling { independent, shared };

/// Generates the dataset deterministically from `seed` (one substream per
/// latent block, so the same seed pins identical latents for every t).
Dataset gen_dataset(const ModelSpec& model, double t, std::uint64_t seed,
                    TeacherCoupling coupling = TeacherCoupling::independent);
Dataset gen_dataset(const ModelSpec& model, double t, Rng& rng);

/// Recomputes Y from the retained teacher blocks and channel latents at
/// interpolation time t (the same latents give a smooth path in t).
Dataset retime(const Dataset& data, const ModelSpec& model, double t);

/// Teacher pre-activations S_{t mu} of the dataset rows.
Vector teacher_preactivations(const Dataset& data, const ModelSpec& model);

SideInfo gen_side_info(const Dataset& data, const ModelSpec& model, double lambda, double eta,
                       std::uint64_t seed);
std::size_t side_info_rows(std::size_t n, double eta);

/// Re-evaluates the side responses for another lambda with the same latents.
SideInfo with_lambda(const SideInfo& side, double lambda);

}  // namespace gelab
