#include "gelab/data_gen.hpp"

#include <cmath>
#include <stdexcept>

namespace gelab {

namespace {

enum Block : std::uint64_t { kInputs = 0, kReadoutW, kHiddenW, kGlmV, kGlmXi, kAtoms, kNoise };
enum SideBlock : std::uint64_t { kSideInputs = 100, kSideXi, kSideAtoms, kSideNoise, kSideTilde };

Vector normal_vector(std::size_t n, Rng& rng) {
    NormalSource normal(rng);
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal();
    return v;
}

ResponseLatents draw_latents(const OutputKernel& kernel, std::size_t n, Rng& atom_rng, Rng& noise_rng) {
    ResponseLatents aux;
    aux.atom.resize(n);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t mu = 0; mu < n; ++mu) aux.atom[mu] = kernel.atom_for_uniform(unif(atom_rng));
    aux.noise = normal_vector(n, noise_rng);
    return aux;
}

void check_t(double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("interpolation time t must lie in [0, 1]");
}

}  // namespace

Matrix sample_inputs(std::size_t n, std::size_t d, Rng& rng) {
    if (n == 0 || d == 0) throw std::invalid_argument("sample_inputs needs n, d >= 1");
    NormalSource normal(rng);
    Matrix X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index r = 0; r < X.rows(); ++r)
        for (Eigen::Index c = 0; c < X.cols(); ++c) X(r, c) = normal();
    return X;
}

double preactivation_nn(const TeacherNN& teacher, const Eigen::Ref<const Vector>& x, const Activation& phi) {
    const Eigen::Index p = teacher.W.rows();
    const Eigen::Index d = teacher.W.cols();
    if (x.size() != d || teacher.a.size() != p)
        throw std::invalid_argument("preactivation_nn: dimension mismatch");
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
        double dot = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) dot += teacher.W(i, j) * x(j);
        acc += teacher.a(i) * phi.value(dot * inv_sqrt_d);
    }
    return acc / std::sqrt(static_cast<double>(p));
}

double linear_projection(const Eigen::Ref<const Vector>& v, const Eigen::Ref<const Vector>& x) {
    if (v.size() != x.size()) throw std::invalid_argument("linear_projection: dimension mismatch");
    double dot = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j) dot += v(j) * x(j);
    return dot / std::sqrt(static_cast<double>(v.size()));
}

double preactivation_glm(const TeacherGLM& teacher, const Eigen::Ref<const Vector>& x, std::size_t mu,
                         const GaussEquivParams& params) {
    if (mu >= static_cast<std::size_t>(teacher.xi.size()))
        throw std::out_of_range("preactivation_glm: sample index out of range");
    return params.rho * linear_projection(teacher.v, x) +
           std::sqrt(params.epsilon) * teacher.xi(static_cast<Eigen::Index>(mu));
}

double combine_preactivation(double s_nn, double s_lin, double xi, double t, const GaussEquivParams& params) {
    return std::sqrt(1.0 - t) * s_nn + std::sqrt(t) * (params.rho * s_lin) +
           std::sqrt(t * params.epsilon) * xi;
}

double preactivation_interp(const TeacherNN& nn, const TeacherGLM& glm, const Eigen::Ref<const Vector>& x,
                            std::size_t mu, double t, const Activation& phi, const GaussEquivParams& params) {
    check_t(t);
    if (mu >= static_cast<std::size_t>(glm.xi.size()))
        throw std::out_of_range("preactivation_interp: sample index out of range");
    return combine_preactivation(preactivation_nn(nn, x, phi), linear_projection(glm.v, x),
                                 glm.xi(static_cast<Eigen::Index>(mu)), t, params);
}

Dataset gen_dataset(const ModelSpec& model, double t, std::uint64_t seed, TeacherCoupling coupling) {
    check_t(t);
    const Dims& dims = model.dims();
    Dataset data;
    data.dims = dims;
    data.t = t;
    data.seed = seed;

    auto x_rng = substream(seed, kInputs);
    auto a_rng = substream(seed, kReadoutW);
    auto w_rng = substream(seed, kHiddenW);
    auto v_rng = substream(seed, kGlmV);
    auto xi_rng = substream(seed, kGlmXi);
    auto atom_rng = substream(seed, kAtoms);
    auto noise_rng = substream(seed, kNoise);

    data.X = dims.n > 0 ? sample_inputs(dims.n, dims.d, x_rng) : Matrix(0, static_cast<Eigen::Index>(dims.d));
    data.nn.a = normal_vector(dims.p, a_rng);
    data.nn.W = Matrix(static_cast<Eigen::Index>(dims.p), static_cast<Eigen::Index>(dims.d));
    {
        NormalSource normal(w_rng);
        for (Eigen::Index i = 0; i < data.nn.W.rows(); ++i)
            for (Eigen::Index j = 0; j < data.nn.W.cols(); ++j) data.nn.W(i, j) = normal();
    }
    if (coupling == TeacherCoupling::shared)
        data.glm.v = data.nn.W.transpose() * data.nn.a / data.nn.a.norm();
    else
        data.glm.v = normal_vector(dims.d, v_rng);
    data.glm.xi = normal_vector(dims.n, xi_rng);
    data.aux = draw_latents(model.kernel(), dims.n, atom_rng, noise_rng);

    data.Y.resize(static_cast<Eigen::Index>(dims.n));
    for (std::size_t mu = 0; mu < dims.n; ++mu) {
        const auto row = static_cast<Eigen::Index>(mu);
        const double s = preactivation_interp(data.nn, data.glm, data.X.row(row).transpose(), mu, t,
                                              model.activation(), model.equiv());
        data.Y(row) = model.kernel().respond(s, data.aux.atom[mu], data.aux.noise(row));
    }
    return data;
}

Dataset gen_dataset(const ModelSpec& model, double t, Rng& rng) { return gen_dataset(model, t, rng()); }

Dataset retime(const Dataset& data, const ModelSpec& model, double t) {
    check_t(t);
    Dataset out = data;
    out.t = t;
    for (Eigen::Index mu = 0; mu < out.X.rows(); ++mu) {
        const double s = preactivation_interp(out.nn, out.glm, out.X.row(mu).transpose(), static_cast<std::size_t>(mu),
                                              t, model.activation(), model.equiv());
        out.Y(mu) = model.kernel().respond(s, out.aux.atom[static_cast<std::size_t>(mu)], out.aux.noise(mu));
    }
    return out;
}

Vector teacher_preactivations(const Dataset& data, const ModelSpec& model) {
    Vector s(data.X.rows());
    for (Eigen::Index mu = 0; mu < data.X.rows(); ++mu)
        s(mu) = preactivation_interp(data.nn, data.glm, data.X.row(mu).transpose(), static_cast<std::size_t>(mu),
                                     data.t, model.activation(), model.equiv());
    return s;
}

std::size_t side_info_rows(std::size_t n, double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("side-information fraction eta must be > 0");
    return static_cast<std::size_t>(std::ceil(static_cast<double>(n) * eta - 1e-12));
}

SideInfo gen_side_info(const Dataset& data, const ModelSpec& model, double lambda, double eta, std::uint64_t seed) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("side-information SNR lambda must be >= 0");
    const std::size_t m = side_info_rows(data.dims.n, eta);
    SideInfo side;
    side.lambda = lambda;
    side.eta = eta;
    auto x_rng = substream(seed, kSideInputs);
    auto xi_rng = substream(seed, kSideXi);
    auto atom_rng = substream(seed, kSideAtoms);
    auto noise_rng = substream(seed, kSideNoise);
    auto tilde_rng = substream(seed, kSideTilde);
    side.X_new = m > 0 ? sample_inputs(m, data.dims.d, x_rng) : Matrix(0, static_cast<Eigen::Index>(data.dims.d));
    side.xi_new = normal_vector(m, xi_rng);
    side.aux = draw_latents(model.kernel(), m, atom_rng, noise_rng);
    side.tilde_noise = normal_vector(m, tilde_rng);

    TeacherGLM fresh{data.glm.v, side.xi_new};
    side.Y_prime.resize(static_cast<Eigen::Index>(m));
    for (std::size_t nu = 0; nu < m; ++nu) {
        const auto row = static_cast<Eigen::Index>(nu);
        const double s = preactivation_interp(data.nn, fresh, side.X_new.row(row).transpose(), nu, data.t,
                                              model.activation(), model.equiv());
        side.Y_prime(row) = model.kernel().respond(s, side.aux.atom[nu], side.aux.noise(row));
    }
    side.Y_tilde = std::sqrt(lambda) * side.Y_prime + side.tilde_noise;
    return side;
}

SideInfo with_lambda(const SideInfo& side, double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("side-information SNR lambda must be >= 0");
    SideInfo out = side;
    out.lambda = lambda;
    out.Y_tilde = std::sqrt(lambda) * side.Y_prime + side.tilde_noise;
    return out;
}

}  // namespace gelab
