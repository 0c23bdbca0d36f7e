#include "gelab/data_gen.hpp"
#include "gelab/dataset_io.hpp"

#include "gelab/stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace gelab;

namespace {

ModelSpec small_model(std::size_t d = 8, std::size_t p = 6, std::size_t n = 5) {
    return ModelSpec(Activation(ActivationKind::tanh), Readout::sign_mixture(ReadoutShape::tanh, 0.4), 0.5, {d, p, n});
}

}  // namespace

TEST_CASE("same seed gives the same dataset") {
    const ModelSpec m = small_model();
    const Dataset a = gen_dataset(m, 0.3, 42);
    const Dataset b = gen_dataset(m, 0.3, 42);
    CHECK(a.X == b.X);
    CHECK(a.Y == b.Y);
    CHECK(a.nn.W == b.nn.W);
    CHECK(a.aux.atom == b.aux.atom);
    const Dataset c = gen_dataset(m, 0.3, 43);
    CHECK(a.Y != c.Y);
}

TEST_CASE("latents are pinned across t and retime reproduces generation") {
    const ModelSpec m = small_model();
    const Dataset d0 = gen_dataset(m, 0.0, 7);
    const Dataset d1 = gen_dataset(m, 1.0, 7);
    CHECK(d0.X == d1.X);
    CHECK(d0.nn.a == d1.nn.a);
    CHECK(d0.glm.xi == d1.glm.xi);
    const Dataset r = retime(d0, m, 1.0);
    CHECK((r.Y - d1.Y).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(r.t == 1.0);
}

TEST_CASE("responses are channel maps of the interpolated pre-activation") {
    const ModelSpec m = small_model();
    const double t = 0.6;
    const Dataset data = gen_dataset(m, t, 19);
    const Vector s = teacher_preactivations(data, m);
    for (Eigen::Index mu = 0; mu < data.X.rows(); ++mu) {
        const Vector x = data.X.row(mu).transpose();
        const double s_nn = preactivation_nn(data.nn, x, m.activation());
        const double s_lin = linear_projection(data.glm.v, x);
        const double expect = std::sqrt(1 - t) * s_nn + std::sqrt(t) * m.equiv().rho * s_lin +
                              std::sqrt(t * m.equiv().epsilon) * data.glm.xi(mu);
        CHECK(s(mu) == doctest::Approx(expect).epsilon(1e-13));
        CHECK(data.Y(mu) == doctest::Approx(m.kernel().respond(s(mu), data.aux.atom[mu], data.aux.noise(mu))));
    }
}

TEST_CASE("t outside [0, 1] is rejected") {
    const ModelSpec m = small_model();
    CHECK_THROWS(gen_dataset(m, -0.1, 1));
    CHECK_THROWS(gen_dataset(m, 1.5, 1));
}

TEST_CASE("shared coupling sets v to the normalized readout projection") {
    const ModelSpec m = small_model();
    const Dataset data = gen_dataset(m, 0.0, 5, TeacherCoupling::shared);
    const Vector v = data.nn.W.transpose() * data.nn.a / data.nn.a.norm();
    CHECK((v - data.glm.v).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("shared linear teacher is standard normal") {
    // v = W^T a / |a| with W standard normal and a independent: each coordinate
    // is exactly N(0, 1).
    const ModelSpec m = small_model(4, 3, 1);
    std::vector<double> xs;
    for (std::uint64_t s = 0; s < 3000; ++s) xs.push_back(gen_dataset(m, 0.0, s, TeacherCoupling::shared).glm.v(0));
    CHECK(ks_pvalue(ks_statistic(xs, normal_cdf), xs.size()) > 1e-3);
}

TEST_CASE("pre-activation has the Gaussian-equivalent variance at t = 1") {
    // s = rho g + sqrt(eps) xi with g ~ N(0, |x|^2/d) given x; marginally
    // Var s ~ rho^2 + eps = E phi^2.
    const ModelSpec m = small_model(16, 16, 1);
    double s2 = 0;
    const int N = 20000;
    for (int i = 0; i < N; ++i) {
        const Dataset data = gen_dataset(m, 1.0, static_cast<std::uint64_t>(i));
        const double s = teacher_preactivations(data, m)(0);
        s2 += s * s;
    }
    const double expected = m.equiv().rho * m.equiv().rho + m.equiv().epsilon;
    CHECK(s2 / N == doctest::Approx(expected).epsilon(0.04));
}

TEST_CASE("side information rows") {
    const ModelSpec m = small_model();
    const Dataset data = gen_dataset(m, 0.5, 3);
    CHECK(side_info_rows(5, 1.0) == 5);
    CHECK(side_info_rows(5, 0.5) == 3);
    const SideInfo side = gen_side_info(data, m, 0.8, 1.0, 11);
    CHECK(side.X_new.rows() == 5);
    const Vector expect = std::sqrt(0.8) * side.Y_prime + side.tilde_noise;
    CHECK((side.Y_tilde - expect).cwiseAbs().maxCoeff() < 1e-13);
    const SideInfo other = with_lambda(side, 2.0);
    CHECK(other.Y_prime == side.Y_prime);
    CHECK((other.Y_tilde - (std::sqrt(2.0) * side.Y_prime + side.tilde_noise)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("dataset text round trip is exact") {
    const ModelSpec m = small_model();
    const Dataset data = gen_dataset(m, 0.25, 99);
    const Dataset back = dataset_from_string(dataset_to_string(data));
    CHECK(back.dims == data.dims);
    CHECK(back.t == data.t);
    CHECK(back.seed == data.seed);
    CHECK(back.X == data.X);
    CHECK(back.Y == data.Y);
    CHECK(back.nn.a == data.nn.a);
    CHECK(back.nn.W == data.nn.W);
    CHECK(back.glm.v == data.glm.v);
    CHECK(back.glm.xi == data.glm.xi);
    CHECK(back.aux.atom == data.aux.atom);
    CHECK(back.aux.noise == data.aux.noise);
    CHECK_THROWS(dataset_from_string("1,2,3\nX\n"));
}
