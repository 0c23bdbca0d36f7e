#include "gelab/output_kernel.hpp"

#include "gelab/diagnostics.hpp"
#include "gelab/quadrature.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>
#include <limits>

namespace gelab {

PoutDerivative parse_pout_derivative(std::string_view tag) {
    if (tag == "y") return PoutDerivative::y;
    if (tag == "x") return PoutDerivative::x;
    if (tag == "yy") return PoutDerivative::yy;
    if (tag == "yx" || tag == "xy") return PoutDerivative::yx;
    if (tag == "xx") return PoutDerivative::xx;
    throw std::invalid_argument("unsupported P_out derivative tag '" + std::string(tag) +
                                "' (expected y, x, yy, yx or xx)");
}

OutputKernel::OutputKernel(Readout readout, double delta, bool allow_violation)
    : readout_(std::move(readout)),
      delta_(delta),
      log_norm_(-0.5 * std::log(2.0 * std::numbers::pi * delta)),
      allow_violation_(allow_violation) {
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw std::invalid_argument("noise variance delta must satisfy delta > 0");
    if (!readout_.satisfies_a2()) {
        if (!allow_violation)
            throw std::invalid_argument("readout '" + readout_.name() +
                                        "' is unbounded; pass the assumption-violation flag to use it");
        warn("readout '" + readout_.name() +
             "' violates the bounded-readout assumption; results are outside the theory's scope");
    }
}

template <class Visit>
double OutputKernel::bracket(double y, double x, Visit&& visit) const {
    const auto& atoms = readout_.support();
    const std::size_t k = atoms.size();
    if (k == 1) {
        const double r = y - readout_.value(x, 0);
        visit(std::size_t{0}, 1.0, r);
        return -r * r / (2.0 * delta_);
    }
    // Small fixed buffer covers every readout built by the library.
    std::array<double, 8> small_lw{};
    std::array<double, 8> small_r{};
    std::vector<double> big_lw, big_r;
    double* lw = small_lw.data();
    double* rs = small_r.data();
    if (k > small_lw.size()) {
        big_lw.resize(k);
        big_r.resize(k);
        lw = big_lw.data();
        rs = big_r.data();
    }
    double max_lw = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < k; ++a) {
        rs[a] = y - readout_.value(x, a);
        lw[a] = std::log(atoms[a].prob) - rs[a] * rs[a] / (2.0 * delta_);
        max_lw = std::max(max_lw, lw[a]);
    }
    double total = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
        lw[a] = std::exp(lw[a] - max_lw);
        total += lw[a];
    }
    for (std::size_t a = 0; a < k; ++a) visit(a, lw[a] / total, rs[a]);
    return max_lw + std::log(total);
}

double OutputKernel::log_density(double y, double x) const {
    return log_norm_ + bracket(y, x, [](std::size_t, double, double) {});
}

double OutputKernel::density(double y, double x) const { return std::exp(log_density(y, x)); }

double OutputKernel::log_density_and_prime(double y, double x, double& u1) const {
    double acc = 0.0;
    const double lse = bracket(y, x, [&](std::size_t a, double w, double r) {
        acc += w * r * readout_.deriv(x, a);
    });
    u1 = acc / delta_;
    return log_norm_ + lse;
}

double OutputKernel::u_prime(double y, double x) const {
    double u1 = 0.0;
    log_density_and_prime(y, x, u1);
    return u1;
}

KernelDerivs OutputKernel::derivs(double y, double x) const {
    double first = 0.0;
    double pxx = 0.0;
    const double lse = bracket(y, x, [&](std::size_t a, double w, double r) {
        const double f1 = readout_.deriv(x, a);
        const double f2 = readout_.deriv2(x, a);
        first += w * r * f1;
        pxx += w * ((r * r / (delta_ * delta_) - 1.0 / delta_) * f1 * f1 + r * f2 / delta_);
    });
    KernelDerivs out;
    out.u = log_norm_ + lse;
    out.u1 = first / delta_;
    out.uu = pxx;
    out.u2 = pxx - out.u1 * out.u1;
    return out;
}

double OutputKernel::u_double_prime(double y, double x) const { return derivs(y, x).u2; }

double OutputKernel::ratio(PoutDerivative which, double y, double x) const {
    double acc = 0.0;
    const double inv = 1.0 / delta_;
    bracket(y, x, [&](std::size_t a, double w, double r) {
        const double f1 = readout_.deriv(x, a);
        switch (which) {
        case PoutDerivative::y: acc += w * (-r * inv); break;
        case PoutDerivative::x: acc += w * r * f1 * inv; break;
        case PoutDerivative::yy: acc += w * (r * r * inv * inv); break;
        case PoutDerivative::yx: acc += w * (-r * r * f1 * inv * inv + f1 * inv); break;
        case PoutDerivative::xx:
            acc += w * ((r * r * inv * inv - inv) * f1 * f1 + r * readout_.deriv2(x, a) * inv);
            break;
        }
    });
    if (which == PoutDerivative::yy) acc -= inv;
    return acc;
}

double OutputKernel::conditional_mean(double x) const {
    double mean = 0.0;
    const auto& atoms = readout_.support();
    for (std::size_t a = 0; a < atoms.size(); ++a) mean += atoms[a].prob * readout_.value(x, a);
    return mean;
}

double OutputKernel::conditional_variance(double x) const {
    double mean = 0.0;
    double second = 0.0;
    const auto& atoms = readout_.support();
    for (std::size_t a = 0; a < atoms.size(); ++a) {
        const double f = readout_.value(x, a);
        mean += atoms[a].prob * f;
        second += atoms[a].prob * f * f;
    }
    return delta_ + second - mean * mean;
}

double OutputKernel::side_posterior_mean(double y_tilde, double x, double lambda) const {
    // Given A, (Y', Y~) is jointly Gaussian; mix over the atom posterior
    // pi_A proportional to P_A N(Y~; sqrt(lambda) f_A, lambda delta + 1).
    const double sl = std::sqrt(lambda);
    const double var = lambda * delta_ + 1.0;
    const auto& atoms = readout_.support();
    std::vector<double> lw(atoms.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < atoms.size(); ++a) {
        const double r = y_tilde - sl * readout_.value(x, a);
        lw[a] = std::log(atoms[a].prob) - r * r / (2.0 * var);
        top = std::max(top, lw[a]);
    }
    double total = 0.0;
    double acc = 0.0;
    for (std::size_t a = 0; a < atoms.size(); ++a) {
        const double w = std::exp(lw[a] - top);
        total += w;
        acc += w * (readout_.value(x, a) / delta_ + sl * y_tilde) / (1.0 / delta_ + lambda);
    }
    return acc / total;
}

double OutputKernel::expected_log_density(double x, int order) const {
    const GaussHermite& rule = gauss_hermite_rule(order);
    const auto& atoms = readout_.support();
    const double s = std::sqrt(delta_);
    double total = 0.0;
    for (std::size_t a = 0; a < atoms.size(); ++a) {
        const double f = readout_.value(x, a);
        total += atoms[a].prob * rule.expect([&](double z) { return log_density(f + s * z, x); });
    }
    return total;
}

std::size_t OutputKernel::atom_for_uniform(double u) const {
    const auto& atoms = readout_.support();
    double cum = 0.0;
    for (std::size_t a = 0; a + 1 < atoms.size(); ++a) {
        cum += atoms[a].prob;
        if (u < cum) return a;
    }
    return atoms.size() - 1;
}

double OutputKernel::respond(double x, std::size_t atom, double noise) const {
    return readout_.value(x, atom) + std::sqrt(delta_) * noise;
}

ChannelDraw OutputKernel::sample(double x, Rng& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    NormalSource normal(rng);
    ChannelDraw draw;
    draw.atom = atom_for_uniform(unif(rng));
    draw.noise = normal();
    draw.y = respond(x, draw.atom, draw.noise);
    return draw;
}

double OutputKernel::ratio_bound(PoutDerivative which) const {
    // |y - f(x;A)| <= R := 2B + sqrt(delta)|Z| for every atom A, then
    // |Z| <= (1 + Z^2)/2 and R^2 <= 8B^2 + 2 delta Z^2.
    const double b = readout_.bound();
    const double d = delta_;
    const double c_y = 2.0 * b / d + 0.5 / std::sqrt(d);
    const double c_yy = std::max(8.0 * b * b / (d * d) + 1.0 / d, 2.0 / d);
    switch (which) {
    case PoutDerivative::y: return c_y;
    case PoutDerivative::x: return b * c_y;
    case PoutDerivative::yy: return c_yy;
    case PoutDerivative::yx: return b * c_yy;
    case PoutDerivative::xx: return b * b * c_yy + b * c_y;
    }
    return 0.0;
}

namespace {

// E|Z|^k for k = 0..4, Z standard normal.
constexpr std::array<double, 5> kAbsNormalMoments = {
    1.0, 0.79788456080286535588, 1.0, 1.59576912160573071176, 3.0};

}  // namespace

double OutputKernel::u_prime_second_moment_bound() const {
    // |u'| <= B R / delta.
    const double b = readout_.bound();
    const double s = std::sqrt(delta_);
    const double er2 = 4.0 * b * b + 4.0 * b * s * kAbsNormalMoments[1] + delta_;
    return b * b * er2 / (delta_ * delta_);
}

double OutputKernel::uu_second_moment_bound() const {
    // |P^xx/P| <= c2 R^2 + c1 R + c0 with R = a + s|Z|; square and take moments.
    const double b = readout_.bound();
    const double s = std::sqrt(delta_);
    const double a = 2.0 * b;
    const double c2 = b * b / (delta_ * delta_);
    const double c1 = b / delta_;
    const double c0 = b * b / delta_;
    const std::array<double, 3> poly = {c2 * a * a + c1 * a + c0, 2.0 * c2 * a * s + c1 * s, c2 * s * s};
    double total = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i)
        for (std::size_t j = 0; j < poly.size(); ++j) total += poly[i] * poly[j] * kAbsNormalMoments[i + j];
    return total;
}

OutputKernel OutputKernel::side_channel(double lambda) const {
    if (!(lambda >= 0.0)) throw std::invalid_argument("side-information SNR lambda must be >= 0");
    return OutputKernel(readout_.scaled(std::sqrt(lambda)), lambda * delta_ + 1.0, allow_violation_);
}

}  // namespace gelab
