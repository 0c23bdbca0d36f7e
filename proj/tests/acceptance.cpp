// Runs the twelve acceptance checks at their stated sizes and tolerances.
// Usage: acceptance [criterion numbers...]   (no arguments: all of them)

#include "gelab/config.hpp"
#include "gelab/equivalence.hpp"
#include "gelab/estimators.hpp"
#include "gelab/parallel.hpp"
#include "gelab/posterior.hpp"
#include "gelab/runner.hpp"
#include "gelab/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace gelab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// Prints failed assertions and notes so a failing line can be diagnosed from the log.
Outcome from_report(const SuiteReport& r, std::string detail) {
    for (const Assertion& a : r.assertions)
        if (!a.pass)
            std::printf("    fail %s stat=%.6g se=%.3g threshold=%.3g\n", a.id.c_str(), a.statistic, a.se, a.threshold);
    for (const std::string& n : r.notes) std::printf("    note %s\n", n.c_str());
    for (const ScalingPoint& p : r.points)
        std::printf("    point d=%zu p=%zu n=%zu kappa=%.4g gap=%.5g se=%.2g\n", p.coords.d, p.coords.p, p.coords.n,
                    p.kappa, p.gap.value, p.gap.se);
    std::size_t passed = 0;
    for (const Assertion& a : r.assertions) passed += a.pass ? 1 : 0;
    detail += (detail.empty() ? "" : ", ") + std::to_string(passed) + "/" + std::to_string(r.assertions.size()) +
              " assertions";
    return {r.passed() && !r.assertions.empty(), detail};
}

ModelSpec tanh_model(Dims dims, double delta = 1.0) {
    return ModelSpec(Activation(ActivationKind::tanh), Readout::deterministic(ReadoutShape::tanh), delta, dims);
}

Outcome constants() {
    const Activation sine(ActivationKind::sine);
    const double rho = compute_rho(sine);
    const double eps = compute_epsilon(sine);
    const double rho_err = std::abs(rho - std::exp(-0.5));
    const double eps_err = std::abs(eps - ((1 - std::exp(-2.0)) / 2 - std::exp(-1.0)));
    return {rho_err < 1e-10 && eps_err < 1e-10, "rho err " + fmt("%.2e", rho_err) + ", eps err " + fmt("%.2e", eps_err)};
}

Outcome gradient() {
    // Fourth-order central stencil; the error is measured relative to
    // max(|g|, 1) so that entries near zero do not blow up the ratio.
    const Dims dims{5, 4, 6};
    const ModelSpec m(Activation(ActivationKind::tanh), Readout::sign_mixture(ReadoutShape::tanh, 0.3), 0.5, dims);
    double worst[4] = {0, 0, 0, 0};
    for (double t : {0.0, 0.5, 1.0})
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Dataset data = gen_dataset(m, t, seed);
            const LogTarget target(m, data, t);
            Rng rng(derive_seed(seed, 99));
            const ParamPoint theta = ParamPoint::prior(dims, target.rows(), rng);
            const Vector g = grad_log_posterior(target, theta).flatten();
            const Vector x = theta.flatten();
            auto f = [&](const Vector& y) {
                return log_posterior_unnorm(target, ParamPoint::unflatten(y, dims, target.rows()));
            };
            const double h = 1e-3;
            const Eigen::Index sizes[4] = {4, 20, 5, 6};
            Eigen::Index start = 0;
            for (int b = 0; b < 4; ++b) {
                for (Eigen::Index i = start; i < start + sizes[b]; ++i) {
                    Vector y = x;
                    auto at = [&](double s) {
                        y(i) = x(i) + s * h;
                        return f(y);
                    };
                    const double fd = (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * h);
                    worst[b] = std::max(worst[b], std::abs(g(i) - fd) / std::max(std::abs(fd), 1.0));
                }
                start += sizes[b];
            }
        }
    const double w = *std::max_element(worst, worst + 4);
    return {w < 1e-6, "max rel err a " + fmt("%.1e", worst[0]) + " W " + fmt("%.1e", worst[1]) + " v " +
                          fmt("%.1e", worst[2]) + " xi " + fmt("%.1e", worst[3])};
}

Outcome pout() {
    SuiteReport all;
    for (const ModelSpec& m : {tanh_model({4, 4, 4}, 0.5),
                               ModelSpec(Activation(ActivationKind::tanh),
                                         Readout::sign_mixture(ReadoutShape::tanh, 0.3), 0.5, {4, 4, 4})}) {
        const SuiteReport r = pout_property_suite(m, 100000, 3);
        all.assertions.insert(all.assertions.end(), r.assertions.begin(), r.assertions.end());
    }
    return from_report(all, "tanh and sign-tanh readouts");
}

Outcome nishimori() {
    NishimoriConfig cfg;
    cfg.sizes = {{6, 4, 6}};
    cfg.times = {0.0, 0.5, 1.0};
    cfg.datasets = 200;
    cfg.M = 200000;
    return from_report(nishimori_suite(tanh_model({6, 4, 6}), cfg, 4), "");
}

Outcome b_term() {
    const DerivativeCheck c = derivative_check(tanh_model({4, 3, 4}), 0.5, 0.05, 400, 20000, 5);
    SuiteReport r;
    r.expect_zero("B", c.terms.B.value, c.terms.B.se);
    r.expect_zero("terms_minus_finite_difference", c.difference.value, c.difference.se);
    return from_report(r, "B = " + fmt("%.4g", c.terms.B.value) + " +- " + fmt("%.2g", c.terms.B.se) +
                              ", terms - fd = " + fmt("%.4g", c.difference.value) + " +- " +
                              fmt("%.2g", c.difference.se));
}

Outcome approximations() {
    ApproximationConfig cfg;
    cfg.d_grid = {16, 64, 256};
    cfg.M = 1000000;
    return from_report(approximation_suite(Activation(ActivationKind::tanh), cfg, 6), "");
}

Outcome cancellation() {
    CancellationConfig cfg;
    cfg.d_grid = {16, 64, 256};
    cfg.p = 1024;
    cfg.M = 20000;
    return from_report(epsilon_cancellation_check(Activation(ActivationKind::tanh), cfg, 7), "");
}

Outcome concentration() {
    ConcentrationConfig cfg;
    for (std::size_t d : {64, 128, 256})
        for (std::size_t n : {2, 4, 8}) cfg.grid.push_back({d, d, n});
    cfg.t = 0.5;
    cfg.groups = 40;
    cfg.per_group = 5;
    cfg.M = 5000;
    return from_report(concentration_check(tanh_model({64, 64, 2}), cfg, 8), "");
}

GapScanConfig gap_config() {
    GapScanConfig cfg;
    cfg.sequence = {{16, 16, 4}, {64, 64, 4}, {256, 256, 4}};
    cfg.n_outer = 400;
    cfg.M = 10000;
    cfg.n_test = 20;
    return cfg;
}

Outcome theorem1() { return from_report(theorem1_gap_scan(tanh_model({16, 16, 4}), gap_config(), 9), ""); }

Outcome theorem2() {
    SuiteReport all = theorem2_gap_scan(tanh_model({16, 16, 4}), gap_config(), 10);
    // The null-model answers are exact for any number of draws, so a smaller
    // run suffices there.
    const ModelSpec null(Activation(ActivationKind::tanh), Readout::zero(), 1.0, {16, 16, 4});
    GapScanConfig small = gap_config();
    small.n_outer = 100;
    small.M = 2000;
    const SuiteReport z = theorem2_gap_scan(null, small, 11);
    all.assertions.insert(all.assertions.end(), z.assertions.begin(), z.assertions.end());
    all.notes.insert(all.notes.end(), z.notes.begin(), z.notes.end());
    return from_report(all, "tanh and null readouts");
}

Outcome immse() {
    const ImmseReport r = immse_check(tanh_model({3, 3, 3}), 0.0, 0.5, 1.0, 2000, 20000, 12);
    SuiteReport s;
    s.expect_zero("derivative_minus_half_eta_error", r.difference.value, r.difference.se);
    return from_report(s, "dI/dlambda = " + fmt("%.5g", r.derivative.value) + ", (eta/2) E = " +
                              fmt("%.5g", r.rhs.value) + ", diff = " + fmt("%.3g", r.difference.value) + " +- " +
                              fmt("%.2g", r.difference.se));
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        files[e.path().filename().string()] = ss.str();
    }
    return files;
}

Outcome reproducibility() {
    ExperimentConfig cfg = parse_config(R"([model]
activation = tanh
readout = tanh
delta = 1
[sizes]
d = 8, 16
n = 4
t = 0.5
[sampler]
M = 10000
n_outer = 8
n_test = 5
[suite]
datasets = 10
pairs = 50
psi_M = 2000
[run]
suites = free_entropy, gen_error, mutual_information, psi_glm, derivative_terms, pout_properties, nishimori
seed = 2024
)");
    const fs::path base = fs::temp_directory_path() / "gelab_acceptance_repro";
    fs::remove_all(base);
    std::vector<std::map<std::string, std::string>> runs;
    std::size_t jobs = 0;
    for (const char* sub : {"a", "b"}) {
        cfg.output_dir = (base / sub).string();
        jobs = run(cfg).jobs.size();
        runs.push_back(read_dir(base / sub));
    }
    std::size_t csvs = 0, differing = 0;
    for (const auto& [name, text] : runs[0]) {
        if (name.size() < 4 || name.substr(name.size() - 4) != ".csv") continue;
        ++csvs;
        const auto it = runs[1].find(name);
        if (it == runs[1].end() || it->second != text) ++differing;
    }
    fs::remove_all(base);
    return {csvs == jobs && csvs > 0 && differing == 0 && runs[0].size() == runs[1].size(),
            std::to_string(csvs) + " CSVs, " + std::to_string(differing) + " differ"};
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    set_worker_count(std::max(1u, std::thread::hardware_concurrency()));
    const std::vector<Criterion> criteria = {
        {1, "constants", 1, constants},
        {2, "gradient", 10, gradient},
        {3, "pout_properties", 60, pout},
        {4, "nishimori", 1800, nishimori},
        {5, "b_term", 1800, b_term},
        {6, "approximations", 1200, approximations},
        {7, "epsilon_cancellation", 600, cancellation},
        {8, "concentration", 3600, concentration},
        {9, "theorem1_gap", 7200, theorem1},
        {10, "theorem2_gap", 7200, theorem2},
        {11, "immse", 1800, immse},
        {12, "reproducibility", 300, reproducibility},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

    int failures = 0;
    for (const Criterion& c : criteria) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        std::printf("criterion %2d %s: running\n", c.id, c.name);
        std::fflush(stdout);
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.budget_seconds;
        const bool ok = out.pass && in_time;
        if (!ok) ++failures;
        std::printf("criterion %2d %-20s %s  (%s; %.1fs of %.0fs budget%s)\n", c.id, c.name, ok ? "PASS" : "FAIL",
                    out.detail.c_str(), secs, c.budget_seconds, in_time ? "" : ", over budget");
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
