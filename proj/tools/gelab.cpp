#include "gelab/config.hpp"
#include "gelab/data_gen.hpp"
#include "gelab/dataset_io.hpp"
#include "gelab/equivalence.hpp"
#include "gelab/parallel.hpp"
#include "gelab/runner.hpp"
#include "gelab/version.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool need_config = true) {
    auto* opt = cmd->add_option("--config", c.config_path, "experiment configuration file");
    if (need_config) opt->required();
    cmd->add_option("--seed", c.seed, "master seed (overrides run.seed)");
    cmd->add_option("--workers", c.workers, "worker threads for independent replicas")->check(CLI::PositiveNumber);
    cmd->add_option("--out", c.out, "output directory (overrides run.output_dir)");
}

gelab::ExperimentConfig load(const Common& c) {
    gelab::ExperimentConfig cfg = gelab::load_config(c.config_path);
    if (c.seed) cfg.seed = *c.seed;
    if (!c.out.empty()) cfg.output_dir = c.out;
    return cfg;
}

int execute(gelab::ExperimentConfig cfg, const Common& c, const std::vector<std::string>& suites) {
    if (!suites.empty()) cfg.suites = suites;
    gelab::set_worker_count(c.workers);
    const gelab::RunManifest manifest = gelab::run(cfg);
    std::fprintf(stderr, "manifest %s (%zu jobs) -> %s\n", manifest.hash().c_str(), manifest.jobs.size(),
                 cfg.output_dir.c_str());
    for (const auto& job : manifest.jobs) {
        std::fprintf(stderr, "  %-60s %8.2fs %s\n", job.name.c_str(), job.seconds,
                     !job.ok ? "ERROR" : job.passed ? "ok" : "FAILED");
        if (!job.ok) std::fprintf(stderr, "    %s\n", job.error.c_str());
    }
    return manifest.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo checks of Gaussian equivalence for two-layer Bayesian networks"};
    app.set_version_flag("--version", gelab::version_stamp());
    app.require_subcommand(1);

    std::string activation = "tanh";
    int order = 0;
    auto* constants = app.add_subcommand("constants", "print rho, epsilon and E phi^2 for an activation");
    constants->add_option("activation", activation, "tanh, sine, scaled-erf or identity");
    constants->add_option("--order", order, "Gauss-Hermite order (0: refine until converged)");

    Common gen_opts;
    double gen_t = -1.0;
    std::string gen_file;
    auto* gen = app.add_subcommand("gen", "emit one dataset for the first size triplet of a config");
    add_common(gen, gen_opts);
    gen->add_option("--t", gen_t, "interpolation time (default: first sizes.t)");
    gen->add_option("--file", gen_file, "write here instead of stdout");

    Common est_opts;
    std::string quantity;
    auto* estimate = app.add_subcommand("estimate", "run one estimator over the config's size grid");
    estimate->add_option("quantity", quantity, "estimator name")->required();
    add_common(estimate, est_opts);

    Common ver_opts;
    std::string suite;
    auto* verify = app.add_subcommand("verify", "run one verification suite");
    verify->add_option("suite", suite, "suite name")->required();
    add_common(verify, ver_opts);

    Common scan_opts;
    std::string which;
    auto* scan = app.add_subcommand("scan", "equivalence gap scan along the config's size sequence");
    scan->add_option("which", which, "theorem1 or theorem2")->required()->check(CLI::IsMember({"theorem1", "theorem2"}));
    add_common(scan, scan_opts);

    Common run_opts;
    auto* run = app.add_subcommand("run", "run every suite listed in the config");
    add_common(run, run_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*constants) {
            const gelab::GaussEquivParams eq = gelab::gauss_equiv_params(gelab::Activation::parse(activation), order);
            std::printf("activation %s\nrho %.15g\nepsilon %.15g\nsecond_moment %.15g\n", activation.c_str(), eq.rho,
                        eq.epsilon, eq.second_moment);
            return 0;
        }
        if (*gen) {
            const gelab::ExperimentConfig cfg = load(gen_opts);
            const gelab::Dims dims = cfg.dims_grid().front();
            const double t = gen_t >= 0.0 ? gen_t : cfg.t.front();
            const gelab::Dataset data = gelab::gen_dataset(cfg.model(dims), t, cfg.seed);
            if (gen_file.empty()) {
                gelab::write_dataset(std::cout, data);
            } else {
                gelab::write_atomic(gen_file, gelab::dataset_to_string(data));
            }
            return 0;
        }
        if (*estimate) return execute(load(est_opts), est_opts, {quantity});
        if (*verify) return execute(load(ver_opts), ver_opts, {suite});
        if (*scan) return execute(load(scan_opts), scan_opts, {which});
        if (*run) return execute(load(run_opts), run_opts, {});
    } catch (const gelab::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
