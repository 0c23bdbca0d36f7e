#include "gelab/runner.hpp"

#include "gelab/estimators.hpp"
#include "gelab/version.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace gelab {

namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex(std::uint64_t x) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

std::string dims_name(const Dims& d) {
    return "d" + std::to_string(d.d) + "_p" + std::to_string(d.p) + "_n" + std::to_string(d.n);
}

struct JobOutput {
    std::vector<Estimate> estimates;
    bool has_report = false;
    SuiteReport report;
};

struct Job {
    std::string name;
    std::function<JobOutput(std::uint64_t seed)> body;
};

JobOutput estimates_only(std::vector<Estimate> rows) {
    JobOutput out;
    out.estimates = std::move(rows);
    return out;
}

JobOutput from_report(SuiteReport report) {
    JobOutput out;
    out.estimates = report.estimates;
    out.report = std::move(report);
    out.has_report = true;
    return out;
}

bool is_estimator(const std::string& s) {
    return s == "free_entropy" || s == "mutual_information" || s == "gen_error" || s == "gen_error_proxy" ||
           s == "side_information_mi" || s == "immse" || s == "derivative_terms" || s == "derivative_check" ||
           s == "conditional_entropy" || s == "psi_nn" || s == "psi_glm" || s == "psi_limit";
}

std::vector<Job> expand_jobs(const ExperimentConfig& cfg) {
    std::vector<Job> jobs;
    const std::vector<Dims> grid = cfg.dims_grid();
    const SamplerConfig sampler = cfg.sampler;
    for (const std::string& suite : cfg.suites) {
        if (is_estimator(suite)) {
            for (const Dims& dims : grid) {
                const ModelSpec model = cfg.model(dims);
                if (suite.rfind("psi_", 0) == 0) {
                    const PsiMode mode = parse_psi_mode(suite.substr(4));
                    jobs.push_back({suite + "_" + dims_name(dims), [=, &cfg](std::uint64_t seed) {
                                        return estimates_only({psi_term(model, mode, cfg.psi_M, seed)});
                                    }});
                    continue;
                }
                for (double t : cfg.t) {
                    const std::string base = suite + "_" + dims_name(dims) + "_t" + num(t);
                    if (suite == "free_entropy") {
                        jobs.push_back({base, [=, &cfg](std::uint64_t seed) {
                                            return estimates_only({free_entropy(model, t, cfg.n_outer, sampler, seed)});
                                        }});
                    } else if (suite == "mutual_information") {
                        jobs.push_back({base, [=, &cfg](std::uint64_t seed) {
                                            return estimates_only(
                                                {mutual_information(model, t, cfg.n_outer, sampler, cfg.psi_M, seed)});
                                        }});
                    } else if (suite == "gen_error") {
                        jobs.push_back({base, [=, &cfg](std::uint64_t seed) {
                                            return estimates_only(
                                                {gen_error(model, t, cfg.n_outer, cfg.n_test, sampler, seed)});
                                        }});
                    } else if (suite == "conditional_entropy") {
                        jobs.push_back({base, [=, &cfg](std::uint64_t seed) {
                                            return estimates_only({conditional_entropy_term(model, t, cfg.psi_M, seed)});
                                        }});
                    } else if (suite == "derivative_terms") {
                        jobs.push_back({base, [=, &cfg](std::uint64_t seed) {
                                            const DerivativeTerms d =
                                                interp_derivative_terms(model, t, cfg.n_outer, sampler.M, seed);
                                            return estimates_only({d.A1, d.A2, d.A3, d.B, d.total});
                                        }});
                    } else if (suite == "derivative_check") {
                        jobs.push_back({base, [=, &cfg](std::uint64_t seed) {
                                            const DerivativeCheck c =
                                                derivative_check(model, t, cfg.fd_step, cfg.n_outer, sampler.M, seed);
                                            SuiteReport r;
                                            r.suite = "derivative_check";
                                            r.estimates = {c.terms.A1, c.terms.A2, c.terms.A3, c.terms.B,
                                                           c.terms.total, c.finite_difference, c.difference};
                                            r.expect_zero("derivative/B_is_zero", c.terms.B.value, c.terms.B.se);
                                            r.expect_zero("derivative/terms_match_finite_difference",
                                                          c.difference.value, c.difference.se);
                                            return from_report(std::move(r));
                                        }});
                    } else {
                        for (double lambda : cfg.lambda)
                            for (double eta : cfg.eta) {
                                const std::string name = base + "_l" + num(lambda) + "_e" + num(eta);
                                if (suite == "gen_error_proxy") {
                                    jobs.push_back({name, [=, &cfg](std::uint64_t seed) {
                                                        return estimates_only({gen_error_proxy(
                                                            model, t, lambda, eta, cfg.n_outer, sampler.M, seed)});
                                                    }});
                                } else if (suite == "side_information_mi") {
                                    jobs.push_back({name, [=, &cfg](std::uint64_t seed) {
                                                        return estimates_only({side_information_mi(
                                                            model, t, lambda, eta, cfg.n_outer, sampler.M, seed)});
                                                    }});
                                } else {
                                    jobs.push_back({name, [=, &cfg](std::uint64_t seed) {
                                                        const ImmseReport rep =
                                                            immse_check(model, t, lambda, eta, cfg.n_outer, sampler.M, seed);
                                                        SuiteReport r;
                                                        r.suite = "immse";
                                                        r.estimates = {rep.derivative, rep.rhs, rep.difference};
                                                        r.expect_zero("immse/derivative_matches_half_eta_error",
                                                                      rep.difference.value, rep.difference.se);
                                                        return from_report(std::move(r));
                                                    }});
                                }
                            }
                    }
                }
            }
            continue;
        }
        const ModelSpec first = cfg.model(grid.front());
        if (suite == "nishimori") {
            jobs.push_back({suite, [=, &cfg](std::uint64_t seed) {
                                NishimoriConfig nc;
                                nc.sizes = grid;
                                nc.times = cfg.t;
                                nc.datasets = cfg.datasets;
                                nc.M = sampler.M;
                                nc.pairs = cfg.pairs;
                                return from_report(nishimori_suite(first, nc, seed));
                            }});
        } else if (suite == "pout_properties") {
            jobs.push_back({suite, [=](std::uint64_t seed) {
                                return from_report(pout_property_suite(first, sampler.M, seed));
                            }});
        } else if (suite == "approximations") {
            jobs.push_back({suite, [=, &cfg](std::uint64_t seed) {
                                ApproximationConfig ac;
                                ac.d_grid = cfg.d;
                                ac.pairs = std::max<std::size_t>(1, cfg.pairs);
                                ac.M = cfg.approx_M;
                                return from_report(approximation_suite(first.activation(), ac, seed));
                            }});
        } else if (suite == "epsilon_cancellation") {
            jobs.push_back({suite, [=, &cfg](std::uint64_t seed) {
                                CancellationConfig cc;
                                cc.d_grid = cfg.d;
                                cc.p = cfg.cancellation_p;
                                cc.M = cfg.cancellation_M;
                                return from_report(epsilon_cancellation_check(first.activation(), cc, seed));
                            }});
        } else if (suite == "concentration") {
            jobs.push_back({suite, [=, &cfg](std::uint64_t seed) {
                                ConcentrationConfig cc;
                                cc.grid = grid;
                                cc.t = cfg.t.front();
                                cc.groups = cfg.groups;
                                cc.per_group = cfg.per_group;
                                cc.M = sampler.M;
                                return from_report(concentration_check(first, cc, seed));
                            }});
        } else if (suite == "theorem1" || suite == "theorem2") {
            jobs.push_back({suite, [=, &cfg](std::uint64_t seed) {
                                GapScanConfig gc;
                                gc.sequence = grid;
                                gc.n_outer = cfg.n_outer;
                                gc.M = sampler.M;
                                gc.n_test = cfg.n_test;
                                return from_report(suite == "theorem1" ? theorem1_gap_scan(first, gc, seed)
                                                                       : theorem2_gap_scan(first, gc, seed));
                            }});
        } else {
            throw std::invalid_argument("unknown suite '" + suite + "'");
        }
    }
    return jobs;
}

}  // namespace

std::string RunManifest::hash() const {
    std::string text = config_hash + "\n" + version + "\n" + std::to_string(master_seed) + "\n";
    for (const JobRecord& job : jobs) text += job.name + " " + std::to_string(job.seed) + "\n";
    return hex(fnv1a(text));
}

int RunManifest::exit_code() const {
    for (const JobRecord& job : jobs)
        if (!job.ok || !job.passed) return 1;
    return 0;
}

void write_atomic(const std::string& path, const std::string& content) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

RunManifest run(const ExperimentConfig& config) {
    RunManifest manifest;
    manifest.config_hash = gelab::config_hash(config);
    manifest.version = version_stamp();
    manifest.master_seed = config.seed;

    const std::vector<Job> jobs = expand_jobs(config);
    for (std::size_t i = 0; i < jobs.size(); ++i)
    {
        JobRecord rec;
        rec.name = jobs[i].name;
        rec.seed = derive_seed(config.seed, i);
        manifest.jobs.push_back(std::move(rec));
    }
    const std::string mhash = manifest.hash();
    const fs::path out_dir(config.output_dir);
    fs::create_directories(out_dir);

    auto header = [&](const JobRecord& rec) {
        return "# gelab " + manifest.version + "\n# manifest " + mhash + "\n# job " + rec.name + " seed " +
               std::to_string(rec.seed) + "\n";
    };

    for (std::size_t i = 0; i < jobs.size(); ++i) {
        JobRecord& rec = manifest.jobs[i];
        const auto start = std::chrono::steady_clock::now();
        try {
            const JobOutput result = jobs[i].body(rec.seed);
            std::ostringstream csv;
            csv << header(rec) << estimate_csv_header() << '\n';
            for (const Estimate& e : result.estimates) csv << estimate_csv_row(e) << '\n';
            write_atomic((out_dir / (rec.name + ".csv")).string(), csv.str());
            if (result.has_report) {
                rec.passed = result.report.passed();
                write_atomic((out_dir / (rec.name + ".summary.txt")).string(),
                             header(rec) + report_summary(result.report));
            }
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }

    // Timings stay out of the files so that reruns are byte-identical.
    std::ostringstream m;
    m << "config_hash " << manifest.config_hash << "\nversion " << manifest.version << "\nmanifest " << mhash
      << "\nseed " << manifest.master_seed << "\njobs " << manifest.jobs.size() << "\n";
    for (const JobRecord& rec : manifest.jobs) {
        m << rec.name << " seed=" << rec.seed << " status=" << (!rec.ok ? "error" : rec.passed ? "ok" : "failed");
        if (!rec.ok) m << " error=\"" << rec.error << "\"";
        m << "\n";
    }
    write_atomic((out_dir / "manifest.txt").string(), m.str());
    write_atomic((out_dir / "config.txt").string(), serialize_config(config));
    return manifest;
}

}  // namespace gelab
