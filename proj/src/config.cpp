#include "gelab/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace gelab {

namespace {

enum class Kind { text, real, count, seed, flag, reals, counts, words, atoms };

struct KeySpec {
    const char* section;
    const char* key;
    Kind kind;
    bool required;
};

constexpr KeySpec kKeys[] = {
    {"model", "activation", Kind::text, true},
    {"model", "readout", Kind::text, true},
    {"model", "aux_support", Kind::atoms, false},
    {"model", "delta", Kind::real, true},
    {"model", "allow_violation", Kind::flag, false},
    {"sizes", "d", Kind::counts, true},
    {"sizes", "p", Kind::counts, false},
    {"sizes", "n", Kind::counts, true},
    {"sizes", "t", Kind::reals, false},
    {"sizes", "lambda", Kind::reals, false},
    {"sizes", "eta", Kind::reals, false},
    {"sizes", "grid", Kind::text, false},
    {"sampler", "method", Kind::text, false},
    {"sampler", "M", Kind::count, false},
    {"sampler", "n_outer", Kind::count, false},
    {"sampler", "n_test", Kind::count, false},
    {"sampler", "resample", Kind::count, false},
    {"sampler", "step_size", Kind::real, false},
    {"sampler", "n_steps", Kind::count, false},
    {"sampler", "n_burn", Kind::count, false},
    {"sampler", "adapt_target", Kind::real, false},
    {"sampler", "thin", Kind::count, false},
    {"suite", "datasets", Kind::count, false},
    {"suite", "pairs", Kind::count, false},
    {"suite", "approx_M", Kind::count, false},
    {"suite", "cancellation_p", Kind::count, false},
    {"suite", "cancellation_M", Kind::count, false},
    {"suite", "groups", Kind::count, false},
    {"suite", "per_group", Kind::count, false},
    {"suite", "fd_step", Kind::real, false},
    {"suite", "psi_M", Kind::count, false},
    {"run", "suites", Kind::words, false},
    {"run", "seed", Kind::seed, false},
    {"run", "output_dir", Kind::text, false},
};

const char* kind_name(Kind kind) {
    switch (kind) {
    case Kind::text: return "a word";
    case Kind::real: return "a real number";
    case Kind::count: return "a non-negative integer";
    case Kind::seed: return "a 64-bit unsigned integer";
    case Kind::flag: return "true or false";
    case Kind::reals: return "a list of real numbers";
    case Kind::counts: return "a list of non-negative integers";
    case Kind::words: return "a list of names";
    case Kind::atoms: return "a list of scale:prob pairs";
    }
    return "?";
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    if (trim(value).empty()) return out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

bool to_real(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    errno = 0;
    out = std::strtod(s.c_str(), &end);
    return errno == 0 && end == s.c_str() + s.size() && std::isfinite(out);
}

bool to_u64(const std::string& s, std::uint64_t& out) {
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::string real_text(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F&& fmt) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += fmt(xs[i]);
    }
    return out;
}

struct Entry {
    std::string value;
    std::size_t line;
};

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::runtime_error([&] {
          std::string msg = "invalid configuration:";
          for (const auto& issue : issues) {
              msg += "\n  ";
              if (issue.line > 0) msg += "line " + std::to_string(issue.line) + ": ";
              msg += issue.message;
          }
          return msg;
      }()),
      issues_(std::move(issues)) {}

const std::vector<std::string>& known_suites() {
    static const std::vector<std::string> names = {
        "free_entropy",   "mutual_information", "gen_error",       "gen_error_proxy",
        "side_information_mi", "immse",         "derivative_terms", "derivative_check",
        "conditional_entropy", "psi_nn",        "psi_glm",          "psi_limit",
        "nishimori",      "pout_properties",    "approximations",   "epsilon_cancellation",
        "concentration",  "theorem1",           "theorem2",
    };
    return names;
}

std::vector<Dims> ExperimentConfig::dims_grid() const {
    const std::vector<std::size_t>& pp = p.empty() ? d : p;
    std::vector<Dims> out;
    if (product_grid) {
        for (std::size_t di : d)
            for (std::size_t pi : pp)
                for (std::size_t ni : n) out.push_back(Dims{di, pi, ni});
        return out;
    }
    const std::size_t len = std::max({d.size(), pp.size(), n.size()});
    auto at = [](const std::vector<std::size_t>& xs, std::size_t i) { return xs.size() == 1 ? xs[0] : xs[i]; };
    for (std::size_t i = 0; i < len; ++i) out.push_back(Dims{at(d, i), at(pp, i), at(n, i)});
    return out;
}

ModelSpec ExperimentConfig::model(const Dims& dims) const {
    Readout r = Readout::parse(readout);
    if (!aux_support.empty()) r = Readout(r.shape(), aux_support);
    return ModelSpec(Activation::parse(activation), r, delta, dims, allow_violation);
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    const auto& sa = a.sampler;
    const auto& sb = b.sampler;
    const bool sampler_eq = sa.kind == sb.kind && sa.M == sb.M && sa.resample == sb.resample &&
                            sa.chain.step_size == sb.chain.step_size && sa.chain.n_steps == sb.chain.n_steps &&
                            sa.chain.n_burn == sb.chain.n_burn && sa.chain.adapt_target == sb.chain.adapt_target &&
                            sa.chain.thin == sb.chain.thin;
    return sampler_eq && a.activation == b.activation && a.readout == b.readout && a.aux_support == b.aux_support &&
           a.delta == b.delta && a.allow_violation == b.allow_violation && a.d == b.d && a.p == b.p && a.n == b.n &&
           a.t == b.t && a.lambda == b.lambda && a.eta == b.eta && a.product_grid == b.product_grid &&
           a.n_outer == b.n_outer && a.n_test == b.n_test && a.datasets == b.datasets && a.pairs == b.pairs &&
           a.approx_M == b.approx_M && a.cancellation_p == b.cancellation_p &&
           a.cancellation_M == b.cancellation_M && a.groups == b.groups && a.per_group == b.per_group &&
           a.fd_step == b.fd_step && a.psi_M == b.psi_M && a.suites == b.suites && a.seed == b.seed &&
           a.output_dir == b.output_dir;
}

ExperimentConfig parse_config(const std::string& text) {
    std::vector<ConfigIssue> issues;
    std::map<std::string, Entry> entries;
    std::map<std::string, const KeySpec*> specs;
    for (const KeySpec& k : kKeys) specs[std::string(k.section) + "." + k.key] = &k;

    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                issues.push_back({lineno, "malformed section header '" + line + "'"});
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            const bool known = std::any_of(std::begin(kKeys), std::end(kKeys),
                                           [&](const KeySpec& k) { return section == k.section; });
            if (!known) issues.push_back({lineno, "unknown section [" + section + "]"});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            issues.push_back({lineno, "expected 'key = value', got '" + line + "'"});
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) {
            issues.push_back({lineno, "key '" + key + "' appears before any section"});
            continue;
        }
        const std::string full = section + "." + key;
        if (!specs.count(full)) {
            issues.push_back({lineno, "unknown key '" + key + "' in [" + section + "]"});
            continue;
        }
        const auto [it, inserted] = entries.emplace(full, Entry{value, lineno});
        if (!inserted)
            issues.push_back({lineno, "duplicate key " + full + " (lines " + std::to_string(it->second.line) + " and " +
                                          std::to_string(lineno) + ")"});
    }

    for (const KeySpec& k : kKeys) {
        const std::string full = std::string(k.section) + "." + k.key;
        if (k.required && !entries.count(full)) issues.push_back({0, "missing required key " + full});
    }

    ExperimentConfig cfg;
    auto type_error = [&](const std::string& full, const Entry& e) {
        issues.push_back({e.line, full + " must be " + kind_name(specs[full]->kind) + ", got '" + e.value + "'"});
    };
    auto get_text = [&](const std::string& full, std::string& out) {
        if (auto it = entries.find(full); it != entries.end()) {
            if (it->second.value.empty() || it->second.value.find(',') != std::string::npos)
                type_error(full, it->second);
            else
                out = it->second.value;
        }
    };
    auto get_real = [&](const std::string& full, double& out) {
        if (auto it = entries.find(full); it != entries.end())
            if (!to_real(it->second.value, out)) type_error(full, it->second);
    };
    auto get_count = [&](const std::string& full, std::size_t& out) {
        if (auto it = entries.find(full); it != entries.end()) {
            std::uint64_t v = 0;
            if (!to_u64(it->second.value, v))
                type_error(full, it->second);
            else
                out = static_cast<std::size_t>(v);
        }
    };
    auto get_flag = [&](const std::string& full, bool& out) {
        if (auto it = entries.find(full); it != entries.end()) {
            if (it->second.value == "true")
                out = true;
            else if (it->second.value == "false")
                out = false;
            else
                type_error(full, it->second);
        }
    };
    auto get_reals = [&](const std::string& full, std::vector<double>& out) {
        if (auto it = entries.find(full); it != entries.end()) {
            std::vector<double> xs;
            for (const auto& item : split_list(it->second.value)) {
                double x = 0.0;
                if (!to_real(item, x)) {
                    type_error(full, it->second);
                    return;
                }
                xs.push_back(x);
            }
            out = xs;
        }
    };
    auto get_counts = [&](const std::string& full, std::vector<std::size_t>& out) {
        if (auto it = entries.find(full); it != entries.end()) {
            std::vector<std::size_t> xs;
            for (const auto& item : split_list(it->second.value)) {
                std::uint64_t x = 0;
                if (!to_u64(item, x)) {
                    type_error(full, it->second);
                    return;
                }
                xs.push_back(static_cast<std::size_t>(x));
            }
            out = xs;
        }
    };
    auto line_of = [&](const std::string& full) -> std::size_t {
        auto it = entries.find(full);
        return it == entries.end() ? 0 : it->second.line;
    };

    get_text("model.activation", cfg.activation);
    get_text("model.readout", cfg.readout);
    if (auto it = entries.find("model.aux_support"); it != entries.end()) {
        for (const auto& item : split_list(it->second.value)) {
            const auto colon = item.find(':');
            AuxAtom atom;
            if (colon == std::string::npos || !to_real(trim(item.substr(0, colon)), atom.scale) ||
                !to_real(trim(item.substr(colon + 1)), atom.prob)) {
                type_error("model.aux_support", it->second);
                cfg.aux_support.clear();
                break;
            }
            cfg.aux_support.push_back(atom);
        }
    }
    get_real("model.delta", cfg.delta);
    get_flag("model.allow_violation", cfg.allow_violation);
    get_counts("sizes.d", cfg.d);
    get_counts("sizes.p", cfg.p);
    get_counts("sizes.n", cfg.n);
    get_reals("sizes.t", cfg.t);
    get_reals("sizes.lambda", cfg.lambda);
    get_reals("sizes.eta", cfg.eta);
    std::string grid = "zip";
    get_text("sizes.grid", grid);
    if (grid == "product")
        cfg.product_grid = true;
    else if (grid != "zip")
        issues.push_back({line_of("sizes.grid"), "sizes.grid must be zip or product, got '" + grid + "'"});

    std::string method = "importance";
    get_text("sampler.method", method);
    if (method == "mala")
        cfg.sampler.kind = SamplerKind::mala;
    else if (method != "importance")
        issues.push_back({line_of("sampler.method"), "sampler.method must be importance or mala, got '" + method + "'"});
    get_count("sampler.M", cfg.sampler.M);
    get_count("sampler.n_outer", cfg.n_outer);
    get_count("sampler.n_test", cfg.n_test);
    get_count("sampler.resample", cfg.sampler.resample);
    get_real("sampler.step_size", cfg.sampler.chain.step_size);
    get_count("sampler.n_steps", cfg.sampler.chain.n_steps);
    get_count("sampler.n_burn", cfg.sampler.chain.n_burn);
    get_real("sampler.adapt_target", cfg.sampler.chain.adapt_target);
    get_count("sampler.thin", cfg.sampler.chain.thin);

    get_count("suite.datasets", cfg.datasets);
    get_count("suite.pairs", cfg.pairs);
    get_count("suite.approx_M", cfg.approx_M);
    get_count("suite.cancellation_p", cfg.cancellation_p);
    get_count("suite.cancellation_M", cfg.cancellation_M);
    get_count("suite.groups", cfg.groups);
    get_count("suite.per_group", cfg.per_group);
    get_real("suite.fd_step", cfg.fd_step);
    get_count("suite.psi_M", cfg.psi_M);

    if (auto it = entries.find("run.suites"); it != entries.end()) {
        for (const auto& name : split_list(it->second.value)) {
            const auto& known = known_suites();
            if (std::find(known.begin(), known.end(), name) == known.end())
                issues.push_back({it->second.line, "unknown suite '" + name + "'"});
            else
                cfg.suites.push_back(name);
        }
    }
    if (auto it = entries.find("run.seed"); it != entries.end()) {
        std::uint64_t s = 0;
        if (!to_u64(it->second.value, s))
            type_error("run.seed", it->second);
        else
            cfg.seed = s;
    }
    get_text("run.output_dir", cfg.output_dir);

    // Semantic validation.
    try {
        (void)Activation::parse(cfg.activation);
    } catch (const std::exception& e) {
        issues.push_back({line_of("model.activation"), e.what()});
    }
    try {
        Readout r = Readout::parse(cfg.readout);
        if (!cfg.aux_support.empty()) r = Readout(r.shape(), cfg.aux_support);
        if (!r.satisfies_a2() && !cfg.allow_violation)
            issues.push_back({line_of("model.readout"),
                              "readout '" + cfg.readout + "' is unbounded; set allow_violation = true to use it"});
    } catch (const std::exception& e) {
        issues.push_back({line_of(cfg.aux_support.empty() ? "model.readout" : "model.aux_support"), e.what()});
    }
    if (!(cfg.delta > 0.0)) issues.push_back({line_of("model.delta"), "model.delta must satisfy delta > 0"});
    auto positive = [&](const char* full, const std::vector<std::size_t>& xs) {
        for (std::size_t x : xs)
            if (x == 0) {
                issues.push_back({line_of(full), std::string(full) + " entries must be positive"});
                return;
            }
    };
    positive("sizes.d", cfg.d);
    positive("sizes.p", cfg.p);
    positive("sizes.n", cfg.n);
    if (entries.count("sizes.d") && cfg.d.empty()) issues.push_back({line_of("sizes.d"), "sizes.d must not be empty"});
    if (entries.count("sizes.n") && cfg.n.empty()) issues.push_back({line_of("sizes.n"), "sizes.n must not be empty"});
    for (double t : cfg.t)
        if (!(t >= 0.0 && t <= 1.0)) {
            issues.push_back({line_of("sizes.t"), "sizes.t entries must lie in [0, 1]"});
            break;
        }
    for (double l : cfg.lambda)
        if (!(l >= 0.0)) {
            issues.push_back({line_of("sizes.lambda"), "sizes.lambda entries must be >= 0"});
            break;
        }
    for (double e : cfg.eta)
        if (!(e > 0.0)) {
            issues.push_back({line_of("sizes.eta"), "sizes.eta entries must be > 0"});
            break;
        }
    if (!cfg.product_grid) {
        const std::vector<std::size_t>& pp = cfg.p.empty() ? cfg.d : cfg.p;
        const std::size_t len = std::max({cfg.d.size(), pp.size(), cfg.n.size()});
        for (std::size_t s : {cfg.d.size(), pp.size(), cfg.n.size()})
            if (s != 1 && s != len && s != 0) {
                issues.push_back({line_of("sizes.grid"), "zipped size lists need equal lengths (or length 1)"});
                break;
            }
    }
    if (cfg.sampler.M == 0) issues.push_back({line_of("sampler.M"), "sampler.M must be positive"});
    if (cfg.n_outer == 0) issues.push_back({line_of("sampler.n_outer"), "sampler.n_outer must be positive"});
    try {
        cfg.sampler.chain.validate();
    } catch (const std::exception& e) {
        issues.push_back({line_of("sampler.step_size"), e.what()});
    }
    if (!(cfg.fd_step > 0.0 && cfg.fd_step < 0.5))
        issues.push_back({line_of("suite.fd_step"), "suite.fd_step must lie in (0, 0.5)"});

    if (!issues.empty()) {
        std::stable_sort(issues.begin(), issues.end(),
                         [](const ConfigIssue& a, const ConfigIssue& b) { return a.line < b.line; });
        throw ConfigError(std::move(issues));
    }
    if (cfg.p.empty()) cfg.p = cfg.d;
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({{0, "cannot read config file '" + path + "'"}});
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    auto counts = [](const std::vector<std::size_t>& xs) {
        return join(xs, [](std::size_t x) { return std::to_string(x); });
    };
    auto reals = [](const std::vector<double>& xs) { return join(xs, real_text); };
    std::ostringstream out;
    out << "[model]\n"
        << "activation = " << c.activation << "\n"
        << "readout = " << c.readout << "\n"
        << "aux_support = "
        << join(c.aux_support, [](const AuxAtom& a) { return real_text(a.scale) + ":" + real_text(a.prob); }) << "\n"
        << "delta = " << real_text(c.delta) << "\n"
        << "allow_violation = " << (c.allow_violation ? "true" : "false") << "\n\n"
        << "[sizes]\n"
        << "d = " << counts(c.d) << "\n"
        << "p = " << counts(c.p.empty() ? c.d : c.p) << "\n"
        << "n = " << counts(c.n) << "\n"
        << "t = " << reals(c.t) << "\n"
        << "lambda = " << reals(c.lambda) << "\n"
        << "eta = " << reals(c.eta) << "\n"
        << "grid = " << (c.product_grid ? "product" : "zip") << "\n\n"
        << "[sampler]\n"
        << "method = " << (c.sampler.kind == SamplerKind::mala ? "mala" : "importance") << "\n"
        << "M = " << c.sampler.M << "\n"
        << "n_outer = " << c.n_outer << "\n"
        << "n_test = " << c.n_test << "\n"
        << "resample = " << c.sampler.resample << "\n"
        << "step_size = " << real_text(c.sampler.chain.step_size) << "\n"
        << "n_steps = " << c.sampler.chain.n_steps << "\n"
        << "n_burn = " << c.sampler.chain.n_burn << "\n"
        << "adapt_target = " << real_text(c.sampler.chain.adapt_target) << "\n"
        << "thin = " << c.sampler.chain.thin << "\n\n"
        << "[suite]\n"
        << "datasets = " << c.datasets << "\n"
        << "pairs = " << c.pairs << "\n"
        << "approx_M = " << c.approx_M << "\n"
        << "cancellation_p = " << c.cancellation_p << "\n"
        << "cancellation_M = " << c.cancellation_M << "\n"
        << "groups = " << c.groups << "\n"
        << "per_group = " << c.per_group << "\n"
        << "fd_step = " << real_text(c.fd_step) << "\n"
        << "psi_M = " << c.psi_M << "\n\n"
        << "[run]\n"
        << "suites = " << join(c.suites, [](const std::string& s) { return s; }) << "\n"
        << "seed = " << c.seed << "\n"
        << "output_dir = " << c.output_dir << "\n";
    return out.str();
}

std::string config_hash(const ExperimentConfig& config) {
    // The output location is not part of what an experiment computes.
    ExperimentConfig c = config;
    c.output_dir.clear();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : serialize_config(c)) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace gelab
