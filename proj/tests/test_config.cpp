#include "gelab/config.hpp"

#include <doctest.h>

#include <algorithm>

using namespace gelab;

namespace {

const char* kMinimal = R"(# smallest valid file
[model]
activation = tanh
readout = tanh
delta = 0.5

[sizes]
d = 16
n = 4
)";

bool has_issue(const ConfigError& e, std::size_t line, const std::string& fragment) {
    return std::any_of(e.issues().begin(), e.issues().end(), [&](const ConfigIssue& i) {
        return i.line == line && i.message.find(fragment) != std::string::npos;
    });
}

ConfigError parse_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    FAIL("expected a ConfigError");
    return ConfigError({});
}

}  // namespace

TEST_CASE("minimal config with defaults") {
    const ExperimentConfig c = parse_config(kMinimal);
    CHECK(c.delta == 0.5);
    REQUIRE(c.d.size() == 1);
    CHECK(c.p == c.d);
    CHECK(c.t == std::vector<double>{0.0});
    const auto grid = c.dims_grid();
    REQUIRE(grid.size() == 1);
    CHECK(grid[0] == Dims{16, 16, 4});
}

TEST_CASE("negative delta names the key, the line and the constraint") {
    std::string text = kMinimal;
    text.replace(text.find("delta = 0.5"), 11, "delta = -1");
    const ConfigError e = parse_error(text);
    CHECK(has_issue(e, 5, "model.delta must satisfy delta > 0"));
    CHECK(std::string(e.what()).find("line 5") != std::string::npos);
}

TEST_CASE("duplicate key reports both lines") {
    const ConfigError e = parse_error(std::string(kMinimal) + "d = 32\n");
    CHECK(has_issue(e, 10, "duplicate key sizes.d (lines 8 and 10)"));
}

TEST_CASE("every problem is reported at once") {
    const ConfigError e = parse_error(R"([model]
activation = tanh
colour = blue
delta = abc

[extras]
x = 1

[sizes]
d = 16
n = 4
t = 2
)");
    CHECK(has_issue(e, 3, "unknown key 'colour'"));
    CHECK(has_issue(e, 4, "model.delta"));
    CHECK(has_issue(e, 6, "unknown section [extras]"));
    CHECK(has_issue(e, 0, "missing required key model.readout"));
    CHECK(has_issue(e, 12, "sizes.t entries must lie in [0, 1]"));
    CHECK(e.issues().size() >= 5);
}

TEST_CASE("unbounded readout needs the override") {
    std::string text = kMinimal;
    text.replace(text.find("readout = tanh"), 14, "readout = identity");
    CHECK_THROWS_AS(parse_config(text), ConfigError);
    text.replace(text.find("delta"), 0, "allow_violation = true\n");
    CHECK_NOTHROW(parse_config(text));
}

TEST_CASE("grids zip with broadcasting or take the product") {
    ExperimentConfig c = parse_config(std::string(kMinimal) + "p = 8, 16\n");
    auto grid = c.dims_grid();
    REQUIRE(grid.size() == 2);
    CHECK(grid[1] == Dims{16, 16, 4});
    c = parse_config(std::string(kMinimal).replace(std::string(kMinimal).find("d = 16"), 6, "d = 8, 16") +
                     "p = 8, 16\ngrid = product\n");
    CHECK(c.dims_grid().size() == 4);
    CHECK_THROWS_AS(parse_config(std::string(kMinimal) + "p = 8, 16\nn = 2, 3, 4\n"), ConfigError);
}

TEST_CASE("serialized form parses back to the same config") {
    const ExperimentConfig c = parse_config(std::string(kMinimal) + R"(t = 0, 0.5
lambda = 0.25
[sampler]
method = mala
M = 5000
step_size = 0.01
[run]
suites = free_entropy, nishimori
seed = 17
)");
    const std::string s = serialize_config(c);
    const ExperimentConfig back = parse_config(s);
    CHECK(back == c);
    CHECK(serialize_config(back) == s);
    CHECK(config_hash(back) == config_hash(c));
    CHECK(config_hash(c).size() == 16);
    ExperimentConfig other = c;
    other.seed = 18;
    CHECK(config_hash(other) != config_hash(c));
}

TEST_CASE("unknown suite names are rejected") {
    const ConfigError e = parse_error(std::string(kMinimal) + "[run]\nsuites = free_entropy, bogus\n");
    CHECK(has_issue(e, 11, "unknown suite 'bogus'"));
    CHECK(std::find(known_suites().begin(), known_suites().end(), "theorem1") != known_suites().end());
}
