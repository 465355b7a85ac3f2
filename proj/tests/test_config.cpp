#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "qhit/config.hpp"

using namespace qhit;

namespace {

std::string base_config(const std::string& slope, const std::string& target,
                        const std::string& extra_sim = "") {
    return std::string(R"({
  "system": {
    "maps": [
      {"branches": [
        {"lo": "0", "hi": "1/2", "slope": ")") +
           slope + R"(", "intercept": "0"},
        {"lo": "1/2", "hi": "1", "slope": ")" + slope + R"(", "intercept": "-1"}
      ]}
    ],
    "noise": {"kind": "bernoulli", "weights": ["1"]},
    "target": {"x0": ")" +
           target + R"(", "x1": ")" + target + R"("}
  },
  "analysis": {"ell_max": 4, "period_horizon": 8, "word_horizon": 10},
  "simulation": {
    "t": 1.0, "rho0": 0.001, "gamma": 2.0, "q": 1.0,
    "schedule_length": 2, "samples": 1000, "L": 16,
    "seed": 7, "omega_mode": "fixed_word")" +
           extra_sim + R"(
  },
  "blockcheck": {"enabled": false, "Delta": 2, "n_max": 8},
  "output": {"directory": "out/test", "formats": ["csv"]}
})";
}

}  // namespace

TEST_CASE("fnv1a64 reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("hello") == 0xa430d84680aabd0bULL);
}

TEST_CASE("parse_config: exact rationals and plan fields") {
    const std::string text = base_config("2", "1/3");
    const ExperimentConfig cfg = parse_config(text);
    CHECK(cfg.family.alphabet() == 1);
    CHECK(cfg.family.map(0).branches()[0].slope == Rational(2));
    CHECK(cfg.family.map(0).branches()[1].intercept == Rational(-1));
    CHECK(cfg.target.x0 == Rational(1, 3));
    CHECK(cfg.plan.t == doctest::Approx(1.0));
    CHECK(cfg.plan.rho0 == doctest::Approx(0.001));
    CHECK(cfg.plan.schedule_length == 2);
    CHECK(cfg.plan.samples == 1000);
    CHECK(cfg.plan.seed == 7);
    CHECK_FALSE(cfg.plan.resample_word_per_replicate);
    CHECK(cfg.analysis.ell_max == 4);
    CHECK(cfg.output.directory == "out/test");
    CHECK(cfg.config_hash == fnv1a64(text));

    const ExperimentConfig annealed =
        parse_config(base_config("2", "1/3", ", \"omega_mode\": \"resampled_per_replicate\""));
    CHECK(annealed.plan.resample_word_per_replicate);
}

TEST_CASE("parse_config: malformed documents are rejected") {
    CHECK_THROWS_AS(parse_config("{ not json"), ValidationError);
    CHECK_THROWS_AS(parse_config("{}"), ValidationError);
    CHECK_THROWS_AS(parse_config(base_config("2", "0/0")), std::exception);
}

TEST_CASE("validate_config: good and bad systems") {
    CHECK_NOTHROW(validate_config(parse_config(base_config("2", "1/3"))));

    // slope 1: no expansion
    CHECK_THROWS_AS(validate_config(parse_config(base_config("1", "1/3"))), ValidationError);

    // target outside (0,1) is rejected
    CHECK_THROWS_AS(validate_config(parse_config(base_config("2", "0"))), ValidationError);

    // summability violated: gamma * q <= 1
    CHECK_THROWS_AS(
        validate_config(parse_config(base_config("2", "1/3", ", \"gamma\": 0.5"))),
        ValidationError);

    // rho0 reaches the endpoint distance
    CHECK_THROWS_AS(
        validate_config(parse_config(base_config("2", "1/3", ", \"rho0\": 0.5"))),
        ValidationError);
}

TEST_CASE("validate_config rejects targets with ambiguous Jacobian") {
    // branches of different |slope| meet at 1/2; a target there is refused
    const std::string text = R"({
  "system": {
    "maps": [
      {"branches": [
        {"lo": "0", "hi": "1/2", "slope": "2", "intercept": "0"},
        {"lo": "1/2", "hi": "3/4", "slope": "4", "intercept": "-2"},
        {"lo": "3/4", "hi": "1", "slope": "4", "intercept": "-3"}
      ]}
    ],
    "noise": {"kind": "bernoulli", "weights": ["1"]},
    "target": {"x0": "1/2", "x1": "1/2"}
  },
  "analysis": {"ell_max": 4, "period_horizon": 8, "word_horizon": 10},
  "simulation": {
    "t": 1.0, "rho0": 0.001, "gamma": 2.0, "q": 1.0,
    "schedule_length": 2, "samples": 1000, "L": 16,
    "seed": 7, "omega_mode": "fixed_word"
  },
  "blockcheck": {"enabled": false, "Delta": 2, "n_max": 8},
  "output": {"directory": "out/test", "formats": ["csv"]}
})";
    CHECK_THROWS_AS(validate_config(parse_config(text)), ValidationError);
}

TEST_CASE("validate_config: noise alphabet must match the map count") {
    const std::string text = base_config("2", "1/3");
    // patch the weights to two symbols while keeping one map
    std::string broken = text;
    const std::string needle = "\"weights\": [\"1\"]";
    broken.replace(broken.find(needle), needle.size(), "\"weights\": [\"1/2\", \"1/2\"]");
    CHECK_THROWS_AS(validate_config(parse_config(broken)), ValidationError);
}

TEST_CASE("load_config: shipped experiment files parse and validate") {
    for (const char* name : {"/configs/periodic_slope2.cfg", "/configs/poisson.cfg",
                             "/configs/polya_aeppli.cfg", "/configs/hybrid.cfg"}) {
        const ExperimentConfig cfg = load_config(std::string(QHIT_SOURCE_DIR) + name);
        CHECK_NOTHROW(validate_config(cfg));
        CHECK(cfg.plan.samples == 100000);
    }
}
