#include "qhit/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qhit/cpd.hpp"  // ValidationError

namespace qhit {

namespace {

using nlohmann::json;

Rational rational_from(const json& j, const char* what) {
    try {
        if (j.is_string()) return parse_rational(j.get<std::string>());
        if (j.is_number_integer()) return Rational(j.get<long long>());
    } catch (const std::exception& e) {
        throw ValidationError(std::string(what) + ": " + e.what());
    }
    throw ValidationError(std::string(what) + ": expected a \"p/q\" string or integer");
}

std::vector<Rational> rational_vector(const json& j, const char* what) {
    if (!j.is_array()) throw ValidationError(std::string(what) + ": expected an array");
    std::vector<Rational> out;
    for (const auto& e : j) out.push_back(rational_from(e, what));
    return out;
}

const json& require(const json& j, const char* key, const char* scope) {
    auto it = j.find(key);
    if (it == j.end())
        throw ValidationError(std::string("missing config key ") + scope + "." + key);
    return *it;
}

MapFamily parse_maps(const json& maps_json) {
    if (!maps_json.is_array() || maps_json.empty())
        throw ValidationError("system.maps must be a non-empty array");
    std::vector<BranchMap> maps;
    for (const auto& map_json : maps_json) {
        const auto& branches_json = require(map_json, "branches", "system.maps[]");
        std::vector<Branch> branches;
        for (const auto& b : branches_json) {
            branches.push_back(Branch{rational_from(require(b, "lo", "branch"), "branch.lo"),
                                      rational_from(require(b, "hi", "branch"), "branch.hi"),
                                      rational_from(require(b, "slope", "branch"), "branch.slope"),
                                      rational_from(require(b, "intercept", "branch"),
                                                    "branch.intercept")});
        }
        maps.emplace_back(std::move(branches));
    }
    return MapFamily(std::move(maps));
}

NoiseModel parse_noise(const json& noise_json) {
    const std::string kind = require(noise_json, "kind", "system.noise").get<std::string>();
    if (kind == "bernoulli")
        return NoiseModel::bernoulli(
            rational_vector(require(noise_json, "weights", "system.noise"),
                            "system.noise.weights"));
    if (kind == "markov") {
        const auto& t = require(noise_json, "transition", "system.noise");
        if (!t.is_array()) throw ValidationError("system.noise.transition must be an array");
        std::vector<std::vector<Rational>> rows;
        for (const auto& row : t) rows.push_back(rational_vector(row, "transition row"));
        std::optional<std::vector<Rational>> initial;
        if (noise_json.contains("initial"))
            initial = rational_vector(noise_json["initial"], "system.noise.initial");
        return NoiseModel::markov(std::move(rows), std::move(initial));
    }
    throw ValidationError("system.noise.kind must be \"bernoulli\" or \"markov\"");
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const std::exception& e) {
        throw ValidationError(std::string("config parse error: ") + e.what());
    }

    const auto& system = require(root, "system", "");
    MapFamily family = parse_maps(require(system, "maps", "system"));
    NoiseModel noise = parse_noise(require(system, "noise", "system"));
    const auto& target_json = require(system, "target", "system");
    TargetSpec target{rational_from(require(target_json, "x0", "system.target"), "target.x0"),
                      rational_from(require(target_json, "x1", "system.target"), "target.x1")};

    AnalysisParams analysis;
    if (root.contains("analysis")) {
        const auto& a = root["analysis"];
        if (a.contains("ell_max")) analysis.ell_max = a["ell_max"].get<std::size_t>();
        if (a.contains("period_horizon"))
            analysis.period_horizon = a["period_horizon"].get<std::size_t>();
        if (a.contains("word_horizon")) analysis.word_horizon = a["word_horizon"].get<std::size_t>();
    }

    ExperimentPlan plan;
    if (root.contains("simulation")) {
        const auto& s = root["simulation"];
        if (s.contains("t")) plan.t = s["t"].get<double>();
        if (s.contains("rho0")) plan.rho0 = s["rho0"].get<double>();
        if (s.contains("gamma")) plan.gamma = s["gamma"].get<double>();
        if (s.contains("q")) plan.q = s["q"].get<double>();
        if (s.contains("schedule_length"))
            plan.schedule_length = s["schedule_length"].get<std::size_t>();
        if (s.contains("samples")) plan.samples = s["samples"].get<std::size_t>();
        if (s.contains("L")) plan.L = s["L"].get<std::size_t>();
        if (s.contains("seed")) plan.seed = s["seed"].get<std::uint64_t>();
        if (s.contains("omega_mode")) {
            const std::string mode = s["omega_mode"].get<std::string>();
            if (mode == "fixed_word")
                plan.resample_word_per_replicate = false;
            else if (mode == "resampled_per_replicate")
                plan.resample_word_per_replicate = true;
            else
                throw ValidationError(
                    "simulation.omega_mode must be \"fixed_word\" or "
                    "\"resampled_per_replicate\"");
        }
    }

    BlockcheckParams blockcheck;
    if (root.contains("blockcheck")) {
        const auto& b = root["blockcheck"];
        if (b.contains("enabled")) blockcheck.enabled = b["enabled"].get<bool>();
        if (b.contains("Delta")) blockcheck.Delta = b["Delta"].get<std::size_t>();
        if (b.contains("n_max")) blockcheck.n_max = b["n_max"].get<std::size_t>();
    }

    OutputParams output;
    if (root.contains("output")) {
        const auto& o = root["output"];
        if (o.contains("directory")) output.directory = o["directory"].get<std::string>();
        if (o.contains("formats")) output.formats = o["formats"].get<std::vector<std::string>>();
    }

    ExperimentConfig cfg{std::move(family), std::move(noise),     target, analysis,
                         plan,              std::move(blockcheck), output, fnv1a64(json_text)};
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

FamilyReport validate_config(const ExperimentConfig& cfg) {
    std::vector<std::string> issues;

    FamilyReport report = validate_family(cfg.family);
    for (const auto& issue : report.issues) issues.push_back(issue);

    if (cfg.noise.alphabet() != cfg.family.alphabet())
        issues.push_back("noise alphabet size differs from the number of maps");

    for (const Rational* p : {&cfg.target.x0, &cfg.target.x1}) {
        if (*p <= 0 || *p >= 1) issues.push_back("target point outside (0,1): " + to_string(*p));
        for (int v = 0; v < cfg.family.alphabet(); ++v)
            if (cfg.family.map(v).jacobian_ambiguous_at(*p))
                issues.push_back("target point " + to_string(*p) +
                                 " sits on a slope-changing breakpoint of map " +
                                 std::to_string(v));
    }

    try {
        cfg.plan.validate(cfg.target);
    } catch (const std::exception& e) {
        issues.push_back(e.what());
    }

    if (!issues.empty()) {
        std::string msg = "config validation failed:";
        for (const auto& i : issues) msg += "\n  - " + i;
        throw ValidationError(msg);
    }
    return report;
}

}  // namespace qhit
