#include "qhit/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "qhit/block.hpp"
#include "qhit/config.hpp"
#include "qhit/cpd.hpp"
#include "qhit/hitting.hpp"
#include "qhit/target_analysis.hpp"

namespace qhit {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UncertifiedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string hash_hex(std::uint64_t h) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct Context {
    ExperimentConfig cfg;
    FamilyReport report;
    fs::path out;
    int threads = 0;

    bool wants(const std::string& format) const {
        return std::find(cfg.output.formats.begin(), cfg.output.formats.end(), format) !=
               cfg.output.formats.end();
    }
    std::string header() const {
        std::ostringstream os;
        os << "# config_hash=" << hash_hex(cfg.config_hash) << "\n"
           << "# seed=" << cfg.plan.seed << "\n"
           << "# version=" << kVersion << "\n";
        return os.str();
    }
    json run_metadata() const {
        return json{{"config_hash", hash_hex(cfg.config_hash)},
                    {"seed", cfg.plan.seed},
                    {"version", kVersion}};
    }
};

Context make_context(const RunOptions& opts) {
    ExperimentConfig cfg = load_config(opts.config_path);
    if (opts.seed) cfg.plan.seed = *opts.seed;
    if (opts.out_dir) cfg.output.directory = *opts.out_dir;
    FamilyReport report = validate_config(cfg);
    Context ctx{std::move(cfg), std::move(report), {}, opts.threads};
    ctx.out = ctx.cfg.output.directory;
    fs::create_directories(ctx.out);
    return ctx;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

void write_json(const Context& ctx, const std::string& name, const json& j) {
    if (ctx.wants("json")) write_text(ctx.out / name, j.dump(2) + "\n");
}

void write_csv(const Context& ctx, const std::string& name, const std::string& body) {
    if (ctx.wants("csv")) write_text(ctx.out / name, ctx.header() + body);
}

std::uint64_t subseed(std::uint64_t seed, std::uint64_t tag, std::uint64_t m) {
    return Stream::derive(seed ^ tag, m).next();
}

const char* class_name(TargetClass c) {
    switch (c) {
        case TargetClass::pure_periodic: return "pure_periodic";
        case TargetClass::pure_aperiodic: return "pure_aperiodic";
        case TargetClass::hybrid: return "hybrid";
        default: return "uncertified";
    }
}

struct Theory {
    MGammaCertificate cert;
    Classification cls;
    AlphaLambda al;
};

Theory compute_theory(const Context& ctx) {
    Theory th{verify_M_Gamma(ctx.cfg.family, ctx.cfg.target, ctx.cfg.analysis.period_horizon),
              {},
              {}};
    if (!th.cert.certified)
        throw UncertifiedError("return periods not certified bounded: " + th.cert.detail);
    th.cls = classify_target(ctx.cfg.family, ctx.cfg.target, th.cert);
    th.al = alpha_from_theory(ctx.cfg.family, ctx.cfg.target, ctx.cfg.noise,
                              ctx.cfg.analysis.ell_max, th.cert);
    return th;
}

// Cluster-size law implied by the computed lambda sequence: analytic geometric
// tail when detected, otherwise the truncated law (renormalized against
// floating drift).
MultiplicityLaw law_from(const AlphaLambda& al) {
    if (al.geometric_tail && !al.lambda.empty() && al.lambda.back() > 0.0)
        return MultiplicityLaw::with_geometric_tail(al.lambda, al.geometric_ratio);
    std::vector<double> probs = al.lambda;
    double mass = 0.0;
    for (double p : probs) mass += p;
    if (!(mass > 0.0)) throw std::runtime_error("degenerate cluster-size law");
    for (double& p : probs) p /= mass;
    return MultiplicityLaw::truncated(std::move(probs));
}

json alpha_lambda_json(const AlphaLambda& al) {
    json alpha = json::array(), lambda = json::array();
    for (std::size_t i = 0; i < al.alpha.size(); ++i)
        alpha.push_back(json{{"ell", i + 1},
                             {"exact", to_string(al.alpha_exact[i])},
                             {"value", al.alpha[i]}});
    for (std::size_t i = 0; i < al.lambda.size(); ++i)
        lambda.push_back(json{{"ell", i + 1},
                              {"exact", to_string(al.lambda_exact[i])},
                              {"value", al.lambda[i]}});
    return json{{"alpha", alpha},
                {"lambda", lambda},
                {"extremal_index",
                 json{{"exact", to_string(al.extremal_index_exact)},
                      {"value", al.extremal_index}}},
                {"tail_bound", al.tail_bound},
                {"geometric_tail", al.geometric_tail},
                {"geometric_ratio", al.geometric_tail ? json(al.geometric_ratio) : json()}};
}

// one simulation leg: fixed (or per-replicate) word at radius rho
struct SimulationLeg {
    double rho = 0.0;
    double mu_hat = 0.0;
    std::size_t N = 0;
    EmpiricalLaw law;
    std::vector<double> predicted;
    double tv = 0.0;
};

SimulationLeg simulate_leg(const Context& ctx, const Theory& th, std::size_t m) {
    const auto& cfg = ctx.cfg;
    SimulationLeg leg;
    leg.rho = cfg.plan.rho(m);
    leg.mu_hat = ball_mass_annealed(cfg.noise, cfg.target, leg.rho);
    leg.N = kac_horizon(cfg.plan.t, leg.mu_hat);
    if (leg.N == 0) throw std::runtime_error("Kac horizon is 0; increase t or shrink rho");

    const std::uint64_t sub = subseed(cfg.plan.seed, 0x53494dULL, m);
    if (cfg.plan.resample_word_per_replicate) {
        leg.law = empirical_annealed_law(cfg.family, cfg.target, cfg.noise, leg.N, leg.rho,
                                         cfg.plan.samples, cfg.plan.n_max, sub, ctx.threads);
    } else {
        Stream ws = Stream::derive(sub, 0);
        const Word w = cfg.noise.sample_word(leg.N, ws);
        leg.law = empirical_quenched_law(cfg.family, cfg.target, w, leg.N, leg.rho,
                                         cfg.plan.samples, cfg.plan.n_max,
                                         Stream::derive(sub, 1).next(), ctx.threads);
    }
    const CpdParams params(cfg.plan.t * th.al.extremal_index, law_from(th.al));
    leg.predicted = cpd_pmf_recursive(params, cfg.plan.n_max);
    leg.tv = total_variation(leg.law.pmf(), leg.predicted);
    return leg;
}

std::string leg_csv(const SimulationLeg& leg) {
    std::ostringstream os;
    os << "n,empirical_prob,stderr,predicted_cpd_prob,abs_diff\n";
    for (std::size_t n = 0; n < leg.predicted.size(); ++n)
        os << n << ',' << fmt(leg.law.prob(n)) << ',' << fmt(leg.law.stderr_of(n)) << ','
           << fmt(leg.predicted[n]) << ','
           << fmt(std::fabs(leg.law.prob(n) - leg.predicted[n])) << '\n';
    return os.str();
}

int guarded(const std::function<void()>& body) {
    try {
        body();
        return kExitOk;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const UncertifiedError& e) {
        std::cerr << "uncertified system: " << e.what() << '\n';
        return kExitUncertified;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace

int run_validate(const RunOptions& opts) {
    return guarded([&] {
        Context ctx = make_context(opts);
        std::cout << "family: valid, d_min=" << fmt(ctx.report.d_min)
                  << ", lebesgue_preserving=" << (ctx.report.lebesgue_preserving ? "yes" : "no")
                  << '\n';
        for (std::size_t v = 0; v < ctx.report.per_map.size(); ++v)
            std::cout << "  map " << v << ": branches=" << ctx.report.per_map[v].branch_count
                      << ", degree=" << ctx.report.per_map[v].degree << '\n';
        const auto cert =
            verify_M_Gamma(ctx.cfg.family, ctx.cfg.target, ctx.cfg.analysis.period_horizon);
        if (!cert.certified)
            throw ValidationError("return periods not certified bounded: " + cert.detail);
        const auto cls = classify_target(ctx.cfg.family, ctx.cfg.target, cert);
        std::cout << "M_Gamma=" << cert.M_Gamma << " certified (orbit closure size "
                  << cert.closure_size << ")\n"
                  << "target class: " << class_name(cls.kind);
        if (cls.kind == TargetClass::pure_periodic) std::cout << " (period " << cls.period << ")";
        std::cout << '\n';
    });
}

int run_theory(const RunOptions& opts) {
    return guarded([&] {
        Context ctx = make_context(opts);
        const Theory th = compute_theory(ctx);

        std::cout << "classification: " << class_name(th.cls.kind) << '\n'
                  << "extremal index: " << to_string(th.al.extremal_index_exact) << " = "
                  << fmt(th.al.extremal_index) << '\n';
        for (std::size_t i = 0; i < th.al.alpha.size(); ++i)
            std::cout << "  ell=" << i + 1 << " alpha=" << to_string(th.al.alpha_exact[i])
                      << " lambda=" << to_string(th.al.lambda_exact[i]) << '\n';
        std::cout << "tail bound: " << fmt(th.al.tail_bound) << '\n'
                  << "mean-cluster identity residual: "
                  << fmt(mean_cluster_identity_check(th.al)) << '\n';

        json j = ctx.run_metadata();
        j["classification"] = class_name(th.cls.kind);
        if (th.cls.kind == TargetClass::pure_periodic) j["period"] = th.cls.period;
        j["M_Gamma"] = th.cert.M_Gamma;
        j["closure_size"] = th.cert.closure_size;
        j.update(alpha_lambda_json(th.al));
        j["mean_cluster_identity_residual"] = mean_cluster_identity_check(th.al);
        write_json(ctx, "theory.json", j);

        std::ostringstream csv;
        csv << "ell,alpha_exact,alpha,lambda_exact,lambda\n";
        for (std::size_t i = 0; i < th.al.alpha.size(); ++i)
            csv << i + 1 << ',' << to_string(th.al.alpha_exact[i]) << ',' << fmt(th.al.alpha[i])
                << ',' << to_string(th.al.lambda_exact[i]) << ',' << fmt(th.al.lambda[i]) << '\n';
        write_csv(ctx, "theory.csv", csv.str());
    });
}

int run_simulate(const RunOptions& opts) {
    return guarded([&] {
        Context ctx = make_context(opts);
        const Theory th = compute_theory(ctx);
        for (std::size_t m = 1; m <= ctx.cfg.plan.schedule_length; ++m) {
            const SimulationLeg leg = simulate_leg(ctx, th, m);
            std::cout << "m=" << m << " rho=" << fmt(leg.rho) << " N=" << leg.N
                      << " TV=" << fmt(leg.tv) << '\n';

            write_csv(ctx, "simulate_m" + std::to_string(m) + ".csv", leg_csv(leg));
            json j = ctx.run_metadata();
            j.update(alpha_lambda_json(th.al));
            j["t"] = ctx.cfg.plan.t;
            j["rho"] = leg.rho;
            j["N"] = leg.N;
            j["M"] = ctx.cfg.plan.samples;
            j["tv_distance"] = leg.tv;
            j["overflow_prob"] = leg.law.overflow_prob();
            write_json(ctx, "simulate_m" + std::to_string(m) + ".json", j);
        }
    });
}

int run_pointprocess(const RunOptions& opts) {
    return guarded([&] {
        Context ctx = make_context(opts);
        const Theory th = compute_theory(ctx);
        const auto& cfg = ctx.cfg;

        const double rho = cfg.plan.rho(1);
        const double mu = ball_mass_annealed(cfg.noise, cfg.target, rho);
        const std::size_t N = kac_horizon(cfg.plan.t, mu);
        if (N == 0) throw std::runtime_error("Kac horizon is 0; increase t or shrink rho");

        const IntervalPartition partition{{{0.0, 0.5}, {0.5, 1.0}}};
        const std::uint64_t sub = subseed(cfg.plan.seed, 0x505050ULL, 1);
        Stream ws = Stream::derive(sub, 0);
        const Word w = cfg.noise.sample_word(N, ws);
        const auto stats =
            point_process_counts(cfg.family, cfg.target, w, N, rho, partition,
                                 cfg.plan.samples, cfg.plan.n_max,
                                 Stream::derive(sub, 1).next(), ctx.threads);

        std::ostringstream csv;
        csv << "interval_lo,interval_hi,n,empirical_prob,stderr,predicted_cpd_prob,abs_diff\n";
        json intervals = json::array();
        const MultiplicityLaw mult = law_from(th.al);
        for (std::size_t k = 0; k < partition.intervals.size(); ++k) {
            const auto [lo, hi] = partition.intervals[k];
            const CpdParams params(cfg.plan.t * th.al.extremal_index * (hi - lo), mult);
            const auto predicted = cpd_pmf_recursive(params, cfg.plan.n_max);
            const double tv = total_variation(stats.laws[k].pmf(), predicted);
            for (std::size_t n = 0; n <= cfg.plan.n_max; ++n)
                csv << fmt(lo) << ',' << fmt(hi) << ',' << n << ','
                    << fmt(stats.laws[k].prob(n)) << ',' << fmt(stats.laws[k].stderr_of(n))
                    << ',' << fmt(predicted[n]) << ','
                    << fmt(std::fabs(stats.laws[k].prob(n) - predicted[n])) << '\n';
            intervals.push_back(json{{"lo", lo}, {"hi", hi}, {"tv_distance", tv}});
            std::cout << "interval [" << fmt(lo) << "," << fmt(hi) << ") TV=" << fmt(tv) << '\n';
        }
        std::cout << "max |cross-interval correlation| = " << fmt(stats.max_abs_correlation)
                  << '\n';

        write_csv(ctx, "pointprocess.csv", csv.str());
        json j = ctx.run_metadata();
        j["t"] = cfg.plan.t;
        j["rho"] = rho;
        j["N"] = N;
        j["M"] = cfg.plan.samples;
        j["intervals"] = intervals;
        j["max_abs_correlation"] = stats.max_abs_correlation;
        write_json(ctx, "pointprocess.json", j);
    });
}

int run_blockcheck(const RunOptions& opts) {
    return guarded([&] {
        Context ctx = make_context(opts);
        const auto& cfg = ctx.cfg;
        if (!cfg.blockcheck.enabled) {
            std::cout << "blockcheck disabled in config\n";
            return;
        }
        json legs = json::array();
        for (std::size_t m = 1; m <= cfg.plan.schedule_length; ++m) {
            const double rho = cfg.plan.rho(m);
            const double mu = ball_mass_annealed(cfg.noise, cfg.target, rho);
            const std::size_t N = kac_horizon(cfg.plan.t, mu);
            if (N < 3) throw std::runtime_error("horizon too short for block analysis");
            const std::size_t L = std::max<std::size_t>(1, std::min(cfg.plan.L, N / 3));
            const std::size_t Delta =
                std::max<std::size_t>(1, std::min(cfg.blockcheck.Delta, N / L));

            const BlockPlan plan(N, L, Delta);
            const std::uint64_t sub = subseed(cfg.plan.seed, 0x424c4bULL, m);
            Stream ws = Stream::derive(sub, 0);
            const Word w = cfg.noise.sample_word(plan.N, ws);
            const auto sample =
                sample_hit_matrix(cfg.family, cfg.target, w, plan.N, rho, cfg.plan.samples,
                                  Stream::derive(sub, 1).next(), ctx.threads);
            const auto reports = approximation_gap_profile(
                sample, plan, cfg.blockcheck.n_max, 100, Stream::derive(sub, 2).next());

            std::ostringstream csv;
            csv << "L,Delta,n,gap,gap_ci_lo,gap_ci_hi,R1t,R1,R2,R3\n";
            for (std::size_t n = 0; n < reports.size(); ++n) {
                const auto& r = reports[n];
                csv << plan.L << ',' << plan.Delta << ',' << n << ',' << fmt(r.gap) << ','
                    << fmt(r.ci_lo) << ',' << fmt(r.ci_hi) << ',' << fmt(r.R1_tilde) << ','
                    << fmt(r.R1) << ',' << fmt(r.R2) << ',' << fmt(r.R3) << '\n';
            }
            write_csv(ctx, "blockcheck_m" + std::to_string(m) + ".csv", csv.str());

            const auto& r1 = reports[std::min<std::size_t>(1, reports.size() - 1)];
            legs.push_back(json{{"m", m},
                                {"rho", rho},
                                {"N", plan.N},
                                {"L", plan.L},
                                {"Delta", plan.Delta},
                                {"gap_n1", r1.gap},
                                {"error_sum", r1.error_sum},
                                {"ratio", r1.ratio},
                                {"low_confidence", r1.low_confidence}});
            std::cout << "m=" << m << " rho=" << fmt(rho) << " N=" << plan.N
                      << " gap(n=1)=" << fmt(r1.gap) << " errors=" << fmt(r1.error_sum) << '\n';
        }
        json j = ctx.run_metadata();
        j["legs"] = legs;
        write_json(ctx, "blockcheck.json", j);
    });
}

int run_entryratio(const RunOptions& opts) {
    return guarded([&] {
        Context ctx = make_context(opts);
        const Theory th = compute_theory(ctx);
        const auto& cfg = ctx.cfg;

        std::ostringstream csv;
        csv << "L,rho,ratio,stderr,predicted_alpha1\n";
        json legs = json::array();
        for (std::size_t m = 1; m <= cfg.plan.schedule_length; ++m) {
            const double rho = cfg.plan.rho(m);
            const std::uint64_t sub = subseed(cfg.plan.seed, 0x455254ULL, m);
            const auto er = annealed_entry_ratio(cfg.family, cfg.target, cfg.noise, cfg.plan.L,
                                                 rho, cfg.plan.samples, sub, ctx.threads);
            csv << cfg.plan.L << ',' << fmt(rho) << ',' << fmt(er.ratio) << ','
                << fmt(er.stderr_of) << ',' << fmt(th.al.extremal_index) << '\n';
            legs.push_back(json{{"L", cfg.plan.L},
                                {"rho", rho},
                                {"ratio", er.ratio},
                                {"stderr", er.stderr_of},
                                {"predicted_alpha1", th.al.extremal_index}});
            std::cout << "L=" << cfg.plan.L << " rho=" << fmt(rho) << " ratio=" << fmt(er.ratio)
                      << " (alpha1=" << fmt(th.al.extremal_index) << ")\n";
        }
        write_csv(ctx, "entryratio.csv", csv.str());
        json j = ctx.run_metadata();
        j["legs"] = legs;
        write_json(ctx, "entryratio.json", j);
    });
}

}  // namespace qhit
