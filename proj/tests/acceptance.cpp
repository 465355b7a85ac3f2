// Acceptance suite: one line per criterion (A1..A10), PASS or FAIL, with the
// measured quantities and their pinned tolerances. Exit code is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "qhit/block.hpp"
#include "qhit/cpd.hpp"
#include "qhit/harness.hpp"
#include "qhit/hitting.hpp"
#include "qhit/target_analysis.hpp"
#include "support/systems.hpp"
#include "support/transfer_matrix.hpp"

using namespace qhit;
using namespace qhit::testsys;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(const char* id, bool pass, const std::string& detail) {
    std::printf("%s: %s — %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    if (!pass) ++g_failures;
}

fs::path scratch() {
    const fs::path dir = fs::temp_directory_path() / "qhit_acceptance";
    fs::create_directories(dir);
    return dir;
}

std::string map_json(const BranchMap& map) {
    std::string out = "{\"branches\": [";
    bool first = true;
    for (const auto& b : map.branches()) {
        if (!first) out += ", ";
        first = false;
        out += "{\"lo\": \"" + to_string(b.lo) + "\", \"hi\": \"" + to_string(b.hi) +
               "\", \"slope\": \"" + to_string(b.slope) + "\", \"intercept\": \"" +
               to_string(b.intercept) + "\"}";
    }
    return out + "]}";
}

struct ConfigSpec {
    MapFamily family;
    std::string weights;  // JSON array of rational strings
    std::string target;
    double t = 1.0;
    double rho0 = 1e-3;
    std::size_t schedule = 1;
    std::size_t samples = 100000;
    std::size_t L = 64;
    std::uint64_t seed = 20240817;
    bool blockcheck = false;
};

fs::path write_config(const std::string& name, const ConfigSpec& spec) {
    std::ostringstream os;
    os << "{\n  \"system\": {\n    \"maps\": [";
    for (std::size_t i = 0; i < spec.family.maps().size(); ++i)
        os << (i ? ", " : "") << map_json(spec.family.maps()[i]);
    os << "],\n    \"noise\": {\"kind\": \"bernoulli\", \"weights\": " << spec.weights << "},\n"
       << "    \"target\": {\"x0\": \"" << spec.target << "\", \"x1\": \"" << spec.target
       << "\"}\n  },\n"
       << "  \"analysis\": {\"ell_max\": 8, \"period_horizon\": 8, \"word_horizon\": 12},\n"
       << "  \"simulation\": {\"t\": " << spec.t << ", \"rho0\": " << spec.rho0
       << ", \"gamma\": 2.0, \"q\": 1.0, \"schedule_length\": " << spec.schedule
       << ", \"samples\": " << spec.samples << ", \"L\": " << spec.L
       << ", \"seed\": " << spec.seed << ", \"omega_mode\": \"fixed_word\"},\n"
       << "  \"blockcheck\": {\"enabled\": " << (spec.blockcheck ? "true" : "false")
       << ", \"Delta\": 2, \"n_max\": 8},\n"
       << "  \"output\": {\"directory\": \"" << (scratch() / (name + "_out")).string()
       << "\", \"formats\": [\"csv\", \"json\"]}\n}\n";
    const fs::path path = scratch() / (name + ".cfg");
    std::ofstream f(path);
    f << os.str();
    return path;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

// run `run_simulate` on a config and return (exit, tv of leg m=1)
std::pair<int, double> simulate_tv(const std::string& name, const ConfigSpec& spec) {
    const fs::path cfg = write_config(name, spec);
    RunOptions opts;
    opts.config_path = cfg.string();
    const int rc = run_simulate(opts);
    double tv = 1.0;
    const fs::path summary = scratch() / (name + "_out") / "simulate_m1.json";
    if (rc == kExitOk && fs::exists(summary)) tv = read_json(summary)["tv_distance"].get<double>();
    return {rc, tv};
}

bool alpha_matches(const AlphaLambda& al, const std::vector<Rational>& expected) {
    for (std::size_t i = 0; i < expected.size(); ++i)
        if (al.alpha_exact[i] != expected[i]) return false;
    return true;
}

MultiplicityLaw geometric_law(double r, std::size_t support = 8) {
    std::vector<double> probs(support);
    double lam = 1.0 - r;
    for (auto& p : probs) {
        p = lam;
        lam *= r;
    }
    return MultiplicityLaw::with_geometric_tail(std::move(probs), r);
}

void a1() {
    const auto start = std::chrono::steady_clock::now();
    Stream rng(8080);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const double s = 0.1 + 2.9 * rng.uniform();
        MultiplicityLaw law = MultiplicityLaw::dirac1();
        if (trial % 3 == 0) {
            const std::size_t k = 1 + rng.below(6);
            std::vector<double> probs(k);
            double mass = 0.0;
            for (auto& p : probs) {
                p = rng.uniform() + 1e-3;
                mass += p;
            }
            for (auto& p : probs) p /= mass;
            law = MultiplicityLaw::truncated(std::move(probs));
        } else if (trial % 3 == 1) {
            law = geometric_law(0.05 + 0.85 * rng.uniform());
        }
        CpdParams params(s, law);
        const auto rec = cpd_pmf_recursive(params, 10);
        for (std::size_t n = 0; n <= 10; ++n)
            worst = std::max(worst, std::fabs(rec[n] - cpd_pmf_direct(params, n)));
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream d;
    d << "recursion vs composition enumeration, 100 random laws, max |diff| = " << worst
      << " (tol 1e-12), " << secs << " s (limit 1 s)";
    report("A1", worst <= 1e-12 && secs < 1.0, d.str());
}

void a2() {
    const auto cert = verify_M_Gamma(periodic_family(), half_target(), 8);
    const auto al = alpha_from_theory(periodic_family(), half_target(), trivial_noise(), 8, cert);
    std::vector<Rational> expected;
    for (int ell = 1; ell <= 8; ++ell) expected.push_back(Rational(1, 1L << ell));
    const bool exact = alpha_matches(al, expected) && al.extremal_index_exact == Rational(1, 2);

    ConfigSpec spec{periodic_family(), "[\"1\"]", "1/2"};
    const auto [rc, tv] = simulate_tv("a2_periodic", spec);
    std::ostringstream d;
    d << "slope-2 fixed point: alpha_ell = 2^-ell exact=" << (exact ? "yes" : "no")
      << ", simulate TV to CPD(1/2, geometric 1/2) = " << tv << " (tol 0.05)";
    report("A2", exact && rc == kExitOk && tv <= 0.05, d.str());
}

void a3() {
    const auto cert = verify_M_Gamma(two_three_family(), sixth_target(), 8);
    const auto al =
        alpha_from_theory(two_three_family(), sixth_target(), half_half_noise(), 8, cert);
    bool exact = al.alpha_exact[0] == Rational(1);
    for (std::size_t ell = 2; ell <= 8; ++ell) exact = exact && al.alpha_exact[ell - 1] == 0;

    ConfigSpec spec{two_three_family(), "[\"1/2\", \"1/2\"]", "1/6"};
    const auto [rc, tv] = simulate_tv("a3_poisson", spec);
    std::ostringstream d;
    d << "aperiodic 1/6 target: alpha = (1,0,...) exact=" << (exact ? "yes" : "no")
      << ", simulate TV to Poisson(1) = " << tv << " (tol 0.05)";
    report("A3", exact && rc == kExitOk && tv <= 0.05, d.str());
}

void a4() {
    const auto cert = verify_M_Gamma(both_fix_family(), half_target(), 8);
    const auto al =
        alpha_from_theory(both_fix_family(), half_target(), half_half_noise(), 8, cert);
    const Rational D(12, 5);
    std::vector<Rational> expected;
    Rational a = (D - 1) / D;
    for (int ell = 1; ell <= 8; ++ell) {
        expected.push_back(a);
        a /= D;
    }
    const bool exact = alpha_matches(al, expected) && al.extremal_index_exact == Rational(7, 12);

    ConfigSpec spec{both_fix_family(), "[\"1/2\", \"1/2\"]", "1/2"};
    const auto [rc, tv] = simulate_tv("a4_polya", spec);
    std::ostringstream d;
    d << "both-fix-1/2 family: D = 12/5, EI = 7/12 exact=" << (exact ? "yes" : "no")
      << ", simulate TV to CPD(7/12, geometric 5/12) = " << tv << " (tol 0.05)";
    report("A4", exact && rc == kExitOk && tv <= 0.05, d.str());
}

void a5() {
    struct Case {
        const char* name;
        MapFamily fam;
        TargetSpec tgt;
        NoiseModel noise;
        double alpha1;
    };
    const Case cases[] = {
        {"slope-2", periodic_family(), half_target(), trivial_noise(), 0.5},
        {"poisson", two_three_family(), sixth_target(), half_half_noise(), 1.0},
        {"polya", both_fix_family(), half_target(), half_half_noise(), 7.0 / 12.0},
    };
    bool pass = true;
    std::ostringstream d;
    d << "entry ratio at L=64, rho=1e-4, M=1e5 vs alpha_1 (tol 0.05):";
    std::uint64_t seed = 4610;
    for (const auto& c : cases) {
        const auto er =
            annealed_entry_ratio(c.fam, c.tgt, c.noise, 64, 1e-4, 100000, seed++, 0);
        const double err = std::fabs(er.ratio - c.alpha1);
        pass = pass && err <= 0.05;
        d << ' ' << c.name << '=' << er.ratio << " (|err|=" << err << ')';
    }
    report("A5", pass, d.str());
}

void a6() {
    ConfigSpec spec{both_fix_family(), "[\"1/2\", \"1/2\"]", "1/2"};
    spec.t = 2.0;
    const fs::path cfg = write_config("a6_pointprocess", spec);
    RunOptions opts;
    opts.config_path = cfg.string();
    const int rc = run_pointprocess(opts);
    bool pass = rc == kExitOk;
    std::ostringstream d;
    d << "point process on halves at t=2 (per-interval TV tol 0.06, |corr| tol 0.03):";
    if (pass) {
        const json j = read_json(scratch() / "a6_pointprocess_out" / "pointprocess.json");
        for (const auto& itv : j["intervals"]) {
            const double tv = itv["tv_distance"].get<double>();
            pass = pass && tv <= 0.06;
            d << " TV[" << itv["lo"].get<double>() << ',' << itv["hi"].get<double>()
              << ")=" << tv;
        }
        const double corr = j["max_abs_correlation"].get<double>();
        pass = pass && std::fabs(corr) <= 0.03;
        d << " corr=" << corr;
    } else {
        d << " run failed with exit " << rc;
    }
    report("A6", pass, d.str());
}

void a7() {
    // (i) synthetic i.i.d. binary columns
    bool pass_i = true;
    {
        // small block count and count range: the plug-in statistics sum
        // per-block maxima of |noise| terms, so their mean under independence
        // grows with the number of blocks/cells relative to the bootstrap SE
        JointSample iid;
        iid.N = 9;
        iid.rows.assign(20000, {});
        for (std::size_t r = 0; r < iid.rows.size(); ++r) {
            Stream rng = Stream::derive(4242, r);
            iid.rows[r].resize(iid.N);
            for (auto& b : iid.rows[r]) b = rng.uniform() < 0.3 ? 1 : 0;
        }
        const BlockPlan plan(9, 3, 2);
        const auto est = error_R1_and_R1tilde(iid, plan, 2, 200, 99);
        const auto reports = approximation_gap_profile(iid, plan, 2, 200, 99);
        pass_i = est.R1 <= 3.0 * est.R1_se + 1e-9 &&
                 est.R1_tilde <= 3.0 * est.R1_tilde_se + 1e-9;
        for (const auto& rep : reports)
            pass_i = pass_i && rep.gap <= std::max(rep.ci_hi, 1e-3);
        std::ostringstream d;
        d << "i.i.d. columns: R1=" << est.R1 << " (3SE=" << 3.0 * est.R1_se << ")"
          << " R1~=" << est.R1_tilde << " (3SE=" << 3.0 * est.R1_tilde_se << ")"
          << ", gaps within bootstrap CIs";
        report("A7i", pass_i, d.str());
    }

    // (ii) exact two-state Markov chain vs transfer-matrix oracle
    {
        const double f = 0.1;
        const BlockPlan plan(60, 5, 3);
        const auto oracle = chain_oracle(f, plan, 8);
        const std::size_t R = 20000;
        const auto sample = sample_chain(f, 60, R, 2718);
        const auto r1 = error_R1_and_R1tilde(sample, plan, 8, 200, 13);
        const double r2 = error_R2(sample, plan);
        double r2_var = 0.0;
        for (double term : oracle.r2_terms)
            r2_var += term * (1.0 - term) / static_cast<double>(R);
        std::vector<double> marginals(plan.N, 0.0);
        for (const auto& row : sample.rows)
            for (std::size_t i = 0; i < plan.N; ++i) marginals[i] += row[i];
        for (auto& m : marginals) m /= static_cast<double>(R);
        const double r3 = error_R3(marginals, plan);
        const std::size_t window = plan.Delta * plan.L;
        std::vector<double> grad(plan.N + 1, 0.0);
        for (std::size_t i = 0; i <= plan.N; ++i) {
            const std::size_t q0 = i > window ? i - window : 0;
            for (std::size_t q = q0; q <= i; ++q) {
                grad[i] += 0.5;
                grad[q] += 0.5;
            }
        }
        double r3_var = 0.0;
        for (double g : grad) r3_var += g * g * 0.25 / static_cast<double>(R);
        const auto reports = approximation_gap_profile(sample, plan, 8, 200, 17);
        bool gap_ok = true;
        for (std::size_t n = 0; n <= 8; ++n) {
            const double se = std::max((reports[n].ci_hi - reports[n].ci_lo) / 3.92, 1e-4);
            gap_ok = gap_ok && std::fabs(reports[n].gap - oracle.gap(n)) <= 4.0 * se;
        }
        const bool pass = std::fabs(r1.R1 - oracle.R1) <= 4.0 * r1.R1_se + 1e-9 &&
                          std::fabs(r1.R1_tilde - oracle.R1_tilde) <= 4.0 * r1.R1_tilde_se + 1e-9 &&
                          std::fabs(r2 - oracle.R2) <= 4.0 * std::sqrt(r2_var) + 1e-9 &&
                          std::fabs(r3 - oracle.R3) <= 4.0 * std::sqrt(r3_var) + 1e-9 && gap_ok;
        std::ostringstream d;
        d << "Markov flip-0.1, N=60, L=5, Delta=3 vs exact oracle (4 SE): R1 " << r1.R1 << "/"
          << oracle.R1 << ", R1~ " << r1.R1_tilde << "/" << oracle.R1_tilde << ", R2 " << r2
          << "/" << oracle.R2 << ", R3 " << r3 << "/" << oracle.R3 << ", gaps "
          << (gap_ok ? "ok" : "off");
        report("A7ii", pass, d.str());
    }

    // (iii) gap trend on the Polya-Aeppli system's hit series as rho shrinks
    {
        const MapFamily fam = both_fix_family();
        const TargetSpec tgt = half_target();
        const double t = 2.0;
        std::vector<double> gaps, widths;
        std::ostringstream d;
        d << "gap(n=1) along rho = 0.02/m with fixed block count:";
        Stream word_rng(314159);
        for (std::size_t m = 1; m <= 3; ++m) {
            const double rho = 0.02 / static_cast<double>(m);
            const std::size_t N = kac_horizon(t, 2.0 * rho);
            const std::size_t L = N / 10;  // ten blocks per leg
            const Word w = half_half_noise().sample_word(N, word_rng);
            const auto sample = sample_hit_matrix(fam, tgt, w, N, rho, 100000, 100 + m, 0);
            const BlockPlan plan(N, L, 2);
            const auto rep = approximation_gap(sample, plan, 1, 8, 200, 23);
            gaps.push_back(rep.gap);
            widths.push_back(rep.ci_hi - rep.ci_lo);
            d << " m=" << m << " gap=" << rep.gap << " (CI " << rep.ci_lo << ".." << rep.ci_hi
              << ")";
        }
        // monotone in trend: least-squares slope over the legs must be
        // negative up to the bootstrap noise scale
        const double slope = (gaps[2] - gaps[0]) / 2.0;
        double tol = 0.0;
        for (double wd : widths) tol = std::max(tol, wd);
        const bool pass = slope <= tol / 4.0 && gaps[2] <= gaps[0] + widths[0];
        d << " slope=" << slope << " (tol " << tol / 4.0 << ")";
        report("A7iii", pass, d.str());
    }
}

void a8() {
    bool pass = true;
    std::ostringstream d;

    // theory identities on all four shipped systems
    struct Case {
        MapFamily fam;
        TargetSpec tgt;
        NoiseModel noise;
    };
    const Case cases[] = {
        {periodic_family(), half_target(), trivial_noise()},
        {two_three_family(), sixth_target(), half_half_noise()},
        {both_fix_family(), half_target(), half_half_noise()},
        {two_three_family(), half_target(), half_half_noise()},
    };
    double worst_mean = 0.0, worst_sum = 0.0;
    for (const auto& c : cases) {
        const auto cert = verify_M_Gamma(c.fam, c.tgt, 8);
        const auto al = alpha_from_theory(c.fam, c.tgt, c.noise, 8, cert);
        worst_mean = std::max(worst_mean, mean_cluster_identity_check(al));
        double lam_sum = 0.0;
        for (double l : al.lambda) lam_sum += l;
        if (al.geometric_tail)
            lam_sum += al.lambda.back() * al.geometric_ratio / (1.0 - al.geometric_ratio);
        worst_sum = std::max(worst_sum, std::fabs(lam_sum - 1.0));
    }
    pass = pass && worst_mean <= 1e-10 && worst_sum <= 1e-10;

    // empirical alpha identity, exact on counts
    const auto est = empirical_alpha(both_fix_family(), half_target(),
                                     Word{std::vector<int>(64, 1)}, 64, 1e-3, 20000, 6, 88, 0);
    bool ident = est.hat_alpha_hat()[0] == 1.0;
    for (std::size_t ell = 1; ell <= 6; ++ell)
        ident = ident && (est.ge[ell - 1] - est.ge[ell] == est.eq[ell - 1]);
    pass = pass && ident;

    // hitting-time/count identity on 1e4 random series
    Stream rng(11111);
    bool series_ok = true;
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t L = 1 + rng.below(24);
        HitSeries s;
        s.indicators.resize(L + 1);
        for (auto& b : s.indicators) b = rng.uniform() < 0.3 ? 1 : 0;
        const std::size_t z_star = count_hits_star(s);
        for (std::size_t ell = 1; ell <= 4; ++ell) {
            const auto r = hitting_time(s, ell);
            series_ok = series_ok && ((z_star >= ell) == (r.has_value() && *r <= L));
        }
    }
    pass = pass && series_ok;
    d << "sum lambda = 1 and alpha_1 * mean cluster = 1 (worst residuals " << worst_sum << ", "
      << worst_mean << ", tol 1e-10); empirical alpha telescoping exact=" << (ident ? "yes" : "no")
      << "; hitting-time identity on 1e4 series=" << (series_ok ? "yes" : "no");
    report("A8", pass, d.str());
}

std::pair<fs::path, int> a9() {
    const auto cert = verify_M_Gamma(two_three_family(), half_target(), 8);
    const auto al =
        alpha_from_theory(two_three_family(), half_target(), half_half_noise(), 8, cert);
    std::vector<Rational> expected;
    Rational p6(1, 6);
    for (int ell = 1; ell <= 8; ++ell) {
        expected.push_back(Rational(5) * p6);
        p6 /= 6;
    }
    const bool exact = alpha_matches(al, expected);

    ConfigSpec spec{two_three_family(), "[\"1/2\", \"1/2\"]", "1/2"};
    const fs::path cfg = write_config("a9_hybrid", spec);
    RunOptions opts;
    opts.config_path = cfg.string();
    const int rc = run_simulate(opts);
    double tv = 1.0;
    const fs::path summary = scratch() / "a9_hybrid_out" / "simulate_m1.json";
    if (rc == kExitOk && fs::exists(summary)) tv = read_json(summary)["tv_distance"].get<double>();
    std::ostringstream d;
    d << "hybrid target 1/2 under {2x,3x}: alpha_ell = 5*6^-ell exact=" << (exact ? "yes" : "no")
      << ", simulate TV to implied CPD = " << tv << " (tol 0.05)";
    report("A9", exact && rc == kExitOk && tv <= 0.05, d.str());
    return {cfg, rc};
}

void a10(const fs::path& cfg) {
    // repeat the A9 run with the same seed and different worker counts
    const fs::path out1 = scratch() / "a10_threads1";
    const fs::path out7 = scratch() / "a10_threads7";
    fs::remove_all(out1);
    fs::remove_all(out7);
    RunOptions opts;
    opts.config_path = cfg.string();
    opts.out_dir = out1.string();
    opts.threads = 1;
    const int rc1 = run_simulate(opts);
    opts.out_dir = out7.string();
    opts.threads = 7;
    const int rc7 = run_simulate(opts);
    bool pass = rc1 == kExitOk && rc7 == kExitOk;
    std::size_t files = 0;
    if (pass) {
        for (const auto& entry : fs::directory_iterator(out1)) {
            const fs::path other = out7 / entry.path().filename();
            std::ifstream a(entry.path(), std::ios::binary), b(other, std::ios::binary);
            std::ostringstream sa, sb;
            sa << a.rdbuf();
            sb << b.rdbuf();
            pass = pass && fs::exists(other) && sa.str() == sb.str();
            ++files;
        }
        pass = pass && files >= 2;
    }
    std::ostringstream d;
    d << "same seed, --threads 1 vs 7: " << files << " output files byte-identical="
      << (pass ? "yes" : "no");
    report("A10", pass, d.str());
}

}  // namespace

int main() {
    a1();
    a2();
    a3();
    a4();
    a5();
    a6();
    a7();
    a8();
    const auto [a9cfg, a9rc] = a9();
    if (a9rc == kExitOk)
        a10(a9cfg);
    else
        report("A10", false, "skipped: the A9 run it repeats did not succeed");
    if (g_failures == 0) std::printf("all acceptance criteria passed\n");
    return g_failures;
}
