#include "qhit/target_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <type_traits>

namespace qhit {

namespace {

int target_symbol_at(const TargetSpec& target, const Word& word, std::size_t index) {
    if (index < word.length()) return word[index];
    if (target.deterministic()) return 0;
    throw std::invalid_argument("word too short to resolve the target at the requested time");
}

}  // namespace

std::optional<std::size_t> minimal_period(const MapFamily& family, const TargetSpec& target,
                                          const Word& word, std::size_t horizon) {
    if (word.length() < horizon + (target.deterministic() ? 0 : 1))
        throw std::invalid_argument("word shorter than the analysis horizon");
    Rational x = target.point(word.length() ? word[0] : 0);
    for (std::size_t m = 1; m <= horizon; ++m) {
        x = family.map(word[m - 1]).apply(x);
        if (x == target.point(target_symbol_at(target, word, m))) return m;
    }
    return std::nullopt;
}

ReturnStructure return_structure(const MapFamily& family, const TargetSpec& target,
                                 const Word& word, std::size_t ell_max, std::size_t horizon) {
    ReturnStructure rs;
    rs.cumulative.push_back(0);
    std::size_t offset = 0;
    while (rs.K < ell_max) {
        if (offset + horizon + 1 > word.length()) {
            rs.truncated = true;
            break;
        }
        Word shifted;
        shifted.symbols.assign(word.symbols.begin() + static_cast<std::ptrdiff_t>(offset),
                               word.symbols.end());
        const auto m = minimal_period(family, target, shifted, horizon);
        if (!m) {
            rs.truncated = true;  // horizon-limited verdict; certification is separate
            break;
        }
        rs.periods.push_back(*m);
        offset += *m;
        rs.cumulative.push_back(offset);
        ++rs.K;
    }
    return rs;
}

namespace {

// Exact finite forward-orbit closure of the target points plus reachable-set
// dynamics with the non-returning constraint. All verdicts below are exact
// when the closure is finite.
struct ClosureAnalysis {
    bool finite = false;
    std::vector<Rational> points;
    std::vector<int> target_index;                    // indices of x0 (and x1)
    std::vector<std::vector<int>> trans;              // trans[v][p] = index of T_v(p)
    // per start: possible minimal-return times (exact, cycle-closed)
    std::set<std::size_t> return_times;
    bool unbounded = false;
    // for the pure-periodic test: reachable set at each time from x0,
    // recorded until the state cycles (deterministic targets only)
    std::vector<std::set<int>> reachable_from_x0;
};

ClosureAnalysis analyze_closure(const MapFamily& family, const TargetSpec& target,
                                std::size_t closure_cap) {
    ClosureAnalysis an;
    std::map<Rational, int> index;
    auto intern = [&](const Rational& p) {
        auto it = index.find(p);
        if (it != index.end()) return it->second;
        const int id = static_cast<int>(an.points.size());
        index.emplace(p, id);
        an.points.push_back(p);
        return id;
    };

    try {
        std::vector<int> frontier;
        frontier.push_back(intern(target.x0));
        if (!target.deterministic()) frontier.push_back(intern(target.x1));
        std::size_t processed = 0;
        while (processed < an.points.size()) {
            if (an.points.size() > closure_cap) return an;  // finite stays false
            const Rational p = an.points[processed++];
            for (const auto& map : family.maps()) (void)intern(map.apply(p));
        }
    } catch (const OrbitOverflowError&) {
        return an;
    }
    an.finite = true;

    const int u = family.alphabet();
    an.trans.assign(static_cast<std::size_t>(u), {});
    for (int v = 0; v < u; ++v)
        for (const auto& p : an.points)
            an.trans[static_cast<std::size_t>(v)].push_back(index.at(family.map(v).apply(p)));

    const int ix0 = index.at(target.x0);
    const int ix1 = index.at(target.x1);
    auto is_target = [&](int p) { return p == ix0 || p == ix1; };
    auto target_of_symbol = [&](int v) { return v == 0 ? ix0 : ix1; };

    std::vector<int> starts{ix0};
    if (ix1 != ix0) starts.push_back(ix1);

    for (int s : starts) {
        // fresh start at time 0: the first symbol must carry target s
        std::set<int> reach;
        for (int v = 0; v < u; ++v)
            if (target_of_symbol(v) == s) reach.insert(an.trans[static_cast<std::size_t>(v)][static_cast<std::size_t>(s)]);

        std::map<std::set<int>, std::size_t> seen;
        std::vector<std::set<int>> history;
        std::size_t t = 1;
        std::vector<std::set<int>> trace{reach};
        for (;;) {
            if (reach.empty()) break;
            for (int p : reach)
                if (is_target(p)) an.return_times.insert(t);
            auto it = seen.find(reach);
            if (it != seen.end()) {
                // states cycle from here; any target inside the cycle means
                // returns at arbitrarily large times
                for (auto h = it->second; h < history.size(); ++h)
                    for (int p : history[h])
                        if (is_target(p)) an.unbounded = true;
                break;
            }
            seen.emplace(reach, history.size());
            history.push_back(reach);
            // non-returning step: from p with symbol v allowed iff p is not
            // the target carried by v
            std::set<int> next;
            for (int p : reach)
                for (int v = 0; v < u; ++v)
                    if (target_of_symbol(v) != p)
                        next.insert(an.trans[static_cast<std::size_t>(v)][static_cast<std::size_t>(p)]);
            reach = std::move(next);
            trace.push_back(reach);
            ++t;
            if (t > 100000) {  // subset dynamics did not close; give up
                an.finite = false;
                return an;
            }
        }
        if (s == ix0) an.reachable_from_x0 = std::move(trace);
    }
    return an;
}

}  // namespace

MGammaCertificate verify_M_Gamma(const MapFamily& family, const TargetSpec& target,
                                 std::size_t period_bound, std::size_t closure_cap) {
    MGammaCertificate cert;
    const ClosureAnalysis an = analyze_closure(family, target, closure_cap);
    cert.orbit_closure_finite = an.finite;
    cert.closure_size = an.points.size();
    if (!an.finite) {
        cert.detail = "forward orbit closure not finite within cap; verdict uncertified";
        return cert;
    }
    if (an.unbounded) {
        cert.unbounded_periods = true;
        cert.detail = "returns occur at arbitrarily large times: sup m_j is infinite";
        return cert;
    }
    const std::size_t m_gamma = an.return_times.empty() ? 0 : *an.return_times.rbegin();
    cert.M_Gamma = m_gamma;
    if (m_gamma > period_bound) {
        cert.detail = "largest finite period " + std::to_string(m_gamma) +
                      " exceeds the requested bound";
        return cert;
    }
    cert.certified = true;
    cert.detail = "certified via finite orbit closure (" + std::to_string(an.points.size()) +
                  " points)";
    return cert;
}

Classification classify_target(const MapFamily& family, const TargetSpec& target,
                               const MGammaCertificate& cert) {
    Classification cls;
    if (!cert.certified) return cls;
    if (cert.M_Gamma == 0) {
        cls.kind = TargetClass::pure_aperiodic;
        return cls;
    }
    const ClosureAnalysis an = analyze_closure(family, target, cert.closure_size + 1);
    if (!an.finite) return cls;

    // pure periodic: deterministic target, returns possible only at m*, and
    // the return at m* is forced (every non-returning path up to m* lands on
    // the target)
    if (target.deterministic() && an.return_times.size() == 1) {
        const std::size_t m_star = *an.return_times.begin();
        bool forced = true;
        if (m_star < an.reachable_from_x0.size()) {
            for (int p : an.reachable_from_x0[m_star - 1])
                if (an.points[static_cast<std::size_t>(p)] != target.x0) forced = false;
            if (an.reachable_from_x0[m_star - 1].empty()) forced = false;
        } else {
            forced = false;
        }
        if (forced) {
            cls.kind = TargetClass::pure_periodic;
            cls.period = m_star;
            return cls;
        }
    }
    cls.kind = TargetClass::hybrid;
    return cls;
}

namespace {

// Per-word integrand of the alpha formula with unit density: contributions
// indexed by ell from the return structure inside the word window.
template <typename Real>
void accumulate_word(const MapFamily& family, const TargetSpec& target, const Word& word,
                     std::size_t ell_count, std::size_t m_gamma, const Real& weight,
                     std::vector<Real>& alpha_acc) {
    // jinv[j] = 1 / JT^{M_j} at the target, along this word
    std::vector<Real> jinv{Real(1)};
    std::size_t offset = 0;
    std::size_t k_found = 0;
    bool k_certified_finite = false;

    Rational x = target.point(word[0]);
    Rational jac(1);
    while (k_found < ell_count) {
        bool found = false;
        Rational xi = x;
        Rational jac_i = jac;
        for (std::size_t i = 1; i <= m_gamma; ++i) {
            const BranchMap& map = family.map(word[offset + i - 1]);
            jac_i *= map.slope_at(xi);
            xi = map.apply(xi);
            if (xi == target.point(word[offset + i])) {
                offset += i;
                x = xi;
                jac = jac_i;
                if constexpr (std::is_same_v<Real, Rational>)
                    jinv.push_back(Rational(1) / jac);
                else
                    jinv.push_back(Real(1) / to_double(jac));
                ++k_found;
                found = true;
                break;
            }
        }
        if (!found) {
            // no return within M_Gamma steps: certified infinite period
            k_certified_finite = true;
            break;
        }
    }

    for (std::size_t ell = 1; ell <= ell_count; ++ell) {
        if (ell <= k_found) {
            alpha_acc[ell - 1] += weight * (jinv[ell - 1] - jinv[ell]);
        } else if (k_certified_finite && ell == k_found + 1) {
            alpha_acc[ell - 1] += weight * jinv[ell - 1];
        }
    }
}

bool detect_geometric(const std::vector<Rational>& alpha, Rational& ratio) {
    if (alpha.size() < 3) return false;
    if (alpha[0] <= 0 || alpha[1] <= 0) return false;
    ratio = alpha[1] / alpha[0];
    if (ratio >= 1) return false;
    for (std::size_t i = 0; i + 1 < alpha.size(); ++i)
        if (alpha[i + 1] != ratio * alpha[i]) return false;
    return true;
}

}  // namespace

AlphaLambda alpha_from_theory(const MapFamily& family, const TargetSpec& target,
                              const NoiseModel& noise, std::size_t ell_max,
                              const MGammaCertificate& cert, const AlphaMethod& method) {
    if (ell_max == 0) throw std::invalid_argument("ell_max must be at least 1");
    if (!cert.certified)
        throw AnalysisError("refusing alpha computation: M_Gamma is not certified");
    const FamilyReport fam = validate_family(family);
    if (!fam.valid) throw AnalysisError("family failed validation");
    if (!fam.lebesgue_preserving)
        throw AnalysisError("alpha computation supports Lebesgue-preserving families only");

    AlphaLambda out;
    const std::size_t ell_count = ell_max + 1;  // extra entry feeds lambda_{ell_max}
    std::vector<Rational> alpha_all(ell_count, Rational(0));

    if (cert.M_Gamma == 0) {
        alpha_all[0] = 1;  // no finite periods anywhere: standard Poisson case
    } else if (method.kind == AlphaMethod::exact) {
        const std::size_t word_len = ell_count * cert.M_Gamma + 1;
        for (const auto& [word, prob] : noise.enumerate_words(word_len))
            accumulate_word<Rational>(family, target, word, ell_count, cert.M_Gamma, prob,
                                      alpha_all);
    } else {
        const std::size_t word_len = ell_count * cert.M_Gamma + 1;
        std::vector<double> mean(ell_count, 0.0), m2(ell_count, 0.0);
        Stream rng(method.seed);
        std::vector<double> one(ell_count);
        for (std::size_t i = 0; i < method.samples; ++i) {
            std::fill(one.begin(), one.end(), 0.0);
            const Word w = noise.sample_word(word_len, rng);
            accumulate_word<double>(family, target, w, ell_count, cert.M_Gamma, 1.0, one);
            const double n = static_cast<double>(i + 1);
            for (std::size_t e = 0; e < ell_count; ++e) {
                const double delta = one[e] - mean[e];
                mean[e] += delta / n;
                m2[e] += delta * (one[e] - mean[e]);
            }
        }
        out.alpha_stderr.resize(ell_max);
        for (std::size_t e = 0; e < ell_count; ++e) {
            alpha_all[e] = Rational(mean[e]);  // exact rational of the double estimate
            if (e < ell_max && method.samples > 1)
                out.alpha_stderr[e] = std::sqrt(
                    m2[e] / static_cast<double>(method.samples - 1) /
                    static_cast<double>(method.samples));
        }
    }

    out.alpha_exact.assign(alpha_all.begin(), alpha_all.begin() + static_cast<std::ptrdiff_t>(ell_max));
    out.lambda_exact = lambda_from_alpha(alpha_all);
    out.extremal_index_exact = alpha_all[0];
    out.extremal_index = to_double(alpha_all[0]);
    for (const auto& a : out.alpha_exact) out.alpha.push_back(to_double(a));
    for (const auto& l : out.lambda_exact) out.lambda.push_back(to_double(l));

    Rational ratio;
    if (method.kind == AlphaMethod::exact && detect_geometric(alpha_all, ratio)) {
        out.geometric_tail = true;
        out.geometric_ratio_exact = ratio;
        out.geometric_ratio = to_double(ratio);
        out.tail_bound = to_double(alpha_all[ell_max - 1] * ratio / (1 - ratio));
    } else if (cert.M_Gamma == 0) {
        out.tail_bound = 0.0;
    } else {
        // alpha_ell <= (1/d_min)^{ell-1}
        const double d = to_double(family.d_min());
        out.tail_bound = std::pow(1.0 / d, static_cast<double>(ell_max)) * d / (d - 1.0);
    }
    return out;
}

std::vector<Rational> lambda_from_alpha(const std::vector<Rational>& alpha) {
    if (alpha.empty() || alpha[0] <= 0) throw std::domain_error("alpha_1 must be positive");
    std::vector<Rational> lambda;
    for (std::size_t i = 0; i + 1 < alpha.size(); ++i)
        lambda.push_back((alpha[i] - alpha[i + 1]) / alpha[0]);
    return lambda;
}

double mean_cluster_identity_check(const AlphaLambda& al) {
    double mean = 0.0;
    const std::size_t n = al.lambda.size();
    for (std::size_t ell = 1; ell <= n; ++ell)
        mean += static_cast<double>(ell) * al.lambda[ell - 1];
    if (al.geometric_tail && n > 0) {
        const double r = al.geometric_ratio;
        const double lam = al.lambda[n - 1];
        mean += lam * (static_cast<double>(n) * r / (1.0 - r) + r / ((1.0 - r) * (1.0 - r)));
    }
    return std::abs(al.extremal_index * mean - 1.0);
}

}  // namespace qhit
