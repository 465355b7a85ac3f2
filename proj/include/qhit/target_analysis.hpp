#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qhit/interval_system.hpp"
#include "qhit/noise.hpp"
#include "qhit/rational.hpp"
#include "qhit/rng.hpp"

namespace qhit {

struct AnalysisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Random singleton target x(w) = x_{w_0}. The two points may coincide
// (deterministic target).
struct TargetSpec {
    Rational x0, x1;

    const Rational& point(int symbol) const { return symbol == 0 ? x0 : x1; }
    bool deterministic() const { return x0 == x1; }
    bool is_target(const Rational& p) const { return p == x0 || p == x1; }
};

// Successive minimal return periods m_j along a noise fiber, their partial
// sums M_j and the count K of finite periods found before the horizon.
struct ReturnStructure {
    std::vector<std::size_t> periods;     // m_0..m_{K-1}
    std::vector<std::size_t> cumulative;  // M_0=0, M_1, ..., M_K
    std::size_t K = 0;
    bool truncated = false;  // horizon reached before certifying m = infinity
};

struct MGammaCertificate {
    bool certified = false;
    std::size_t M_Gamma = 0;
    bool orbit_closure_finite = false;
    std::size_t closure_size = 0;
    // set when returns at arbitrarily large times are possible
    bool unbounded_periods = false;
    std::string detail;
};

enum class TargetClass { pure_periodic, pure_aperiodic, hybrid, uncertified };

struct Classification {
    TargetClass kind = TargetClass::uncertified;
    std::size_t period = 0;  // m* for pure_periodic
};

struct AlphaLambda {
    std::vector<Rational> alpha_exact;   // alpha_1..alpha_{ell_max}
    std::vector<Rational> lambda_exact;  // lambda_1..lambda_{ell_max}
    std::vector<double> alpha;
    std::vector<double> lambda;
    Rational extremal_index_exact;  // alpha_1
    double extremal_index = 0.0;
    double tail_bound = 0.0;  // certified bound on sum_{ell > ell_max} alpha_ell
    bool geometric_tail = false;
    Rational geometric_ratio_exact;  // alpha_{ell+1}/alpha_ell when geometric
    double geometric_ratio = 0.0;
    std::vector<double> alpha_stderr;  // Monte Carlo method only
};

// Smallest m <= horizon with T_w^m x(w) = x(theta^m w), exact equality.
// nullopt = exceeds the horizon. Needs word length >= horizon+1 (the target at
// time m is indexed by symbol m).
std::optional<std::size_t> minimal_period(const MapFamily& family, const TargetSpec& target,
                                          const Word& word, std::size_t horizon);

ReturnStructure return_structure(const MapFamily& family, const TargetSpec& target,
                                 const Word& word, std::size_t ell_max, std::size_t horizon);

// Exact certification of sup_j m_j via the forward orbit closure of the
// target points: when the closure is finite, possible return times are
// computed from reachable sets and the verdict is exact.
MGammaCertificate verify_M_Gamma(const MapFamily& family, const TargetSpec& target,
                                 std::size_t period_bound, std::size_t closure_cap = 4096);

Classification classify_target(const MapFamily& family, const TargetSpec& target,
                               const MGammaCertificate& cert);

struct AlphaMethod {
    enum Kind { exact, monte_carlo } kind = exact;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
};

// Limit parameters alpha_ell, lambda_ell and the extremal index for certified
// Lebesgue-preserving families (unit density). The exact method enumerates
// words with exact probabilities and Jacobians.
AlphaLambda alpha_from_theory(const MapFamily& family, const TargetSpec& target,
                              const NoiseModel& noise, std::size_t ell_max,
                              const MGammaCertificate& cert,
                              const AlphaMethod& method = AlphaMethod{});

// lambda_ell = (alpha_ell - alpha_{ell+1}) / alpha_1
std::vector<Rational> lambda_from_alpha(const std::vector<Rational>& alpha);

// |alpha_1 * sum ell*lambda_ell - 1| with analytic tail accounting.
double mean_cluster_identity_check(const AlphaLambda& al);

}  // namespace qhit
