#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qhit/cpd.hpp"
#include "qhit/interval_system.hpp"
#include "qhit/noise.hpp"
#include "qhit/target_analysis.hpp"

namespace qhit {

// Binary hit indicators I_0..I_{N-1} along one orbit.
struct HitSeries {
    std::vector<std::uint8_t> indicators;
    double rho = 0.0;
    std::size_t length() const { return indicators.size(); }
};

// Histogram estimator of a hit-count law over n = 0..n_max plus overflow.
struct EmpiricalLaw {
    std::vector<std::uint64_t> counts;  // index n
    std::uint64_t overflow = 0;
    std::uint64_t samples = 0;

    double prob(std::size_t n) const {
        return static_cast<double>(counts[n]) / static_cast<double>(samples);
    }
    double stderr_of(std::size_t n) const;
    double overflow_prob() const {
        return static_cast<double>(overflow) / static_cast<double>(samples);
    }
    std::vector<double> pmf() const;
    double mean() const;
};

// Declarative Monte Carlo experiment: shrinking-ball schedule rho_m = rho0 * m^{-gamma}.
struct ExperimentPlan {
    double t = 1.0;
    double rho0 = 1e-3;
    double gamma = 2.0;
    double q = 1.0;
    std::size_t schedule_length = 3;
    std::size_t samples = 100000;
    std::size_t L = 64;
    std::size_t n_max = 32;
    std::uint64_t seed = 1;
    bool resample_word_per_replicate = false;

    double rho(std::size_t m) const;  // m >= 1
    void validate(const TargetSpec& target) const;
};

// Annealed ball mass mu_hat(Gamma_rho): the first-symbol mixture of clamped
// Lebesgue ball lengths.
double ball_mass_annealed(const NoiseModel& noise, const TargetSpec& target, double rho);

std::size_t kac_horizon(double t, double mu_hat);

HitSeries hit_series(const MapFamily& family, const TargetSpec& target, const Word& word,
                     double x, std::size_t N, double rho);

// Z = sum_{i=0}^{L-1} I_i (whole series, or the first L entries)
std::size_t count_hits(const HitSeries& series);
std::size_t count_hits(const HitSeries& series, std::size_t L);
// Z_* = sum_{i=1}^{L} I_i on a series of length L+1
std::size_t count_hits_star(const HitSeries& series);

// index of the ell-th hit among I_1, I_2, ... (1-based); nullopt if it never occurs
std::optional<std::size_t> hitting_time(const HitSeries& series, std::size_t ell);

MarkedSample mark_hits(const HitSeries& series, std::size_t N);

struct IntervalPartition {
    std::vector<std::pair<double, double>> intervals;  // disjoint [a,b) in [0,1)
};

std::vector<std::size_t> interval_counts(const MarkedSample& marks,
                                         const IntervalPartition& partition);

// --- Monte Carlo estimators (deterministic under any thread count) ---

EmpiricalLaw empirical_quenched_law(const MapFamily& family, const TargetSpec& target,
                                    const Word& word, std::size_t N, double rho,
                                    std::size_t samples, std::size_t n_max, std::uint64_t seed,
                                    int threads);

// omega resampled per replicate (annealed variant)
EmpiricalLaw empirical_annealed_law(const MapFamily& family, const TargetSpec& target,
                                    const NoiseModel& noise, std::size_t N, double rho,
                                    std::size_t samples, std::size_t n_max, std::uint64_t seed,
                                    int threads);

struct EmpiricalAlpha {
    std::vector<std::uint64_t> eq;  // #{Z = ell}, ell = 1..ell_max
    std::vector<std::uint64_t> ge;  // #{Z >= ell}, ell = 1..ell_max+1
    std::uint64_t samples = 0;

    std::vector<double> alpha_hat() const;
    std::vector<double> hat_alpha_hat() const;
};

// Conditioned on I_0 = 1: initial points drawn uniformly in the ball.
EmpiricalAlpha empirical_alpha(const MapFamily& family, const TargetSpec& target,
                               const Word& word, std::size_t L, double rho, std::size_t samples,
                               std::size_t ell_max, std::uint64_t seed, int threads);

struct EmpiricalLambda {
    std::vector<std::uint64_t> eq;  // #{Z = ell}, ell = 1..ell_max
    std::uint64_t positive = 0;     // #{Z > 0}
    std::uint64_t samples = 0;
    bool defined() const { return positive > 0; }
    std::vector<double> lambda_hat() const;  // throws if undefined
};

EmpiricalLambda empirical_lambda(const MapFamily& family, const TargetSpec& target,
                                 const Word& word, std::size_t L, double rho,
                                 std::size_t samples, std::size_t ell_max, std::uint64_t seed,
                                 int threads);

struct EntryRatio {
    double ratio = 0.0;
    double stderr_of = 0.0;
    std::uint64_t hits = 0;
    std::uint64_t samples = 0;
};

// mu_hat(Z^L >= 1) / (L * mu_hat(Gamma_rho)), omega sampled per replicate.
EntryRatio annealed_entry_ratio(const MapFamily& family, const TargetSpec& target,
                                const NoiseModel& noise, std::size_t L, double rho,
                                std::size_t samples, std::uint64_t seed, int threads);

struct IntervalCountStats {
    std::vector<EmpiricalLaw> laws;  // one per partition interval
    double max_abs_correlation = 0.0;
};

IntervalCountStats point_process_counts(const MapFamily& family, const TargetSpec& target,
                                        const Word& word, std::size_t N, double rho,
                                        const IntervalPartition& partition, std::size_t samples,
                                        std::size_t n_max, std::uint64_t seed, int threads);

}  // namespace qhit
