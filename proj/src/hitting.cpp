#include "qhit/hitting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qhit/parallel.hpp"

namespace qhit {

namespace {

// double positions of the two target points, indexed by symbol
struct TargetD {
    std::vector<double> pos;
    explicit TargetD(const TargetSpec& t, int alphabet) {
        pos.reserve(static_cast<std::size_t>(alphabet));
        for (int v = 0; v < alphabet; ++v) pos.push_back(to_double(t.point(v)));
    }
};

// A double carries 53 significant bits while expanding maps shift information
// out at every step, so raw double orbits of dyadic maps collapse onto exact
// periodic points (and round-to-nearest-even biases the lowest bit). For
// Lebesgue-preserving families the unobserved residual below the mantissa is
// uniform, so refilling the low bits with fresh randomness samples the true
// process: iterate on x + u*2^-48, u ~ U[0,1) -- far below every ball radius
// used, and coarse enough to stay unbiased under rounding.
inline double step(const BranchMap& map, double x, Stream& rng) {
    return map.apply(x + rng.uniform() * 0x1.0p-48);
}

// Z over the first L indicators of a freshly generated orbit; avoids
// materializing a HitSeries in the Monte Carlo inner loops.
std::size_t orbit_hit_count(const MapFamily& family, const TargetD& tx, const Word& word,
                            double x, std::size_t L, double rho, Stream& rng) {
    std::size_t z = 0;
    for (std::size_t i = 0; i < L; ++i) {
        const int v = word[i];
        if (std::fabs(x - tx.pos[static_cast<std::size_t>(v)]) <= rho) ++z;
        if (i + 1 < L) x = step(family.map(v), x, rng);
    }
    return z;
}

double clamped_ball_length(double center, double rho) {
    const double lo = std::max(0.0, center - rho);
    const double hi = std::min(1.0, center + rho);
    return std::max(0.0, hi - lo);
}

double uniform_in_ball(double center, double rho, Stream& rng) {
    const double lo = std::max(0.0, center - rho);
    const double hi = std::min(1.0, center + rho);
    return lo + (hi - lo) * rng.uniform();
}

}  // namespace

double EmpiricalLaw::stderr_of(std::size_t n) const {
    const double p = prob(n);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
}

std::vector<double> EmpiricalLaw::pmf() const {
    std::vector<double> p(counts.size());
    for (std::size_t n = 0; n < counts.size(); ++n) p[n] = prob(n);
    return p;
}

double EmpiricalLaw::mean() const {
    // overflow bucket excluded; callers size n_max to make it negligible
    double acc = 0.0;
    for (std::size_t n = 0; n < counts.size(); ++n)
        acc += static_cast<double>(n) * static_cast<double>(counts[n]);
    return acc / static_cast<double>(samples);
}

double ExperimentPlan::rho(std::size_t m) const {
    if (m == 0) throw std::invalid_argument("schedule index starts at 1");
    return rho0 * std::pow(static_cast<double>(m), -gamma);
}

void ExperimentPlan::validate(const TargetSpec& target) const {
    if (!(t > 0.0)) throw ValidationError("time parameter t must be positive");
    if (!(rho0 > 0.0)) throw ValidationError("rho0 must be positive");
    if (schedule_length == 0) throw ValidationError("schedule length must be >= 1");
    if (!(gamma * q > 1.0))
        throw ValidationError("shrinking schedule needs gamma*q > 1 for summability");
    if (samples == 0) throw ValidationError("sample count must be positive");
    if (L == 0) throw ValidationError("cluster window L must be positive");
    for (const Rational* p : {&target.x0, &target.x1}) {
        const double c = to_double(*p);
        const double dist = std::min(c, 1.0 - c);
        if (!(rho0 < dist))
            throw ValidationError("rho0 must be smaller than the target's distance to {0,1}");
    }
}

double ball_mass_annealed(const NoiseModel& noise, const TargetSpec& target, double rho) {
    double mass = 0.0;
    const auto& marginal = noise.marginal();
    for (std::size_t v = 0; v < marginal.size(); ++v)
        mass += to_double(marginal[v]) *
                clamped_ball_length(to_double(target.point(static_cast<int>(v))), rho);
    return mass;
}

std::size_t kac_horizon(double t, double mu_hat) {
    if (!(mu_hat > 0.0)) throw std::invalid_argument("ball mass must be positive");
    return static_cast<std::size_t>(std::floor(t / mu_hat));
}

HitSeries hit_series(const MapFamily& family, const TargetSpec& target, const Word& word,
                     double x, std::size_t N, double rho) {
    if (word.length() < N) throw std::invalid_argument("word shorter than the requested series");
    const TargetD tx(target, family.alphabet());
    HitSeries s;
    s.rho = rho;
    s.indicators.reserve(N);
    for (std::size_t i = 0; i < N; ++i) {
        const int v = word[i];
        s.indicators.push_back(
            std::fabs(x - tx.pos[static_cast<std::size_t>(v)]) <= rho ? 1 : 0);
        if (i + 1 < N) x = family.map(v).apply(x);
    }
    return s;
}

std::size_t count_hits(const HitSeries& series) {
    std::size_t z = 0;
    for (std::size_t i = 0; i < series.length(); ++i) z += series.indicators[i];
    return z;
}

std::size_t count_hits(const HitSeries& series, std::size_t L) {
    if (series.length() < L) throw std::invalid_argument("series shorter than the window");
    std::size_t z = 0;
    for (std::size_t i = 0; i < L; ++i) z += series.indicators[i];
    return z;
}

std::size_t count_hits_star(const HitSeries& series) {
    if (series.length() < 2) throw std::invalid_argument("starred count needs length >= 2");
    std::size_t z = 0;
    for (std::size_t i = 1; i < series.length(); ++i) z += series.indicators[i];
    return z;
}

std::optional<std::size_t> hitting_time(const HitSeries& series, std::size_t ell) {
    if (ell == 0) throw std::invalid_argument("hitting order ell starts at 1");
    std::size_t seen = 0;
    for (std::size_t i = 1; i < series.length(); ++i) {
        if (series.indicators[i]) {
            if (++seen == ell) return i;
        }
    }
    return std::nullopt;
}

MarkedSample mark_hits(const HitSeries& series, std::size_t N) {
    if (N == 0) throw std::invalid_argument("normalization horizon must be positive");
    MarkedSample out;
    for (std::size_t i = 0; i < series.length(); ++i)
        if (series.indicators[i])
            out.marks.push_back({static_cast<double>(i) / static_cast<double>(N), 1});
    return out;
}

std::vector<std::size_t> interval_counts(const MarkedSample& marks,
                                         const IntervalPartition& partition) {
    std::vector<std::size_t> counts(partition.intervals.size(), 0);
    for (const auto& m : marks.marks)
        for (std::size_t k = 0; k < partition.intervals.size(); ++k)
            if (m.position >= partition.intervals[k].first &&
                m.position < partition.intervals[k].second)
                counts[k] += m.multiplicity;
    return counts;
}

namespace {

// shared chunked histogram driver; fn(rng) -> Z
template <typename Draw>
EmpiricalLaw histogram_mc(std::size_t samples, std::size_t n_max, std::uint64_t seed,
                          int threads, const Draw& draw) {
    struct Slot {
        std::vector<std::uint64_t> counts;
        std::uint64_t overflow = 0;
    };
    std::vector<Slot> slots(chunk_count(samples));
    parallel_chunks(samples, threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        Slot& slot = slots[c];
        slot.counts.assign(n_max + 1, 0);
        for (std::size_t r = begin; r < end; ++r) {
            Stream rng = Stream::derive(seed, r);
            const std::size_t z = draw(rng);
            if (z <= n_max)
                ++slot.counts[z];
            else
                ++slot.overflow;
        }
    });
    EmpiricalLaw law;
    law.counts.assign(n_max + 1, 0);
    law.samples = samples;
    for (const auto& slot : slots) {
        for (std::size_t n = 0; n <= n_max; ++n) law.counts[n] += slot.counts[n];
        law.overflow += slot.overflow;
    }
    return law;
}

}  // namespace

EmpiricalLaw empirical_quenched_law(const MapFamily& family, const TargetSpec& target,
                                    const Word& word, std::size_t N, double rho,
                                    std::size_t samples, std::size_t n_max, std::uint64_t seed,
                                    int threads) {
    if (word.length() < N) throw std::invalid_argument("word shorter than the horizon");
    const TargetD tx(target, family.alphabet());
    return histogram_mc(samples, n_max, seed, threads, [&](Stream& rng) {
        const double x0 = rng.uniform();
        return orbit_hit_count(family, tx, word, x0, N, rho, rng);
    });
}

EmpiricalLaw empirical_annealed_law(const MapFamily& family, const TargetSpec& target,
                                    const NoiseModel& noise, std::size_t N, double rho,
                                    std::size_t samples, std::size_t n_max, std::uint64_t seed,
                                    int threads) {
    const TargetD tx(target, family.alphabet());
    return histogram_mc(samples, n_max, seed, threads, [&](Stream& rng) {
        const Word w = noise.sample_word(N, rng);
        const double x0 = rng.uniform();
        return orbit_hit_count(family, tx, w, x0, N, rho, rng);
    });
}

std::vector<double> EmpiricalAlpha::alpha_hat() const {
    std::vector<double> a(eq.size());
    for (std::size_t i = 0; i < eq.size(); ++i)
        a[i] = static_cast<double>(eq[i]) / static_cast<double>(samples);
    return a;
}

std::vector<double> EmpiricalAlpha::hat_alpha_hat() const {
    std::vector<double> a(ge.size());
    for (std::size_t i = 0; i < ge.size(); ++i)
        a[i] = static_cast<double>(ge[i]) / static_cast<double>(samples);
    return a;
}

EmpiricalAlpha empirical_alpha(const MapFamily& family, const TargetSpec& target,
                               const Word& word, std::size_t L, double rho, std::size_t samples,
                               std::size_t ell_max, std::uint64_t seed, int threads) {
    if (word.length() < L) throw std::invalid_argument("word shorter than the cluster window");
    if (ell_max == 0) throw std::invalid_argument("ell_max must be >= 1");
    const TargetD tx(target, family.alphabet());
    const double center = tx.pos[static_cast<std::size_t>(word[0])];

    struct Slot {
        std::vector<std::uint64_t> eq, ge;
    };
    std::vector<Slot> slots(chunk_count(samples));
    parallel_chunks(samples, threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        Slot& slot = slots[c];
        slot.eq.assign(ell_max, 0);
        slot.ge.assign(ell_max + 1, 0);
        for (std::size_t r = begin; r < end; ++r) {
            Stream rng = Stream::derive(seed, r);
            const double x = uniform_in_ball(center, rho, rng);
            const std::size_t z = orbit_hit_count(family, tx, word, x, L, rho, rng);
            for (std::size_t ell = 1; ell <= ell_max; ++ell)
                if (z == ell) ++slot.eq[ell - 1];
            for (std::size_t ell = 1; ell <= ell_max + 1; ++ell)
                if (z >= ell) ++slot.ge[ell - 1];
        }
    });
    EmpiricalAlpha out;
    out.eq.assign(ell_max, 0);
    out.ge.assign(ell_max + 1, 0);
    out.samples = samples;
    for (const auto& slot : slots) {
        for (std::size_t i = 0; i < ell_max; ++i) out.eq[i] += slot.eq[i];
        for (std::size_t i = 0; i <= ell_max; ++i) out.ge[i] += slot.ge[i];
    }
    return out;
}

std::vector<double> EmpiricalLambda::lambda_hat() const {
    if (!defined()) throw std::logic_error("cluster law undefined: no positive counts observed");
    std::vector<double> lam(eq.size());
    for (std::size_t i = 0; i < eq.size(); ++i)
        lam[i] = static_cast<double>(eq[i]) / static_cast<double>(positive);
    return lam;
}

EmpiricalLambda empirical_lambda(const MapFamily& family, const TargetSpec& target,
                                 const Word& word, std::size_t L, double rho,
                                 std::size_t samples, std::size_t ell_max, std::uint64_t seed,
                                 int threads) {
    if (word.length() < L) throw std::invalid_argument("word shorter than the cluster window");
    const TargetD tx(target, family.alphabet());
    struct Slot {
        std::vector<std::uint64_t> eq;
        std::uint64_t positive = 0;
    };
    std::vector<Slot> slots(chunk_count(samples));
    parallel_chunks(samples, threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        Slot& slot = slots[c];
        slot.eq.assign(ell_max, 0);
        for (std::size_t r = begin; r < end; ++r) {
            Stream rng = Stream::derive(seed, r);
            const double x0 = rng.uniform();
            const std::size_t z = orbit_hit_count(family, tx, word, x0, L, rho, rng);
            if (z >= 1) {
                ++slot.positive;
                if (z <= ell_max) ++slot.eq[z - 1];
            }
        }
    });
    EmpiricalLambda out;
    out.eq.assign(ell_max, 0);
    out.samples = samples;
    for (const auto& slot : slots) {
        for (std::size_t i = 0; i < ell_max; ++i) out.eq[i] += slot.eq[i];
        out.positive += slot.positive;
    }
    return out;
}

EntryRatio annealed_entry_ratio(const MapFamily& family, const TargetSpec& target,
                                const NoiseModel& noise, std::size_t L, double rho,
                                std::size_t samples, std::uint64_t seed, int threads) {
    const TargetD tx(target, family.alphabet());
    std::vector<std::uint64_t> slot_hits(chunk_count(samples), 0);
    parallel_chunks(samples, threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        std::uint64_t hits = 0;
        for (std::size_t r = begin; r < end; ++r) {
            Stream rng = Stream::derive(seed, r);
            const Word w = noise.sample_word(L, rng);
            const double x0 = rng.uniform();
            if (orbit_hit_count(family, tx, w, x0, L, rho, rng) >= 1) ++hits;
        }
        slot_hits[c] = hits;
    });
    EntryRatio out;
    out.samples = samples;
    for (auto h : slot_hits) out.hits += h;
    const double p = static_cast<double>(out.hits) / static_cast<double>(samples);
    const double denom = static_cast<double>(L) * ball_mass_annealed(noise, target, rho);
    if (!(denom > 0.0)) throw std::invalid_argument("ball mass must be positive");
    out.ratio = p / denom;
    out.stderr_of = std::sqrt(p * (1.0 - p) / static_cast<double>(samples)) / denom;
    return out;
}

IntervalCountStats point_process_counts(const MapFamily& family, const TargetSpec& target,
                                        const Word& word, std::size_t N, double rho,
                                        const IntervalPartition& partition, std::size_t samples,
                                        std::size_t n_max, std::uint64_t seed, int threads) {
    if (word.length() < N) throw std::invalid_argument("word shorter than the horizon");
    const std::size_t K = partition.intervals.size();
    if (K == 0) throw std::invalid_argument("partition is empty");
    const TargetD tx(target, family.alphabet());

    // precompute interval index of each time i/N (or none)
    std::vector<int> bucket(N, -1);
    for (std::size_t i = 0; i < N; ++i) {
        const double pos = static_cast<double>(i) / static_cast<double>(N);
        for (std::size_t k = 0; k < K; ++k)
            if (pos >= partition.intervals[k].first && pos < partition.intervals[k].second) {
                bucket[i] = static_cast<int>(k);
                break;
            }
    }

    struct Slot {
        std::vector<std::uint64_t> counts;    // K * (n_max+1)
        std::vector<std::uint64_t> overflow;  // K
        std::vector<std::uint64_t> sum, sum2; // per interval
        std::vector<std::uint64_t> cross;     // K*K upper triangle flattened
    };
    std::vector<Slot> slots(chunk_count(samples));
    parallel_chunks(samples, threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        Slot& slot = slots[c];
        slot.counts.assign(K * (n_max + 1), 0);
        slot.overflow.assign(K, 0);
        slot.sum.assign(K, 0);
        slot.sum2.assign(K, 0);
        slot.cross.assign(K * K, 0);
        std::vector<std::size_t> z(K);
        for (std::size_t r = begin; r < end; ++r) {
            Stream rng = Stream::derive(seed, r);
            double x = rng.uniform();
            std::fill(z.begin(), z.end(), 0);
            for (std::size_t i = 0; i < N; ++i) {
                const int v = word[i];
                if (std::fabs(x - tx.pos[static_cast<std::size_t>(v)]) <= rho && bucket[i] >= 0)
                    ++z[static_cast<std::size_t>(bucket[i])];
                if (i + 1 < N) x = step(family.map(v), x, rng);
            }
            for (std::size_t k = 0; k < K; ++k) {
                if (z[k] <= n_max)
                    ++slot.counts[k * (n_max + 1) + z[k]];
                else
                    ++slot.overflow[k];
                slot.sum[k] += z[k];
                slot.sum2[k] += z[k] * z[k];
                for (std::size_t j = k + 1; j < K; ++j) slot.cross[k * K + j] += z[k] * z[j];
            }
        }
    });

    IntervalCountStats out;
    out.laws.resize(K);
    std::vector<std::uint64_t> sum(K, 0), sum2(K, 0), cross(K * K, 0);
    for (std::size_t k = 0; k < K; ++k) {
        out.laws[k].counts.assign(n_max + 1, 0);
        out.laws[k].samples = samples;
    }
    for (const auto& slot : slots) {
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t n = 0; n <= n_max; ++n)
                out.laws[k].counts[n] += slot.counts[k * (n_max + 1) + n];
            out.laws[k].overflow += slot.overflow[k];
            sum[k] += slot.sum[k];
            sum2[k] += slot.sum2[k];
            for (std::size_t j = k + 1; j < K; ++j) cross[k * K + j] += slot.cross[k * K + j];
        }
    }
    const double M = static_cast<double>(samples);
    double worst = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double mk = static_cast<double>(sum[k]) / M;
        const double vk = static_cast<double>(sum2[k]) / M - mk * mk;
        for (std::size_t j = k + 1; j < K; ++j) {
            const double mj = static_cast<double>(sum[j]) / M;
            const double vj = static_cast<double>(sum2[j]) / M - mj * mj;
            if (vk > 0.0 && vj > 0.0) {
                const double cov = static_cast<double>(cross[k * K + j]) / M - mk * mj;
                worst = std::max(worst, std::fabs(cov / std::sqrt(vk * vj)));
            }
        }
    }
    out.max_abs_correlation = worst;
    return out;
}

}  // namespace qhit
