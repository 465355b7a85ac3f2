#include "qhit/block.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qhit/cpd.hpp"  // ValidationError
#include "qhit/parallel.hpp"
#include "qhit/rng.hpp"

namespace qhit {

BlockPlan::BlockPlan(std::size_t horizon, std::size_t block_length, std::size_t gap) {
    if (horizon < 3) throw ValidationError("block plan needs horizon N >= 3");
    if (block_length == 0 || block_length > horizon / 3)
        throw ValidationError("block length must satisfy 1 <= L <= floor(N/3)");
    N_requested = horizon;
    L = block_length;
    N_prime = horizon / block_length;
    N = L * N_prime;
    remainder = horizon - N;
    if (gap < 1 || gap > N_prime)
        throw ValidationError("block gap must satisfy 1 <= Delta <= N'");
    Delta = gap;
}

std::vector<std::vector<std::size_t>> block_sums(const JointSample& sample,
                                                 const BlockPlan& plan) {
    if (sample.N < plan.N) throw std::invalid_argument("sample shorter than the block plan");
    std::vector<std::vector<std::size_t>> out;
    out.reserve(sample.replicates());
    for (const auto& row : sample.rows) {
        std::vector<std::size_t> z(plan.N_prime, 0);
        for (std::size_t j = 0; j < plan.N_prime; ++j)
            for (std::size_t i = j * plan.L; i < (j + 1) * plan.L; ++i) z[j] += row[i];
        out.push_back(std::move(z));
    }
    return out;
}

ConvolvedLaw independent_block_law(const std::vector<std::vector<double>>& block_pmfs,
                                   std::size_t n_max) {
    if (block_pmfs.empty()) throw std::invalid_argument("no block pmfs given");
    std::vector<double> conv{1.0};
    double mean = 0.0;
    for (const auto& pmf : block_pmfs) {
        if (pmf.empty()) throw std::invalid_argument("empty block pmf");
        double mass = 0.0;
        for (double p : pmf) {
            if (p < -1e-12) throw std::invalid_argument("negative block pmf entry");
            mass += p;
        }
        if (std::fabs(mass - 1.0) > 1e-9)
            throw std::invalid_argument("block pmf does not sum to 1");
        for (std::size_t v = 0; v < pmf.size(); ++v) mean += static_cast<double>(v) * pmf[v];
        std::vector<double> next(conv.size() + pmf.size() - 1, 0.0);
        for (std::size_t a = 0; a < conv.size(); ++a)
            for (std::size_t b = 0; b < pmf.size(); ++b) next[a + b] += conv[a] * pmf[b];
        conv = std::move(next);
    }
    ConvolvedLaw law;
    law.mean = mean;
    law.pmf.assign(n_max + 1, 0.0);
    for (std::size_t v = 0; v < conv.size(); ++v) {
        if (v <= n_max)
            law.pmf[v] = conv[v];
        else
            law.overflow += conv[v];
    }
    return law;
}

double error_R2(const JointSample& sample, const BlockPlan& plan) {
    if (sample.replicates() == 0) throw std::invalid_argument("no replicates");
    const auto z = block_sums(sample, plan);
    const double R = static_cast<double>(sample.replicates());
    double total = 0.0;
    for (std::size_t j = 0; j < plan.N_prime; ++j) {
        // window j+1 .. j+Delta-1, clipped to the last block; empty => 0
        const std::size_t a = j + 1;
        const std::size_t b = std::min(j + plan.Delta - 1, plan.N_prime - 1) + 1;
        if (a >= b) continue;
        std::size_t cnt = 0;
        for (const auto& row : z) {
            if (row[j] == 0) continue;
            for (std::size_t k = a; k < b; ++k)
                if (row[k] >= 1) {
                    ++cnt;
                    break;
                }
        }
        total += static_cast<double>(cnt) / R;
    }
    return total;
}

double error_R3(std::vector<double> marginals, const BlockPlan& plan) {
    if (marginals.empty()) throw std::invalid_argument("empty marginal vector");
    while (marginals.size() < plan.N + 1) marginals.push_back(marginals.back());
    const std::size_t window = plan.Delta * plan.L;
    double total = 0.0;
    for (std::size_t i = 0; i <= plan.N; ++i) {
        const std::size_t q0 = i > window ? i - window : 0;
        for (std::size_t q = q0; q <= i; ++q) total += marginals[i] * marginals[q];
    }
    return total;
}

namespace {

// (Z_j, tail W_{j+Delta}^{N'-1}) per block per replicate, clipped at n_max+1.
struct ClippedPairs {
    std::size_t N_prime = 0;
    std::size_t clip = 0;  // n_max + 1
    std::vector<std::uint8_t> z, t;  // flattened replicate-major

    std::uint8_t zv(std::size_t r, std::size_t j) const { return z[r * N_prime + j]; }
    std::uint8_t tv(std::size_t r, std::size_t j) const { return t[r * N_prime + j]; }
};

ClippedPairs clipped_pairs(const JointSample& sample, const BlockPlan& plan,
                           std::size_t n_max) {
    const auto zs = block_sums(sample, plan);
    ClippedPairs cp;
    cp.N_prime = plan.N_prime;
    cp.clip = n_max + 1;
    const std::size_t R = sample.replicates();
    cp.z.assign(R * plan.N_prime, 0);
    cp.t.assign(R * plan.N_prime, 0);
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t j = 0; j < plan.N_prime; ++j) {
            std::size_t tail = 0;
            for (std::size_t k = j + plan.Delta; k < plan.N_prime; ++k) tail += zs[r][k];
            cp.z[r * plan.N_prime + j] =
                static_cast<std::uint8_t>(std::min(zs[r][j], cp.clip));
            cp.t[r * plan.N_prime + j] = static_cast<std::uint8_t>(std::min(tail, cp.clip));
        }
    }
    return cp;
}

// joint counts per block: table[j][z*(clip+1)+t]
struct JointTables {
    std::size_t width = 0;  // clip + 1
    std::vector<std::vector<std::uint64_t>> table;
    std::uint64_t samples = 0;
};

JointTables tabulate(const ClippedPairs& cp, const std::vector<std::size_t>& indices) {
    JointTables jt;
    jt.width = cp.clip + 1;
    jt.table.assign(cp.N_prime, std::vector<std::uint64_t>(jt.width * jt.width, 0));
    jt.samples = indices.size();
    for (std::size_t r : indices)
        for (std::size_t j = 0; j < cp.N_prime; ++j)
            ++jt.table[j][cp.zv(r, j) * jt.width + cp.tv(r, j)];
    return jt;
}

std::pair<double, double> r1_statistics(const JointTables& jt, std::size_t n_max) {
    const double R = static_cast<double>(jt.samples);
    const std::size_t w = jt.width;
    double R1 = 0.0, R1t = 0.0;
    std::vector<double> pz(w), pt(w);
    for (const auto& tab : jt.table) {
        std::fill(pz.begin(), pz.end(), 0.0);
        std::fill(pt.begin(), pt.end(), 0.0);
        for (std::size_t u = 0; u < w; ++u)
            for (std::size_t v = 0; v < w; ++v) {
                pz[u] += static_cast<double>(tab[u * w + v]);
                pt[v] += static_cast<double>(tab[u * w + v]);
            }
        for (auto& p : pz) p /= R;
        for (auto& p : pt) p /= R;
        const double p_ge1 = 1.0 - pz[0];
        double best_t = 0.0;
        for (std::size_t q = 0; q <= n_max; ++q) {
            const double joint_ge1 =
                (pt[q] * R - static_cast<double>(tab[0 * w + q])) / R;
            best_t = std::max(best_t, std::fabs(p_ge1 * pt[q] - joint_ge1));
        }
        R1t += best_t;
        double best = 0.0;
        for (std::size_t q = 1; q <= n_max; ++q) {
            double acc = 0.0;
            for (std::size_t u = 1; u <= q; ++u) {
                const double joint = static_cast<double>(tab[u * w + (q - u)]) / R;
                acc += std::fabs(joint - pz[u] * pt[q - u]);
            }
            best = std::max(best, acc);
        }
        R1 += best;
    }
    return {R1, R1t};
}

std::vector<std::size_t> identity_indices(std::size_t R) {
    std::vector<std::size_t> idx(R);
    for (std::size_t r = 0; r < R; ++r) idx[r] = r;
    return idx;
}

std::vector<std::size_t> bootstrap_indices(std::size_t R, Stream& rng) {
    std::vector<std::size_t> idx(R);
    for (std::size_t r = 0; r < R; ++r) idx[r] = static_cast<std::size_t>(rng.below(R));
    return idx;
}

}  // namespace

R1Estimates error_R1_and_R1tilde(const JointSample& sample, const BlockPlan& plan,
                                 std::size_t n_max, std::size_t bootstrap,
                                 std::uint64_t seed, std::size_t min_occupancy) {
    const std::size_t R = sample.replicates();
    if (R == 0) throw std::invalid_argument("no replicates");
    const ClippedPairs cp = clipped_pairs(sample, plan, n_max);

    const auto full = tabulate(cp, identity_indices(R));
    R1Estimates out;
    std::tie(out.R1, out.R1_tilde) = r1_statistics(full, n_max);

    for (std::size_t j = 0; j < plan.N_prime; ++j) {
        std::uint64_t ge1 = full.samples;
        for (std::size_t v = 0; v < full.width; ++v) ge1 -= full.table[j][0 * full.width + v];
        if (ge1 < min_occupancy) out.low_confidence = true;
    }

    if (bootstrap >= 2) {
        double s1 = 0, s1sq = 0, st = 0, stsq = 0;
        for (std::size_t b = 0; b < bootstrap; ++b) {
            Stream rng = Stream::derive(seed, b);
            const auto jt = tabulate(cp, bootstrap_indices(R, rng));
            const auto [r1, r1t] = r1_statistics(jt, n_max);
            s1 += r1;
            s1sq += r1 * r1;
            st += r1t;
            stsq += r1t * r1t;
        }
        const double B = static_cast<double>(bootstrap);
        out.R1_se = std::sqrt(std::max(0.0, s1sq / B - (s1 / B) * (s1 / B)));
        out.R1_tilde_se = std::sqrt(std::max(0.0, stsq / B - (st / B) * (st / B)));
    }
    return out;
}

namespace {

// gaps |Phat(W=n) - Phat(W~=n)| for n = 0..n_max, from per-replicate block
// sums restricted to the chosen replicate indices
std::vector<double> gap_profile(const std::vector<std::vector<std::size_t>>& zs,
                                const BlockPlan& plan, std::size_t n_max,
                                const std::vector<std::size_t>& indices) {
    const double R = static_cast<double>(indices.size());
    std::vector<std::uint64_t> w_hits(n_max + 1, 0);
    std::vector<std::vector<double>> block_pmfs(plan.N_prime,
                                                std::vector<double>(plan.L + 1, 0.0));
    for (std::size_t r : indices) {
        std::size_t w = 0;
        for (std::size_t j = 0; j < plan.N_prime; ++j) {
            w += zs[r][j];
            block_pmfs[j][zs[r][j]] += 1.0;
        }
        if (w <= n_max) ++w_hits[w];
    }
    for (auto& pmf : block_pmfs)
        for (auto& p : pmf) p /= R;
    const auto conv = independent_block_law(block_pmfs, n_max);
    std::vector<double> gaps(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n)
        gaps[n] = std::fabs(static_cast<double>(w_hits[n]) / R - conv.pmf[n]);
    return gaps;
}

}  // namespace

std::vector<GapReport> approximation_gap_profile(const JointSample& sample,
                                                 const BlockPlan& plan, std::size_t n_max,
                                                 std::size_t bootstrap, std::uint64_t seed) {
    const std::size_t R = sample.replicates();
    if (R == 0) throw std::invalid_argument("no replicates");
    const auto zs = block_sums(sample, plan);

    const auto r1 = error_R1_and_R1tilde(sample, plan, n_max, bootstrap, seed + 1);
    const double R2 = error_R2(sample, plan);
    std::vector<double> marginals(plan.N, 0.0);
    for (const auto& row : sample.rows)
        for (std::size_t i = 0; i < plan.N; ++i) marginals[i] += row[i];
    for (auto& p : marginals) p /= static_cast<double>(R);
    const double R3 = error_R3(marginals, plan);

    std::vector<GapReport> reports(n_max + 1);
    const auto gaps = gap_profile(zs, plan, n_max, identity_indices(R));
    for (std::size_t n = 0; n <= n_max; ++n) {
        auto& rep = reports[n];
        rep.gap = gaps[n];
        rep.R1 = r1.R1;
        rep.R1_tilde = r1.R1_tilde;
        rep.R2 = R2;
        rep.R3 = R3;
        rep.low_confidence = r1.low_confidence;
        rep.error_sum = rep.R1 + rep.R1_tilde + rep.R2 + rep.R3;
        rep.ratio = rep.error_sum > 0.0 ? rep.gap / rep.error_sum : 0.0;
    }

    if (bootstrap >= 2) {
        std::vector<std::vector<double>> boot(bootstrap);
        for (std::size_t b = 0; b < bootstrap; ++b) {
            Stream rng = Stream::derive(seed, 0x67617000ULL + b);
            boot[b] = gap_profile(zs, plan, n_max, bootstrap_indices(R, rng));
        }
        std::vector<double> col(bootstrap);
        for (std::size_t n = 0; n <= n_max; ++n) {
            for (std::size_t b = 0; b < bootstrap; ++b) col[b] = boot[b][n];
            std::sort(col.begin(), col.end());
            const auto at = [&](double frac) {
                const std::size_t i = static_cast<std::size_t>(
                    frac * static_cast<double>(col.size() - 1) + 0.5);
                return col[i];
            };
            reports[n].ci_lo = at(0.025);
            reports[n].ci_hi = at(0.975);
        }
    }
    return reports;
}

GapReport approximation_gap(const JointSample& sample, const BlockPlan& plan, std::size_t n,
                            std::size_t n_max, std::size_t bootstrap, std::uint64_t seed) {
    const auto reports =
        approximation_gap_profile(sample, plan, std::max(n, n_max), bootstrap, seed);
    return reports[n];
}

JointSample sample_hit_matrix(const MapFamily& family, const TargetSpec& target,
                              const Word& word, std::size_t N, double rho,
                              std::size_t replicates, std::uint64_t seed, int threads) {
    if (word.length() < N) throw std::invalid_argument("word shorter than the horizon");
    std::vector<double> tx;
    for (int v = 0; v < family.alphabet(); ++v) tx.push_back(to_double(target.point(v)));

    JointSample sample;
    sample.N = N;
    sample.rows.assign(replicates, {});
    parallel_chunks(replicates, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            Stream rng = Stream::derive(seed, r);
            double x = rng.uniform();
            auto& row = sample.rows[r];
            row.resize(N);
            for (std::size_t i = 0; i < N; ++i) {
                const int v = word[i];
                row[i] = std::fabs(x - tx[static_cast<std::size_t>(v)]) <= rho ? 1 : 0;
                // refill mantissa bits lost to expansion (see hitting.cpp)
                if (i + 1 < N) x = family.map(v).apply(x + rng.uniform() * 0x1.0p-48);
            }
        }
    });
    return sample;
}

}  // namespace qhit
