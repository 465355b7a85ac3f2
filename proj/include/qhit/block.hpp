#pragma once

#include <cstdint>
#include <vector>

#include "qhit/interval_system.hpp"
#include "qhit/target_analysis.hpp"

namespace qhit {

// Block decomposition of a binary series of length N: N' = floor(N/L) blocks
// of length L. If L does not divide the requested horizon, the horizon is
// truncated and the dropped remainder recorded.
struct BlockPlan {
    std::size_t N_requested = 0;
    std::size_t N = 0;        // truncated horizon L * N_prime
    std::size_t L = 0;
    std::size_t N_prime = 0;  // number of blocks
    std::size_t Delta = 1;    // gap, in blocks
    std::size_t remainder = 0;

    BlockPlan(std::size_t horizon, std::size_t block_length, std::size_t gap);
};

// R replicate rows of the same {0,1}-valued process X_0..X_{N-1}.
struct JointSample {
    std::size_t N = 0;
    std::vector<std::vector<std::uint8_t>> rows;
    std::size_t replicates() const { return rows.size(); }
};

// Z_j = sum_{i=jL}^{(j+1)L-1} X_i per replicate.
std::vector<std::vector<std::size_t>> block_sums(const JointSample& sample,
                                                 const BlockPlan& plan);

struct ConvolvedLaw {
    std::vector<double> pmf;  // indices 0..n_max
    double overflow = 0.0;
    double mean = 0.0;  // exact mean of the full convolution
};

// Law of W~ = sum of independent blocks with the given per-block pmfs.
ConvolvedLaw independent_block_law(const std::vector<std::vector<double>>& block_pmfs,
                                   std::size_t n_max);

// sum_j Q(Z_j >= 1, W_{j+1}^{j+Delta-1} >= 1); empty windows (Delta = 1, or
// clipped past the last block) contribute 0.
double error_R2(const JointSample& sample, const BlockPlan& plan);

// sum_{i=0}^{N} sum_{q=max(0,i-Delta*L)}^{i} P(X_i=1) P(X_q=1). Marginals
// shorter than N+1 are padded with their last value.
double error_R3(std::vector<double> marginals, const BlockPlan& plan);

struct R1Estimates {
    double R1 = 0.0;
    double R1_tilde = 0.0;
    double R1_se = 0.0;        // bootstrap standard errors
    double R1_tilde_se = 0.0;
    bool low_confidence = false;
};

R1Estimates error_R1_and_R1tilde(const JointSample& sample, const BlockPlan& plan,
                                 std::size_t n_max, std::size_t bootstrap = 100,
                                 std::uint64_t seed = 1, std::size_t min_occupancy = 5);

struct GapReport {
    double gap = 0.0;    // |Qhat(W=n) - Qhat(W~=n)|
    double ci_lo = 0.0;  // bootstrap percentile CI for the gap
    double ci_hi = 0.0;
    double R1 = 0.0;
    double R1_tilde = 0.0;
    double R2 = 0.0;
    double R3 = 0.0;
    double error_sum = 0.0;
    double ratio = 0.0;  // gap / error_sum; 0 when error_sum is 0
    bool low_confidence = false;
};

// Both sides of the block-independence bound: the gap at count n and the four
// error functionals. The bound's constant is not asserted; the ratio is
// reported instead.
GapReport approximation_gap(const JointSample& sample, const BlockPlan& plan, std::size_t n,
                            std::size_t n_max = 8, std::size_t bootstrap = 100,
                            std::uint64_t seed = 1);

// Gap reports for every n in 0..n_max, sharing one pass over the sample and
// one set of error functionals.
std::vector<GapReport> approximation_gap_profile(const JointSample& sample,
                                                 const BlockPlan& plan, std::size_t n_max = 8,
                                                 std::size_t bootstrap = 100,
                                                 std::uint64_t seed = 1);

// Hit-indicator replicate matrix for a fixed word; deterministic under any
// thread count.
JointSample sample_hit_matrix(const MapFamily& family, const TargetSpec& target,
                              const Word& word, std::size_t N, double rho,
                              std::size_t replicates, std::uint64_t seed, int threads);

}  // namespace qhit
