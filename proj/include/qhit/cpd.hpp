#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "qhit/rng.hpp"

namespace qhit {

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class TailKind { truncated, geometric };

// Cluster size distribution (lambda_ell)_{ell>=1}. Finite support plus an
// optional analytic geometric tail, so mass and first moment are exact for the
// Polya-Aeppli class instead of truncation-biased.
class MultiplicityLaw {
  public:
    static MultiplicityLaw truncated(std::vector<double> probs);
    static MultiplicityLaw with_geometric_tail(std::vector<double> probs, double ratio);
    static MultiplicityLaw dirac1() { return truncated({1.0}); }

    double lambda(std::size_t ell) const;        // ell >= 1
    std::size_t finite_support() const { return probs_.size(); }
    TailKind tail_kind() const { return tail_; }
    double tail_ratio() const { return ratio_; }

    double total_mass() const;  // finite part + analytic tail
    double tail_mass() const;
    double mean() const;        // sum ell*lambda_ell, analytic tail included

    std::size_t sample(Stream& rng) const;

  private:
    MultiplicityLaw(std::vector<double> probs, TailKind tail, double ratio);
    void validate() const;

    std::vector<double> probs_;  // probs_[ell-1] = lambda_ell
    TailKind tail_;
    double ratio_;
};

struct CpdParams {
    double intensity;  // s; in the limit theorems s = t * alpha_1
    MultiplicityLaw multiplicity;

    CpdParams(double s, MultiplicityLaw law) : intensity(s), multiplicity(std::move(law)) {
        if (!(intensity > 0.0)) throw ValidationError("CPD intensity must be positive");
    }
};

struct Mark {
    double position;          // in [0,1)
    std::size_t multiplicity; // >= 1
};

struct MarkedSample {
    std::vector<Mark> marks;
    std::size_t total_multiplicity() const {
        std::size_t n = 0;
        for (const auto& m : marks) n += m.multiplicity;
        return n;
    }
};

// pmf by exact composition enumeration; n=0 is the empty cluster count case,
// e^{-s}. Capped at n<=25 (composition count 2^{n-1}); use the recursion past
// that.
double cpd_pmf_direct(const CpdParams& params, std::size_t n);

// Panjer-type recursion p_n = (s/n) sum_{l=1..n} l*lambda_l*p_{n-l}, p_0=e^{-s}.
std::vector<double> cpd_pmf_recursive(const CpdParams& params, std::size_t n_max);

std::size_t sample_cpd(const CpdParams& params, Stream& rng);
MarkedSample sample_cppp(const CpdParams& params, Stream& rng);

// lambda_ell = (D-1) D^{-ell}, the geometric multiplicity law with D > 1.
MultiplicityLaw polya_aeppli_multiplicity(double D, std::size_t finite_support = 8);

// (1/2) sum |p_n - q_n| with the leftover tail mass compared as one bucket.
double total_variation(const std::vector<double>& p, const std::vector<double>& q);

}  // namespace qhit
