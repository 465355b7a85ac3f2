#include "qhit/cpd.hpp"

#include <algorithm>
#include <cmath>

namespace qhit {

MultiplicityLaw::MultiplicityLaw(std::vector<double> probs, TailKind tail, double ratio)
    : probs_(std::move(probs)), tail_(tail), ratio_(ratio) {
    validate();
}

MultiplicityLaw MultiplicityLaw::truncated(std::vector<double> probs) {
    return MultiplicityLaw(std::move(probs), TailKind::truncated, 0.0);
}

MultiplicityLaw MultiplicityLaw::with_geometric_tail(std::vector<double> probs, double ratio) {
    return MultiplicityLaw(std::move(probs), TailKind::geometric, ratio);
}

void MultiplicityLaw::validate() const {
    if (probs_.empty()) throw ValidationError("multiplicity law needs at least one entry");
    for (double p : probs_)
        if (!(p >= 0.0) || p > 1.0 + 1e-15) throw ValidationError("multiplicity entry outside [0,1]");
    if (tail_ == TailKind::geometric) {
        if (!(ratio_ > 0.0) || !(ratio_ < 1.0))
            throw ValidationError("geometric tail ratio must lie in (0,1)");
    }
    if (std::abs(total_mass() - 1.0) > 1e-12)
        throw ValidationError("multiplicity law mass differs from 1");
}

double MultiplicityLaw::lambda(std::size_t ell) const {
    if (ell == 0) throw std::invalid_argument("cluster sizes start at 1");
    if (ell <= probs_.size()) return probs_[ell - 1];
    if (tail_ == TailKind::truncated) return 0.0;
    return probs_.back() * std::pow(ratio_, static_cast<double>(ell - probs_.size()));
}

double MultiplicityLaw::tail_mass() const {
    if (tail_ == TailKind::truncated) return 0.0;
    return probs_.back() * ratio_ / (1.0 - ratio_);
}

double MultiplicityLaw::total_mass() const {
    double m = 0.0;
    for (double p : probs_) m += p;
    return m + tail_mass();
}

double MultiplicityLaw::mean() const {
    double m = 0.0;
    for (std::size_t ell = 1; ell <= probs_.size(); ++ell)
        m += static_cast<double>(ell) * probs_[ell - 1];
    if (tail_ == TailKind::geometric) {
        // sum_{k>=1} (L+k) * lambda_L * r^k with L the finite support size
        const double L = static_cast<double>(probs_.size());
        const double r = ratio_;
        m += probs_.back() * (L * r / (1.0 - r) + r / ((1.0 - r) * (1.0 - r)));
    }
    return m;
}

std::size_t MultiplicityLaw::sample(Stream& rng) const {
    double u = rng.uniform();
    for (std::size_t ell = 1; ell <= probs_.size(); ++ell) {
        u -= probs_[ell - 1];
        if (u < 0.0) return ell;
    }
    if (tail_ == TailKind::geometric) {
        double lam = probs_.back();
        for (std::size_t ell = probs_.size() + 1; ell < probs_.size() + 100000; ++ell) {
            lam *= ratio_;
            u -= lam;
            if (u < 0.0) return ell;
        }
    }
    return probs_.size();  // rounding leftovers land on the last supported size
}

namespace {

// Enumerate integer compositions of n, accumulating s^l e^{-s}/l! * prod lambda
void compositions(const MultiplicityLaw& law, std::size_t remaining, std::size_t parts,
                  double weight, double s, double& acc) {
    if (remaining == 0) {
        double term = weight * std::exp(-s);
        for (std::size_t i = 0; i < parts; ++i) term *= s / static_cast<double>(i + 1);
        acc += term;
        return;
    }
    for (std::size_t part = 1; part <= remaining; ++part) {
        const double lam = law.lambda(part);
        if (lam == 0.0) continue;
        compositions(law, remaining - part, parts + 1, weight * lam, s, acc);
    }
}

}  // namespace

double cpd_pmf_direct(const CpdParams& params, std::size_t n) {
    if (n == 0) return std::exp(-params.intensity);
    if (n > 25) throw std::invalid_argument("direct pmf capped at n <= 25; use the recursion");
    double acc = 0.0;
    compositions(params.multiplicity, n, 0, 1.0, params.intensity, acc);
    return acc;
}

std::vector<double> cpd_pmf_recursive(const CpdParams& params, std::size_t n_max) {
    const double s = params.intensity;
    std::vector<double> p(n_max + 1, 0.0);
    p[0] = std::exp(-s);
    for (std::size_t n = 1; n <= n_max; ++n) {
        double acc = 0.0;
        for (std::size_t ell = 1; ell <= n; ++ell)
            acc += static_cast<double>(ell) * params.multiplicity.lambda(ell) * p[n - ell];
        p[n] = s / static_cast<double>(n) * acc;
    }
    return p;
}

std::size_t sample_cpd(const CpdParams& params, Stream& rng) {
    const std::size_t clusters = sample_poisson(params.intensity, rng);
    std::size_t total = 0;
    for (std::size_t j = 0; j < clusters; ++j) total += params.multiplicity.sample(rng);
    return total;
}

MarkedSample sample_cppp(const CpdParams& params, Stream& rng) {
    const std::size_t clusters = sample_poisson(params.intensity, rng);
    MarkedSample out;
    out.marks.reserve(clusters);
    for (std::size_t j = 0; j < clusters; ++j) {
        const double pos = rng.uniform();
        const std::size_t mult = params.multiplicity.sample(rng);
        out.marks.push_back({pos, mult});
    }
    std::sort(out.marks.begin(), out.marks.end(),
              [](const Mark& a, const Mark& b) { return a.position < b.position; });
    // coincident positions merge multiplicities (a.s. never happens here)
    std::vector<Mark> merged;
    for (const auto& m : out.marks) {
        if (!merged.empty() && merged.back().position == m.position)
            merged.back().multiplicity += m.multiplicity;
        else
            merged.push_back(m);
    }
    out.marks = std::move(merged);
    return out;
}

MultiplicityLaw polya_aeppli_multiplicity(double D, std::size_t finite_support) {
    if (!(D > 1.0)) throw std::domain_error("Polya-Aeppli parameter requires D > 1");
    std::vector<double> probs(finite_support);
    const double r = 1.0 / D;
    double lam = 1.0 - r;  // (D-1) D^{-1}
    for (std::size_t ell = 0; ell < finite_support; ++ell) {
        probs[ell] = lam;
        lam *= r;
    }
    return MultiplicityLaw::with_geometric_tail(std::move(probs), r);
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    const std::size_t n = std::max(p.size(), q.size());
    double acc = 0.0, mass_p = 0.0, mass_q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double pi = i < p.size() ? p[i] : 0.0;
        const double qi = i < q.size() ? q[i] : 0.0;
        acc += std::abs(pi - qi);
        mass_p += pi;
        mass_q += qi;
    }
    acc += std::abs(std::max(0.0, 1.0 - mass_p) - std::max(0.0, 1.0 - mass_q));
    return 0.5 * acc;
}

}  // namespace qhit
