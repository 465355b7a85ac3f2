#include "qhit/interval_system.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace qhit {

BranchMap::BranchMap(std::vector<Branch> branches, MapKind kind)
    : branches_(std::move(branches)), kind_(kind) {
    if (branches_.empty()) throw std::invalid_argument("map needs at least one branch");
    std::sort(branches_.begin(), branches_.end(),
              [](const Branch& a, const Branch& b) { return a.lo < b.lo; });
    for (const auto& b : branches_) {
        lo_d_.push_back(to_double(b.lo));
        slope_d_.push_back(to_double(b.slope));
        intercept_d_.push_back(to_double(b.intercept));
    }
}

std::size_t BranchMap::branch_index(const Rational& x) const {
    for (std::size_t i = branches_.size(); i-- > 0;)
        if (x >= branches_[i].lo) return i;
    return 0;
}

std::size_t BranchMap::branch_index(double x) const {
    for (std::size_t i = lo_d_.size(); i-- > 0;)
        if (x >= lo_d_[i]) return i;
    return 0;
}

Rational BranchMap::apply(const Rational& x) const {
    const Branch& b = branches_[branch_index(x)];
    Rational y = mod1(b.slope * x + b.intercept);
    guard_size(y);
    return y;
}

double BranchMap::apply(double x) const {
    const std::size_t i = branch_index(x);
    double y = slope_d_[i] * x + intercept_d_[i];
    y -= std::floor(y);
    if (y >= 1.0) y = 0.0;
    return y;
}

Rational BranchMap::slope_at(const Rational& x) const {
    Rational s = branches_[branch_index(x)].slope;
    return s < 0 ? Rational(-s) : s;
}

double BranchMap::slope_at(double x) const { return std::abs(slope_d_[branch_index(x)]); }

bool BranchMap::is_breakpoint(const Rational& x) const {
    for (const auto& b : branches_)
        if (x == b.lo || x == b.hi) return true;
    return false;
}

bool BranchMap::jacobian_ambiguous_at(const Rational& x) const {
    if (!is_breakpoint(x)) return false;
    // slope on the left side vs the slope of the branch owning x
    const std::size_t i = branch_index(x);
    if (x != branches_[i].lo) return false;  // x == hi of the last branch: no right side
    const std::size_t left = i == 0 ? branches_.size() - 1 : i - 1;
    return abs(branches_[left].slope) != abs(branches_[i].slope);
}

Rational BranchMap::d_min() const {
    Rational m = abs(branches_.front().slope);
    for (const auto& b : branches_) m = std::min(m, Rational(abs(b.slope)));
    return m;
}

MapFamily::MapFamily(std::vector<BranchMap> maps) : maps_(std::move(maps)) {
    if (maps_.empty()) throw std::invalid_argument("family needs at least one map");
}

Rational MapFamily::d_min() const {
    Rational m = maps_.front().d_min();
    for (const auto& t : maps_) m = std::min(m, t.d_min());
    return m;
}

namespace {

MapReport validate_map(const BranchMap& map) {
    MapReport rep;
    const auto& br = map.branches();
    rep.branch_count = static_cast<int>(br.size());

    // domains partition [0,1)
    if (br.front().lo != 0) {
        rep.valid = false;
        rep.issues.push_back("branch domains do not start at 0");
    }
    if (br.back().hi != 1) {
        rep.valid = false;
        rep.issues.push_back("branch domains do not end at 1");
    }
    for (std::size_t i = 0; i + 1 < br.size(); ++i) {
        if (br[i].hi != br[i + 1].lo) {
            rep.valid = false;
            rep.issues.push_back("branch domains leave a gap or overlap at branch " +
                                 std::to_string(i));
        }
    }
    for (std::size_t i = 0; i < br.size(); ++i) {
        if (!(br[i].lo < br[i].hi)) {
            rep.valid = false;
            rep.issues.push_back("empty branch domain at branch " + std::to_string(i));
        }
        if (abs(br[i].slope) <= 1) {
            rep.valid = false;
            rep.issues.push_back("branch " + std::to_string(i) +
                                 " violates expansion: |slope| = " + to_string(abs(br[i].slope)));
        }
    }
    if (!rep.valid) return rep;

    rep.d_min = to_double(map.d_min());

    // circle continuity of the mod-1 extension: the images at shared
    // endpoints must agree mod 1 (full-branch maps wrap continuously)
    auto image_at = [](const Branch& b, const Rational& x) { return mod1(b.slope * x + b.intercept); };
    bool continuous = true;
    for (std::size_t i = 0; i < br.size(); ++i) {
        const Branch& cur = br[i];
        const Branch& nxt = br[(i + 1) % br.size()];
        const Rational boundary = cur.hi == 1 ? Rational(0) : cur.hi;
        const Rational left = mod1(cur.slope * cur.hi + cur.intercept);
        const Rational right = image_at(nxt, boundary == 0 ? Rational(0) : boundary);
        if (mod1(left - right) != 0) continuous = false;
    }

    // Covering degree / Lebesgue preservation, checked exactly: the
    // pushforward density at y is sum over preimages of 1/|slope|, piecewise
    // constant between images of branch endpoints. Evaluate on midpoints.
    std::set<Rational> cuts;
    cuts.insert(Rational(0));
    cuts.insert(Rational(1));
    for (const auto& b : br) {
        cuts.insert(mod1(b.slope * b.lo + b.intercept));
        cuts.insert(mod1(b.slope * b.hi + b.intercept));
    }
    std::vector<Rational> sorted(cuts.begin(), cuts.end());
    bool constant_degree = true, preserves = true;
    int degree = -1;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const Rational y = (sorted[i] + sorted[i + 1]) / 2;
        Rational density(0);
        int count = 0;
        for (const auto& b : br) {
            // solve slope*x + intercept = y + k for integer k with x in [lo,hi)
            const Rational lo_v = b.slope * b.lo + b.intercept;
            const Rational hi_v = b.slope * b.hi + b.intercept;
            const Rational vmin = std::min(lo_v, hi_v);
            const Rational vmax = std::max(lo_v, hi_v);
            const Rational diff = vmin - y;
            BigInt k = floor_div(boost::multiprecision::numerator(diff),
                                 boost::multiprecision::denominator(diff));
            for (Rational v = y + Rational(k); v <= vmax + 1; v += 1) {
                if (v < vmin) continue;
                const Rational x = (v - b.intercept) / b.slope;
                if (x >= b.lo && x < b.hi) {
                    ++count;
                    density += 1 / abs(b.slope);
                }
            }
        }
        if (degree == -1) degree = count;
        if (count != degree) constant_degree = false;
        if (density != 1) preserves = false;
    }

    rep.degree = degree;
    rep.full_branch = continuous && constant_degree && degree >= 1;
    rep.lebesgue_preserving = preserves;
    if (!rep.full_branch) {
        rep.valid = false;
        rep.issues.push_back("map is not full-branch on the circle (covering degree not constant)");
    }
    return rep;
}

}  // namespace

FamilyReport validate_family(const MapFamily& family) {
    FamilyReport rep;
    rep.lebesgue_preserving = true;
    double dmin = 0.0;
    bool first = true;
    for (std::size_t v = 0; v < family.maps().size(); ++v) {
        MapReport m = validate_map(family.maps()[v]);
        if (!m.valid) {
            rep.valid = false;
            for (const auto& msg : m.issues)
                rep.issues.push_back("map " + std::to_string(v) + ": " + msg);
        }
        rep.lebesgue_preserving = rep.lebesgue_preserving && m.lebesgue_preserving;
        if (m.valid) {
            dmin = first ? m.d_min : std::min(dmin, m.d_min);
            first = false;
        }
        rep.per_map.push_back(std::move(m));
    }
    rep.d_min = dmin;
    return rep;
}

std::vector<Rational> iterate(const MapFamily& family, const Word& word, const Rational& x,
                              std::size_t n) {
    if (n > word.length()) throw std::invalid_argument("word shorter than requested orbit");
    std::vector<Rational> orbit;
    orbit.reserve(n + 1);
    orbit.push_back(x);
    Rational cur = x;
    for (std::size_t i = 0; i < n; ++i) {
        cur = family.map(word[i]).apply(cur);
        orbit.push_back(cur);
    }
    return orbit;
}

Rational derivative_along(const MapFamily& family, const Word& word, const Rational& x,
                          std::size_t n) {
    if (n > word.length()) throw std::invalid_argument("word shorter than requested orbit");
    Rational jac(1);
    Rational cur = x;
    for (std::size_t i = 0; i < n; ++i) {
        const BranchMap& map = family.map(word[i]);
        jac *= map.slope_at(cur);
        cur = map.apply(cur);
    }
    return jac;
}

}  // namespace qhit
