#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qhit/rational.hpp"

namespace qhit {

// One affine piece of a mod-1 interval map: x in [lo,hi) maps to
// (slope*x + intercept) mod 1. Pieces are the maximal intervals on which the
// real-valued affine law is used; full-branch surjectivity is checked on the
// circle, where the mod-1 extension of a full-branch map is continuous.
struct Branch {
    Rational lo, hi, slope, intercept;
};

enum class MapKind { piecewise_linear_exact, general_numeric };

class BranchMap {
  public:
    explicit BranchMap(std::vector<Branch> branches, MapKind kind = MapKind::piecewise_linear_exact);

    const std::vector<Branch>& branches() const { return branches_; }
    MapKind kind() const { return kind_; }

    // Exact image; defined everywhere on [0,1) via the half-open branch
    // convention (the circle extension).
    Rational apply(const Rational& x) const;
    double apply(double x) const;

    Rational slope_at(const Rational& x) const;  // absolute slope of the containing branch
    double slope_at(double x) const;

    bool is_breakpoint(const Rational& x) const;
    // Breakpoint with differing |slope| on the two sides: the Jacobian is
    // ambiguous there and targets must avoid such points.
    bool jacobian_ambiguous_at(const Rational& x) const;

    Rational d_min() const;

  private:
    std::size_t branch_index(const Rational& x) const;
    std::size_t branch_index(double x) const;

    std::vector<Branch> branches_;
    MapKind kind_;
    // cached doubles for the Monte Carlo path
    std::vector<double> lo_d_, slope_d_, intercept_d_;
};

class MapFamily {
  public:
    explicit MapFamily(std::vector<BranchMap> maps);
    const std::vector<BranchMap>& maps() const { return maps_; }
    const BranchMap& map(int symbol) const { return maps_.at(static_cast<std::size_t>(symbol)); }
    int alphabet() const { return static_cast<int>(maps_.size()); }
    Rational d_min() const;

  private:
    std::vector<BranchMap> maps_;
};

struct MapReport {
    bool valid = true;
    int branch_count = 0;
    double d_min = 0.0;
    bool full_branch = false;         // constant covering degree on the circle
    int degree = 0;
    bool lebesgue_preserving = false; // sum of 1/|slope| over preimages == 1 everywhere
    std::vector<std::string> issues;
};

struct FamilyReport {
    bool valid = true;
    double d_min = 0.0;
    bool lebesgue_preserving = false;
    std::vector<MapReport> per_map;
    std::vector<std::string> issues;
};

FamilyReport validate_family(const MapFamily& family);

struct Word {
    std::vector<int> symbols;
    std::size_t length() const { return symbols.size(); }
    int operator[](std::size_t i) const { return symbols[i]; }
};

// Orbit (x, T_w x, ..., T_w^n x) under the word-indexed cocycle composition.
std::vector<Rational> iterate(const MapFamily& family, const Word& word, const Rational& x,
                              std::size_t n);

// Product of absolute branch slopes along the orbit; 1 for n = 0.
Rational derivative_along(const MapFamily& family, const Word& word, const Rational& x,
                          std::size_t n);

}  // namespace qhit
