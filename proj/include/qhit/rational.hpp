#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <stdexcept>
#include <string>

namespace qhit {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Safety valve for orbit arithmetic: mod-1 affine maps with rational data keep
// denominators bounded by products of slope denominators, but nothing enforces
// that for arbitrary configs.
inline constexpr unsigned kRationalBitCap = 4096;

struct OrbitOverflowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline bool rational_oversized(const Rational& r) {
    const BigInt num = boost::multiprecision::numerator(r);
    const BigInt den = boost::multiprecision::denominator(r);
    auto bits = [](const BigInt& v) -> unsigned {
        return v == 0 ? 0u : static_cast<unsigned>(boost::multiprecision::msb(boost::multiprecision::abs(v))) + 1u;
    };
    return bits(num) > kRationalBitCap || bits(den) > kRationalBitCap;
}

inline void guard_size(const Rational& r) {
    if (rational_oversized(r)) throw OrbitOverflowError("rational exceeds bit-size cap");
}

inline BigInt floor_div(const BigInt& a, const BigInt& b) {
    BigInt q = a / b;
    if ((a % b) != 0 && ((a < 0) != (b < 0))) --q;
    return q;
}

// Reduce into [0,1).
inline Rational mod1(const Rational& x) {
    const BigInt num = boost::multiprecision::numerator(x);
    const BigInt den = boost::multiprecision::denominator(x);
    return x - Rational(floor_div(num, den));
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

// Accepts "p/q", "p" or "-p/q".
inline Rational parse_rational(const std::string& s) {
    const auto slash = s.find('/');
    try {
        if (slash == std::string::npos) return Rational(BigInt(s));
        BigInt p(s.substr(0, slash));
        BigInt q(s.substr(slash + 1));
        if (q == 0) throw std::invalid_argument("zero denominator");
        return Rational(p, q);
    } catch (const std::exception&) {
        throw std::invalid_argument("bad rational literal: '" + s + "'");
    }
}

inline std::string to_string(const Rational& r) {
    const BigInt num = boost::multiprecision::numerator(r);
    const BigInt den = boost::multiprecision::denominator(r);
    if (den == 1) return num.str();
    return num.str() + "/" + den.str();
}

}  // namespace qhit
