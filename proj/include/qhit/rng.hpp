#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace qhit {

// splitmix64 stream. Small state, cheap to derive one stream per Monte Carlo
// replicate from (master seed, task index), which keeps results independent of
// thread scheduling.
class Stream {
  public:
    explicit Stream(std::uint64_t seed) : state_(seed) {}

    static Stream derive(std::uint64_t master, std::uint64_t index) {
        Stream s(master);
        std::uint64_t a = s.next();
        std::uint64_t b = mix(index + 0x9e3779b97f4a7c15ULL);
        return Stream(mix(a ^ b));
    }

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform in {0,...,n-1}
    std::uint64_t below(std::uint64_t n) { return next() % n; }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdULL;
        z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ULL;
        return z ^ (z >> 33);
    }
    std::uint64_t state_;
};

// Knuth product method; fine for the small intensities used here.
inline std::size_t sample_poisson(double s, Stream& rng) {
    if (!(s > 0.0)) throw std::invalid_argument("poisson intensity must be positive");
    if (s > 50.0) throw std::invalid_argument("poisson intensity out of supported range");
    const double limit = std::exp(-s);
    std::size_t k = 0;
    double p = 1.0;
    for (;;) {
        p *= rng.uniform();
        if (p <= limit) return k;
        ++k;
    }
}

}  // namespace qhit
