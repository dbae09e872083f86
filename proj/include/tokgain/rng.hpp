#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace tokgain {

// Deterministic random source. mt19937_64 output is pinned by the standard;
// the derived draws below avoid std::uniform_*_distribution, whose results
// are implementation-defined, so seeded runs are bit-identical everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    // [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // n must be positive.
    std::uint64_t below(std::uint64_t n) { return eng_() % n; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
};

} // namespace tokgain
