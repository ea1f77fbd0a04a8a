#pragma once

#include <cmath>
#include <random>
#include <sstream>
#include <string_view>
#include <vector>

#include "san/common.hpp"

namespace san {

// Deterministic randomness. The engine is mt19937_64 (a named, standardized
// generator with identical output on every platform). Distributions are
// implemented here by hand because the std ones are implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next() { return eng_(); }

    // Uniform in [0,1) from the top 53 bits.
    double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

    // Unbiased integer in [0, n) by rejection sampling.
    uint64_t bounded(uint64_t n) {
        if (n == 0) throw Error("Rng::bounded: n must be positive");
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do { x = eng_(); } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller (cosine branch; one value per two draws).
    double normal() {
        double u1 = uniform(), u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    float normal(float mean, float stddev) {
        return mean + stddev * float(normal());
    }

    // In-place Fisher-Yates.
    template <class T>
    void shuffle(std::vector<T>& xs) {
        for (size_t i = xs.size(); i > 1; --i)
            std::swap(xs[i - 1], xs[bounded(i)]);
    }

    std::string state() const {
        std::ostringstream os;
        os << eng_;
        return os.str();
    }
    void set_state(const std::string& s) {
        std::istringstream is(s);
        is >> eng_;
        if (is.fail()) throw Error("Rng::set_state: malformed engine state");
    }

private:
    std::mt19937_64 eng_;
};

// Folds a tag into a seed so named sub-streams are independent (FNV-1a).
inline uint64_t mix_seed(uint64_t seed, std::string_view tag) {
    uint64_t h = 14695981039346656037ull ^ seed;
    for (char ch : tag) {
        h ^= uint64_t(uint8_t(ch));
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t mix_seed(uint64_t seed, uint64_t k) {
    uint64_t h = seed ^ (k + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2));
    h ^= h >> 33; h *= 0xff51afd7ed558ccdull;
    h ^= h >> 33; h *= 0xc4ceb9fe1a85ec53ull;
    h ^= h >> 33;
    return h;
}

} // namespace san
