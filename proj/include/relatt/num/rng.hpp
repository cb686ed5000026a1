#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace relatt {

// Every run draws all of its randomness from one master seed. Independent
// phases get independent streams derived as
//   stream_seed = splitmix64(master_seed ^ splitmix64(tag + lane * 0x9E3779B97F4A7C15))
// so re-running a single phase is reproducible on its own. mt19937_64 and the
// hand-rolled distributions below are fully specified, so sequences are
// identical across platforms and standard libraries.
enum class RngStream : std::uint64_t {
    Init = 1,       // parameter / embedding initialization
    Negatives = 2,  // negative sampling per epoch
    Dropout = 3,    // hidden + attention dropout masks
    Sampling = 4,   // query neighbor sampling
    Synth = 5,      // synthetic fixture generation
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static Rng stream(std::uint64_t master_seed, RngStream s, std::uint64_t lane = 0) {
        std::uint64_t tag = splitmix64(static_cast<std::uint64_t>(s) +
                                       lane * 0x9E3779B97F4A7C15ULL);
        return Rng(splitmix64(master_seed ^ tag));
    }

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1) with 53 random bits
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // unbiased integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t bound = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= bound);
        return x % n;
    }

    int below_int(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

    // Box-Muller; one draw per call keeps the stream position deterministic.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

private:
    std::mt19937_64 engine_;
};

// Stable 64-bit FNV-1a, used for config hashing (std::hash is not portable).
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace relatt
