#pragma once

#include <cmath>
#include <cstdint>

namespace rfp {

// splitmix64 finalizer, used to derive independent streams from (seed, index)
// pairs so that parallel generation order never changes record content.
inline uint64_t mix_seed(uint64_t seed, uint64_t index) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// PCG32 (XSH-RR variant, O'Neill 2014). Chosen over std::mt19937 +
// std::normal_distribution because the distributions below are fully
// specified here and therefore reproduce bit-exactly across platforms
// and standard libraries.
class Pcg32 {
public:
    explicit Pcg32(uint64_t seed, uint64_t stream = 0xda3e39cb94b95bdbULL) {
        inc_ = (stream << 1u) | 1u;
        state_ = 0u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    uint32_t next_u32() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    // uniform in [0, 1) with 24-bit resolution
    float next_float() {
        return static_cast<float>(next_u32() >> 8) * 0x1.0p-24f;
    }

    double next_double() {
        uint64_t hi = next_u32();
        uint64_t lo = next_u32();
        return static_cast<double>((hi << 21) ^ lo) * 0x1.0p-53;
    }

    // uniform in [lo, hi)
    float uniform(float lo, float hi) { return lo + (hi - lo) * next_float(); }

    int next_below(int n) {
        // modulo bias is irrelevant at our ranges (n << 2^32)
        return static_cast<int>(next_u32() % static_cast<uint32_t>(n));
    }

    // standard normal via Box-Muller; second value cached
    float gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double t = 6.283185307179586476925286766559 * u2;
        spare_ = static_cast<float>(r * std::sin(t));
        has_spare_ = true;
        return static_cast<float>(r * std::cos(t));
    }

    // normal clipped by rejection to |x| <= bound_sigmas
    float truncated_gaussian(float bound_sigmas = 2.0f) {
        float g = gaussian();
        while (std::fabs(g) > bound_sigmas) g = gaussian();
        return g;
    }

private:
    uint64_t state_ = 0;
    uint64_t inc_ = 0;
    bool has_spare_ = false;
    float spare_ = 0.0f;
};

}  // namespace rfp
