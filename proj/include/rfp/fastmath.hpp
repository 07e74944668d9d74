#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>

namespace rfp {

// Cephes-style expf, ~2 ulp, pure arithmetic so the compiler can vectorize
// the loops it sits in. The clamp keeps the 2^n reconstruction in range;
// softmax callers subtract the row max first, so their arguments are <= 0.
inline float fast_expf(float x) {
    x = std::min(88.02f, std::max(-87.33f, x));
    const float n = std::floor(x * 1.44269504088896341f + 0.5f);
    float r = x - n * 0.693359375f;
    r -= n * -2.12194440e-4f;
    float p = 1.9875691500e-4f;
    p = p * r + 1.3981999507e-3f;
    p = p * r + 8.3334519073e-3f;
    p = p * r + 4.1665795894e-2f;
    p = p * r + 1.6666665459e-1f;
    p = p * r + 5.0000001201e-1f;
    float y = p * r * r + r + 1.0f;
    int32_t bits;
    std::memcpy(&bits, &y, 4);
    bits += static_cast<int32_t>(n) << 23;
    std::memcpy(&y, &bits, 4);
    return y;
}

inline float fast_tanhf(float x) {
    const float ax = std::fabs(x);
    const float e = fast_expf(2.0f * std::min(ax, 9.0f));
    const float t = 1.0f - 2.0f / (e + 1.0f);
    return x >= 0.0f ? t : -t;
}

}  // namespace rfp
