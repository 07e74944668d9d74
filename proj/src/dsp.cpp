#include "rfp/dsp.hpp"

#include <cmath>

#include "rfp/errors.hpp"

namespace rfp {

IQFrame frame_signal(const IQRecord& rec) {
    if (rec.samples.empty()) throw data_error("frame_signal: empty IQ record");
    IQFrame f;
    f.samples.assign(kFrameSamples, cfloat(0.0f, 0.0f));
    const size_t n = std::min(rec.samples.size(), static_cast<size_t>(kFrameSamples));
    for (size_t i = 0; i < n; ++i) f.samples[i] = rec.samples[i];
    return f;
}

std::vector<float> hann_window(int n) {
    if (n < 2) throw config_error("hann_window: n must be >= 2");
    std::vector<float> w(static_cast<size_t>(n));
    const double step = 2.0 * M_PI / n;
    for (int k = 0; k < n; ++k)
        w[static_cast<size_t>(k)] = static_cast<float>(0.5 * (1.0 - std::cos(step * k)));
    return w;
}

void fft_pow2(std::vector<cfloat>& buf) {
    const size_t n = buf.size();
    if (n == 0 || (n & (n - 1)) != 0) throw config_error("fft_pow2: size must be a power of two");
    // bit-reversal permutation
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(buf[i], buf[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / static_cast<double>(len);
        const cfloat wl(static_cast<float>(std::cos(ang)), static_cast<float>(std::sin(ang)));
        for (size_t i = 0; i < n; i += len) {
            cfloat w(1.0f, 0.0f);
            for (size_t j = 0; j < len / 2; ++j) {
                const cfloat u = buf[i + j];
                const cfloat v = buf[i + j + len / 2] * w;
                buf[i + j] = u + v;
                buf[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

MagnitudeGrid stft_magnitude(const IQFrame& frame) {
    if (frame.samples.size() != static_cast<size_t>(kFrameSamples))
        throw data_error("stft_magnitude: frame length " + std::to_string(frame.samples.size()) +
                         ", expected " + std::to_string(kFrameSamples));
    static const std::vector<float> window = hann_window(kNfft);

    MagnitudeGrid grid;
    grid.freq_bins = kNfft;
    grid.frames = kStftFrames;
    grid.values.assign(static_cast<size_t>(kNfft) * kStftFrames, 0.0f);

    std::vector<cfloat> buf(static_cast<size_t>(kNfft));
    for (int m = 0; m < kStftFrames; ++m) {
        const int start = m * kHop;
        for (int i = 0; i < kNfft; ++i)
            buf[static_cast<size_t>(i)] =
                frame.samples[static_cast<size_t>(start + i)] * window[static_cast<size_t>(i)];
        fft_pow2(buf);
        for (int k = 0; k < kNfft; ++k) grid.at(k, m) = std::abs(buf[static_cast<size_t>(k)]);
    }
    return grid;
}

Spectrogram pad_crop_to_square(const MagnitudeGrid& raw, bool center_dc) {
    if (raw.freq_bins != kSpecSize)
        throw data_error("pad_crop_to_square: expected " + std::to_string(kSpecSize) +
                         " frequency rows, got " + std::to_string(raw.freq_bins));
    Spectrogram spec;
    spec.values.assign(static_cast<size_t>(kSpecSize) * kSpecSize, 0.0f);
    const int t = std::min(raw.frames, kSpecSize);
    for (int k = 0; k < kSpecSize; ++k) {
        const int row = center_dc ? (k + kSpecSize / 2) % kSpecSize : k;
        for (int m = 0; m < t; ++m) spec.at(row, m) = raw.at(k, m);
    }
    return spec;
}

Spectrogram iq_to_spectrogram(const IQRecord& rec, bool center_dc) {
    return pad_crop_to_square(stft_magnitude(frame_signal(rec)), center_dc);
}

}  // namespace rfp
