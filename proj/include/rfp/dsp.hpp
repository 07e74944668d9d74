#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace rfp {

using cfloat = std::complex<float>;

// STFT geometry. Fixed by the preprocessing contract: 1024-sample frames,
// 128-point DFT, hop 8, output padded/cropped to 128x128.
constexpr int kFrameSamples = 1024;
constexpr int kNfft = 128;
constexpr int kHop = 8;
constexpr int kSpecSize = 128;
constexpr int kStftFrames = (kFrameSamples - kNfft) / kHop + 1;  // 113

// A labeled complex baseband capture, the raw input unit.
struct IQRecord {
    std::vector<cfloat> samples;
    int label = 0;
    std::map<std::string, std::string> meta;
};

// Exactly 1024 complex samples after pad/truncate.
struct IQFrame {
    std::vector<cfloat> samples;  // size kFrameSamples
};

// 128x128 non-negative magnitude grid, row-major (frequency rows, time cols).
struct Spectrogram {
    std::vector<float> values;  // kSpecSize * kSpecSize
    std::string provenance;

    float at(int freq, int time) const {
        return values[static_cast<size_t>(freq) * kSpecSize + time];
    }
    float& at(int freq, int time) {
        return values[static_cast<size_t>(freq) * kSpecSize + time];
    }
};

// Raw STFT magnitude before the square pad/crop: freq_bins x frames.
struct MagnitudeGrid {
    int freq_bins = 0;
    int frames = 0;
    std::vector<float> values;  // row-major, freq-major

    float at(int freq, int time) const {
        return values[static_cast<size_t>(freq) * frames + time];
    }
    float& at(int freq, int time) {
        return values[static_cast<size_t>(freq) * frames + time];
    }
};

// First 1024 samples, or zero-padded up to 1024. Throws data_error on empty
// input.
IQFrame frame_signal(const IQRecord& rec);

// Periodic Hann: w[k] = 0.5 (1 - cos(2 pi k / n)).
std::vector<float> hann_window(int n);

// In-place radix-2 complex FFT; n must be a power of two.
void fft_pow2(std::vector<cfloat>& buf);

// Full two-sided 128-bin magnitude STFT of a 1024-sample frame; frame m
// covers samples [mH, mH + 128), Hann-windowed. Complex input, so all 128
// bins are kept and no frequency shift is applied.
MagnitudeGrid stft_magnitude(const IQFrame& frame);

// Right-pad with zero columns or truncate the time axis to 128 columns.
// Optionally rotates frequency rows so DC lands in the middle (off by
// default; bin k stays at row k).
Spectrogram pad_crop_to_square(const MagnitudeGrid& raw, bool center_dc = false);

// frame_signal -> stft_magnitude -> pad_crop_to_square. No normalization.
Spectrogram iq_to_spectrogram(const IQRecord& rec, bool center_dc = false);

}  // namespace rfp
