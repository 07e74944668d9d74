#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "rfp/dsp.hpp"
#include "rfp/errors.hpp"
#include "rfp/rng.hpp"

using namespace rfp;

namespace {

// naive O(N^2) direct DFT magnitude of one windowed frame
std::vector<double> dft_frame_ref(const std::vector<cfloat>& samples, int start,
                                  const std::vector<float>& window) {
    const int n = static_cast<int>(window.size());
    std::vector<double> mags(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
        double re = 0.0, im = 0.0;
        for (int t = 0; t < n; ++t) {
            const std::complex<double> s(samples[static_cast<size_t>(start + t)].real(),
                                         samples[static_cast<size_t>(start + t)].imag());
            const double w = window[static_cast<size_t>(t)];
            const double ang = -2.0 * M_PI * k * t / n;
            const std::complex<double> tw(std::cos(ang), std::sin(ang));
            const std::complex<double> v = s * w * tw;
            re += v.real();
            im += v.imag();
        }
        mags[static_cast<size_t>(k)] = std::sqrt(re * re + im * im);
    }
    return mags;
}

IQRecord random_record(int n, uint64_t seed) {
    Pcg32 rng(seed);
    IQRecord rec;
    rec.samples.resize(static_cast<size_t>(n));
    for (cfloat& s : rec.samples) s = cfloat(rng.gaussian(), rng.gaussian());
    return rec;
}

}  // namespace

TEST_SUITE_BEGIN("dsp");

TEST_CASE("frame_signal identity, truncate, pad") {
    IQRecord exact = random_record(1024, 1);
    IQFrame f = frame_signal(exact);
    CHECK(f.samples.size() == 1024);
    for (int i = 0; i < 1024; ++i) CHECK(f.samples[i] == exact.samples[i]);

    IQRecord longer = random_record(1030, 2);
    f = frame_signal(longer);
    for (int i = 0; i < 1024; ++i) CHECK(f.samples[i] == longer.samples[i]);

    IQRecord shorter = random_record(1000, 3);
    f = frame_signal(shorter);
    for (int i = 0; i < 1000; ++i) CHECK(f.samples[i] == shorter.samples[i]);
    for (int i = 1000; i < 1024; ++i) CHECK(f.samples[i] == cfloat(0.0f, 0.0f));

    IQRecord empty;
    CHECK_THROWS_AS(frame_signal(empty), data_error);
}

TEST_CASE("hann window endpoints and sum") {
    const auto w = hann_window(128);
    CHECK(w[0] == 0.0f);
    CHECK(w[64] == doctest::Approx(1.0f).epsilon(1e-7));
    double sum = 0.0;
    for (float v : w) sum += v;
    // periodic form sums to n/2
    CHECK(sum == doctest::Approx(64.0).epsilon(1e-6));
    CHECK_THROWS_AS(hann_window(1), config_error);
}

TEST_CASE("stft frame count and shapes") {
    IQRecord rec = random_record(1024, 4);
    MagnitudeGrid grid = stft_magnitude(frame_signal(rec));
    CHECK(grid.freq_bins == 128);
    CHECK(grid.frames == 113);
    CHECK(kStftFrames == 113);
}

TEST_CASE("all-zero frame gives all-zero grid") {
    IQFrame f;
    f.samples.assign(1024, cfloat(0.0f, 0.0f));
    MagnitudeGrid grid = stft_magnitude(f);
    for (float v : grid.values) CHECK(v == 0.0f);
}

TEST_CASE("stft matches naive DFT oracle on random frames") {
    const auto window = hann_window(kNfft);
    double max_diff = 0.0;
    for (uint64_t seed = 0; seed < 100; ++seed) {
        IQRecord rec = random_record(1024, 1000 + seed);
        IQFrame frame = frame_signal(rec);
        MagnitudeGrid grid = stft_magnitude(frame);
        // spot-check a handful of time frames per record to keep runtime sane
        for (int m : {0, 37, 112}) {
            const auto ref = dft_frame_ref(frame.samples, m * kHop, window);
            for (int k = 0; k < kNfft; ++k)
                max_diff = std::max(max_diff,
                                    std::fabs(static_cast<double>(grid.at(k, m)) - ref[k]));
        }
    }
    CHECK(max_diff <= 1e-4);
}

TEST_CASE("pad_crop_to_square pads, passes, truncates") {
    MagnitudeGrid raw;
    raw.freq_bins = 128;
    raw.frames = 113;
    raw.values.assign(128 * 113, 1.0f);
    Spectrogram s = pad_crop_to_square(raw);
    for (int k = 0; k < 128; ++k)
        for (int m = 113; m < 128; ++m) CHECK(s.at(k, m) == 0.0f);
    for (int k = 0; k < 128; ++k) CHECK(s.at(k, 0) == 1.0f);

    raw.frames = 128;
    raw.values.assign(128 * 128, 0.0f);
    for (size_t i = 0; i < raw.values.size(); ++i) raw.values[i] = static_cast<float>(i % 97);
    Spectrogram ident = pad_crop_to_square(raw);
    for (int k = 0; k < 128; ++k)
        for (int m = 0; m < 128; ++m) CHECK(ident.at(k, m) == raw.at(k, m));

    raw.frames = 200;
    raw.values.assign(128 * 200, 2.0f);
    Spectrogram cut = pad_crop_to_square(raw);
    CHECK(cut.values.size() == 128 * 128);
    for (float v : cut.values) CHECK(v == 2.0f);

    raw.freq_bins = 64;
    raw.values.assign(64 * 200, 0.0f);
    CHECK_THROWS_AS(pad_crop_to_square(raw), data_error);
}

TEST_CASE("constant signal concentrates in the DC row") {
    IQRecord rec;
    rec.samples.assign(1024, cfloat(1.0f, 0.0f));
    Spectrogram s = iq_to_spectrogram(rec);
    for (int m = 0; m < kStftFrames; ++m) {
        const float dc = s.at(0, m);
        CHECK(dc > 0.0f);
        for (int k = 1; k < 128; ++k) CHECK(dc > s.at(k, m));
    }
}

TEST_CASE("zero signal gives zero spectrogram") {
    IQRecord rec;
    rec.samples.assign(512, cfloat(0.0f, 0.0f));
    Spectrogram s = iq_to_spectrogram(rec);
    for (float v : s.values) CHECK(v == 0.0f);
}

TEST_CASE("complex exponential lands in bin 16") {
    IQRecord rec;
    rec.samples.resize(1024);
    for (int n = 0; n < 1024; ++n) {
        const double ang = 2.0 * M_PI * 16.0 * n / 128.0;
        rec.samples[static_cast<size_t>(n)] =
            cfloat(static_cast<float>(std::cos(ang)), static_cast<float>(std::sin(ang)));
    }
    Spectrogram s = iq_to_spectrogram(rec);
    for (int m = 0; m < kStftFrames; ++m)
        for (int k = 0; k < 128; ++k)
            if (k != 16) CHECK(s.at(16, m) > s.at(k, m));
}

TEST_CASE("magnitude scales linearly with positive gain") {
    IQRecord rec = random_record(1024, 77);
    IQRecord scaled = rec;
    for (cfloat& v : scaled.samples) v *= 3.0f;
    Spectrogram a = iq_to_spectrogram(rec);
    Spectrogram b = iq_to_spectrogram(scaled);
    for (size_t i = 0; i < a.values.size(); ++i)
        CHECK(b.values[i] == doctest::Approx(3.0f * a.values[i]).epsilon(1e-5));
}

TEST_CASE("impulse shifted by one hop moves one time column") {
    auto dominant_col = [](const Spectrogram& s, int probe_row) {
        int best = 0;
        for (int m = 1; m < 128; ++m)
            if (s.at(probe_row, m) > s.at(probe_row, best)) best = m;
        return best;
    };
    IQRecord rec;
    rec.samples.assign(1024, cfloat(0.0f, 0.0f));
    const int pos = 512;  // away from frame boundaries
    rec.samples[pos] = cfloat(1.0f, 0.0f);
    IQRecord shifted;
    shifted.samples.assign(1024, cfloat(0.0f, 0.0f));
    shifted.samples[pos + kHop] = cfloat(1.0f, 0.0f);
    const int c0 = dominant_col(iq_to_spectrogram(rec), 5);
    const int c1 = dominant_col(iq_to_spectrogram(shifted), 5);
    CHECK(c1 == c0 + 1);
}

TEST_CASE("output is always 128x128 regardless of input length") {
    for (int n : {100, 1024, 5000}) {
        Spectrogram s = iq_to_spectrogram(random_record(n, static_cast<uint64_t>(n)));
        CHECK(s.values.size() == 128 * 128);
        for (float v : s.values) {
            CHECK(v >= 0.0f);
            CHECK(std::isfinite(v));
        }
    }
}

TEST_CASE("center_dc flag rotates rows") {
    IQRecord rec;
    rec.samples.assign(1024, cfloat(1.0f, 0.0f));  // DC tone
    Spectrogram plain = iq_to_spectrogram(rec, false);
    Spectrogram centered = iq_to_spectrogram(rec, true);
    CHECK(plain.at(0, 0) > 0.0f);
    CHECK(centered.at(64, 0) == plain.at(0, 0));
}

TEST_SUITE_END();
