#include "rfp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "rfp/errors.hpp"
#include "rfp/rng.hpp"

namespace rfp {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Root-raised-cosine taps spanning `span` symbols each side, scaled so a
// unit-power symbol stream keeps unit mean sample power after shaping.
std::vector<float> rrc_taps(int sps, float rolloff, int span = 6) {
    const double beta = rolloff;
    std::vector<float> taps;
    taps.reserve(static_cast<size_t>(2 * span * sps + 1));
    for (int i = -span * sps; i <= span * sps; ++i) {
        const double t = static_cast<double>(i) / sps;  // in symbols
        double h;
        if (i == 0) {
            h = 1.0 - beta + 4.0 * beta / kPi;
        } else if (beta > 0.0 && std::fabs(std::fabs(t) - 1.0 / (4.0 * beta)) < 1e-9) {
            h = (beta / std::sqrt(2.0)) * ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * beta)) +
                                           (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * beta)));
        } else {
            const double num =
                std::sin(kPi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(kPi * t * (1.0 + beta));
            const double den = kPi * t * (1.0 - 16.0 * beta * beta * t * t);
            h = num / den;
        }
        taps.push_back(static_cast<float>(h));
    }
    double energy = 0.0;
    for (float v : taps) energy += static_cast<double>(v) * v;
    const float s = static_cast<float>(std::sqrt(sps / energy));
    for (float& v : taps) v *= s;
    return taps;
}

std::vector<cfloat> shape_symbols(const std::vector<cfloat>& sym, int sps, int n_samples,
                                  const std::vector<float>& taps) {
    // upsampled impulse train convolved with taps, centered so sample 0
    // sits on the first symbol instant
    const int half = (static_cast<int>(taps.size()) - 1) / 2;
    std::vector<cfloat> out(static_cast<size_t>(n_samples), cfloat(0.0f, 0.0f));
    for (int n = 0; n < n_samples; ++n) {
        cfloat acc(0.0f, 0.0f);
        for (int t = 0; t < static_cast<int>(taps.size()); ++t) {
            const int idx = n + half - t;  // index into the upsampled train
            if (idx < 0) continue;
            if (idx % sps != 0) continue;
            const int s = idx / sps;
            if (s >= static_cast<int>(sym.size())) continue;
            acc += sym[static_cast<size_t>(s)] * taps[static_cast<size_t>(t)];
        }
        out[static_cast<size_t>(n)] = acc;
    }
    return out;
}

}  // namespace

const char* modulation_name(Modulation m) {
    switch (m) {
        case Modulation::BPSK: return "bpsk";
        case Modulation::QPSK: return "qpsk";
        case Modulation::PSK8: return "8psk";
        case Modulation::QAM16: return "qam16";
        case Modulation::QAM64: return "qam64";
        case Modulation::FSK2: return "fsk2";
        case Modulation::AM_TONE: return "am_tone";
    }
    return "unknown";
}

Modulation modulation_from_name(const std::string& name) {
    for (Modulation m : {Modulation::BPSK, Modulation::QPSK, Modulation::PSK8, Modulation::QAM16,
                         Modulation::QAM64, Modulation::FSK2, Modulation::AM_TONE})
        if (name == modulation_name(m)) return m;
    throw config_error("unknown modulation: " + name);
}

std::vector<cfloat> constellation(Modulation m) {
    switch (m) {
        case Modulation::BPSK:
            return {cfloat(1, 0), cfloat(-1, 0)};
        case Modulation::QPSK: {
            const float a = 1.0f / std::sqrt(2.0f);
            return {cfloat(a, a), cfloat(-a, a), cfloat(-a, -a), cfloat(a, -a)};
        }
        case Modulation::PSK8: {
            std::vector<cfloat> pts;
            for (int k = 0; k < 8; ++k) {
                const double ang = 2.0 * kPi * k / 8.0;
                pts.emplace_back(static_cast<float>(std::cos(ang)),
                                 static_cast<float>(std::sin(ang)));
            }
            return pts;
        }
        case Modulation::QAM16: {
            std::vector<cfloat> pts;
            const float s = 1.0f / std::sqrt(10.0f);
            for (int i : {-3, -1, 1, 3})
                for (int q : {-3, -1, 1, 3}) pts.emplace_back(i * s, q * s);
            return pts;
        }
        case Modulation::QAM64: {
            std::vector<cfloat> pts;
            const float s = 1.0f / std::sqrt(42.0f);
            for (int i : {-7, -5, -3, -1, 1, 3, 5, 7})
                for (int q : {-7, -5, -3, -1, 1, 3, 5, 7}) pts.emplace_back(i * s, q * s);
            return pts;
        }
        default:
            throw config_error(std::string("no constellation for ") + modulation_name(m));
    }
}

void ChannelConfig::validate() const {
    if (!std::isfinite(snr_db)) throw config_error("channel: snr_db must be finite");
    if (!(std::fabs(cfo_norm) < 0.5f)) throw config_error("channel: |cfo_norm| must be < 0.5");
    if (!multipath_taps.empty() && std::abs(multipath_taps[0]) == 0.0f)
        throw config_error("channel: first multipath tap must be nonzero");
}

void DatasetSpec::validate() const {
    if (classes.empty()) throw config_error("dataset: no classes");
    if (per_class_count < 10) throw config_error("dataset: per_class_count must be >= 10");
    const float s = split[0] + split[1] + split[2];
    if (std::fabs(s - 1.0f) > 1e-6f) throw config_error("dataset: split fractions must sum to 1");
    for (const ModScheme& c : classes)
        if (c.samples_per_symbol < 2) throw config_error("dataset: samples_per_symbol must be >= 2");
}

IQRecord generate_record(const ModScheme& scheme, int n_samples, const ChannelConfig& chan,
                         uint64_t seed) {
    if (n_samples < 1) throw config_error("generate_record: n_samples must be >= 1");
    chan.validate();
    Pcg32 rng(seed);
    const int sps = scheme.samples_per_symbol;

    std::vector<cfloat> sig;
    switch (scheme.kind) {
        case Modulation::FSK2: {
            // binary CPFSK, modulation index 1: +-0.5/sps cycles per sample
            const int nsym = (n_samples + sps - 1) / sps;
            std::vector<int> bits(static_cast<size_t>(nsym));
            for (int& b : bits) b = rng.next_below(2) * 2 - 1;
            sig.resize(static_cast<size_t>(n_samples));
            double phase = 0.0;
            const double step = kPi / sps;  // 2*pi * 0.5/sps
            for (int n = 0; n < n_samples; ++n) {
                phase += step * bits[static_cast<size_t>(n / sps)];
                sig[static_cast<size_t>(n)] = cfloat(static_cast<float>(std::cos(phase)),
                                                     static_cast<float>(std::sin(phase)));
            }
            break;
        }
        case Modulation::AM_TONE: {
            // amplitude-modulated complex tone, normalized to unit mean power
            const double fc = 0.1, fm = 1.0 / (4.0 * sps), depth = 0.5;
            const double norm = 1.0 / std::sqrt(1.0 + depth * depth / 2.0);
            sig.resize(static_cast<size_t>(n_samples));
            for (int n = 0; n < n_samples; ++n) {
                const double a = (1.0 + depth * std::cos(2.0 * kPi * fm * n)) * norm;
                sig[static_cast<size_t>(n)] =
                    cfloat(static_cast<float>(a * std::cos(2.0 * kPi * fc * n)),
                           static_cast<float>(a * std::sin(2.0 * kPi * fc * n)));
            }
            break;
        }
        default: {
            const std::vector<cfloat> pts = constellation(scheme.kind);
            const int span = 6;
            const int extra = (scheme.pulse == PulseShape::RootRaisedCosine) ? span : 0;
            const int nsym = (n_samples + sps - 1) / sps + extra;
            std::vector<cfloat> sym(static_cast<size_t>(nsym));
            for (cfloat& s : sym) s = pts[static_cast<size_t>(rng.next_below(
                static_cast<int>(pts.size())))];
            if (scheme.pulse == PulseShape::Rectangular) {
                sig.resize(static_cast<size_t>(n_samples));
                for (int n = 0; n < n_samples; ++n) sig[static_cast<size_t>(n)] = sym[static_cast<size_t>(n / sps)];
            } else {
                sig = shape_symbols(sym, sps, n_samples, rrc_taps(sps, scheme.rrc_rolloff, span));
            }
            break;
        }
    }

    // channel impairments, then noise drawn last from the same stream
    if (!chan.multipath_taps.empty()) {
        std::vector<cfloat> conv(sig.size(), cfloat(0.0f, 0.0f));
        for (size_t n = 0; n < sig.size(); ++n) {
            cfloat acc(0.0f, 0.0f);
            for (size_t t = 0; t < chan.multipath_taps.size() && t <= n; ++t)
                acc += sig[n - t] * chan.multipath_taps[t];
            conv[n] = acc;
        }
        sig.swap(conv);
    }
    const double phase_rad = chan.phase_deg * kPi / 180.0;
    const cfloat rot(static_cast<float>(std::cos(phase_rad)),
                     static_cast<float>(std::sin(phase_rad)));
    for (size_t n = 0; n < sig.size(); ++n) {
        const double ang = 2.0 * kPi * chan.cfo_norm * static_cast<double>(n);
        const cfloat mix(static_cast<float>(std::cos(ang)), static_cast<float>(std::sin(ang)));
        sig[n] *= rot * mix;
    }

    double sig_power = 0.0;
    for (const cfloat& v : sig) sig_power += std::norm(v);
    sig_power /= static_cast<double>(sig.size());
    const double noise_power = sig_power / std::pow(10.0, chan.snr_db / 10.0);
    const float nsc = static_cast<float>(std::sqrt(noise_power / 2.0));
    for (cfloat& v : sig) v += cfloat(nsc * rng.gaussian(), nsc * rng.gaussian());

    IQRecord rec;
    rec.samples = std::move(sig);
    rec.meta["mod"] = modulation_name(scheme.kind);
    rec.meta["sps"] = std::to_string(sps);
    return rec;
}

namespace {

ChannelConfig draw_channel(const ChannelRanges& r, Pcg32& rng) {
    ChannelConfig c;
    c.snr_db = rng.uniform(r.snr_db_min, r.snr_db_max);
    c.cfo_norm = rng.uniform(r.cfo_min, r.cfo_max);
    c.phase_deg = rng.uniform(r.phase_min_deg, r.phase_max_deg);
    if (r.multipath_taps > 1) {
        c.multipath_taps.assign(static_cast<size_t>(r.multipath_taps), cfloat(0.0f, 0.0f));
        c.multipath_taps[0] = cfloat(1.0f, 0.0f);
        float amp = r.tap_strength;
        for (int t = 1; t < r.multipath_taps; ++t) {
            c.multipath_taps[static_cast<size_t>(t)] =
                cfloat(amp * rng.gaussian() / std::sqrt(2.0f), amp * rng.gaussian() / std::sqrt(2.0f));
            amp *= r.tap_strength;
        }
    }
    return c;
}

// largest-remainder allocation of n records over the three split fractions
std::array<int, 3> split_counts(int n, const std::array<float, 3>& frac) {
    std::array<int, 3> cnt{};
    std::array<double, 3> rem{};
    int used = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = static_cast<double>(n) * frac[static_cast<size_t>(i)];
        cnt[static_cast<size_t>(i)] = static_cast<int>(std::floor(exact + 1e-9));
        rem[static_cast<size_t>(i)] = exact - cnt[static_cast<size_t>(i)];
        used += cnt[static_cast<size_t>(i)];
    }
    while (used < n) {
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (rem[static_cast<size_t>(i)] > rem[static_cast<size_t>(best)] + 1e-12) best = i;
        cnt[static_cast<size_t>(best)]++;
        rem[static_cast<size_t>(best)] = -1.0;
        used++;
    }
    return cnt;
}

}  // namespace

Dataset build_dataset(const DatasetSpec& spec) {
    spec.validate();
    Dataset ds;
    ds.seed = spec.seed;
    ds.n_classes = static_cast<int>(spec.classes.size());

    std::vector<int> variants = spec.sps_variants;
    if (variants.empty()) variants = {0};  // sentinel: use the class's own sps

    Pcg32 chan_rng(mix_seed(spec.seed, 0x6368616eULL));  // channel draws
    size_t global = 0;
    // class-major, variant-minor, record-minor: a stable enumeration so
    // per-record seeds never depend on build order
    std::vector<std::vector<int>> per_class_indices(static_cast<size_t>(ds.n_classes));
    for (int c = 0; c < ds.n_classes; ++c) {
        for (int v : variants) {
            ModScheme scheme = spec.classes[static_cast<size_t>(c)];
            if (v > 0) scheme.samples_per_symbol = v;
            for (int i = 0; i < spec.per_class_count; ++i, ++global) {
                const uint64_t rseed = mix_seed(spec.seed, global);
                const ChannelConfig chan = draw_channel(spec.channel, chan_rng);
                IQRecord rec = generate_record(scheme, spec.record_samples, chan, rseed);
                rec.label = c;
                per_class_indices[static_cast<size_t>(c)].push_back(
                    static_cast<int>(ds.records.size()));
                ds.records.push_back(std::move(rec));
                ds.channels.push_back(chan);
                ds.sps.push_back(scheme.samples_per_symbol);
                ds.record_seeds.push_back(rseed);
            }
        }
    }

    // stratified split: shuffle within each class, then largest-remainder
    // allocation into train/val/test
    for (int c = 0; c < ds.n_classes; ++c) {
        auto& idx = per_class_indices[static_cast<size_t>(c)];
        Pcg32 rng(mix_seed(spec.seed, 0x73706c6974ULL + static_cast<uint64_t>(c)));
        for (size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[static_cast<size_t>(rng.next_below(static_cast<int>(i)))]);
        const auto cnt = split_counts(static_cast<int>(idx.size()), spec.split);
        int p = 0;
        for (int i = 0; i < cnt[0]; ++i) ds.train.push_back(idx[static_cast<size_t>(p++)]);
        for (int i = 0; i < cnt[1]; ++i) ds.val.push_back(idx[static_cast<size_t>(p++)]);
        for (int i = 0; i < cnt[2]; ++i) ds.test.push_back(idx[static_cast<size_t>(p++)]);
    }
    return ds;
}

std::vector<int> cap_per_class(const Dataset& ds, int cap) {
    if (cap < 1) throw config_error("cap_per_class: cap must be >= 1");
    std::vector<int> out;
    for (int c = 0; c < ds.n_classes; ++c) {
        int taken = 0, avail = 0;
        for (int idx : ds.train) {
            if (ds.records[static_cast<size_t>(idx)].label != c) continue;
            ++avail;
            if (taken < cap) {
                out.push_back(idx);
                ++taken;
            }
        }
        if (taken < cap)
            std::fprintf(stderr, "warning: class %d has only %d train records (cap %d)\n", c,
                         avail, cap);
    }
    return out;
}

std::vector<int> kshot_support(const Dataset& ds, int k) {
    if (k < 0) throw config_error("kshot_support: K must be >= 0");
    std::vector<int> out;
    if (k == 0) return out;
    for (int c = 0; c < ds.n_classes; ++c) {
        int taken = 0;
        for (int idx : ds.train) {
            if (ds.records[static_cast<size_t>(idx)].label != c) continue;
            out.push_back(idx);
            if (++taken == k) break;
        }
        if (taken < k)
            throw data_error("kshot_support: class " + std::to_string(c) + " has only " +
                             std::to_string(taken) + " records, need " + std::to_string(k));
    }
    return out;
}

std::vector<int> slice_indices(const Dataset& ds, const std::vector<int>& part, int sps) {
    std::vector<int> out;
    for (int idx : part)
        if (ds.sps[static_cast<size_t>(idx)] == sps) out.push_back(idx);
    return out;
}

ShiftPair make_shift_pair(const DatasetSpec& source_spec, const DatasetSpec& target_spec) {
    ShiftPair pair;
    pair.source = build_dataset(source_spec);
    pair.target = build_dataset(target_spec);
    return pair;
}

double mean_power(const IQRecord& rec) {
    double p = 0.0;
    for (const cfloat& v : rec.samples) p += std::norm(v);
    return rec.samples.empty() ? 0.0 : p / static_cast<double>(rec.samples.size());
}

std::vector<ModScheme> default_classes() {
    // PSK8 is deliberately absent: at the fixed STFT geometry its magnitude
    // spectrograms are statistically indistinguishable from QPSK, which caps
    // desk-scale accuracy near chance for that pair
    std::vector<ModScheme> cls;
    for (Modulation m : {Modulation::BPSK, Modulation::QPSK, Modulation::QAM16, Modulation::FSK2,
                         Modulation::AM_TONE}) {
        ModScheme s;
        s.kind = m;
        s.samples_per_symbol = 8;
        s.pulse = PulseShape::RootRaisedCosine;
        s.rrc_rolloff = 0.35f;
        cls.push_back(s);
    }
    return cls;
}

DatasetSpec default_source_spec(uint64_t seed) {
    DatasetSpec spec;
    spec.classes = default_classes();
    spec.per_class_count = 120;
    spec.sps_variants = {4, 8, 16};
    spec.channel.snr_db_min = 15.0f;
    spec.channel.snr_db_max = 25.0f;
    spec.channel.cfo_min = -0.002f;
    spec.channel.cfo_max = 0.002f;
    spec.channel.multipath_taps = 0;
    spec.seed = seed;
    return spec;
}

DatasetSpec default_target_spec(uint64_t seed) {
    DatasetSpec spec;
    spec.classes = default_classes();
    spec.per_class_count = 300;
    spec.channel.snr_db_min = 0.0f;
    spec.channel.snr_db_max = 10.0f;
    spec.channel.cfo_min = -0.01f;
    spec.channel.cfo_max = 0.01f;
    spec.channel.multipath_taps = 3;
    spec.channel.tap_strength = 0.45f;
    spec.seed = seed;
    return spec;
}

}  // namespace rfp
