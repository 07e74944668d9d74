#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rfp/dsp.hpp"

namespace rfp {

enum class Modulation { BPSK, QPSK, PSK8, QAM16, QAM64, FSK2, AM_TONE };

const char* modulation_name(Modulation m);
Modulation modulation_from_name(const std::string& name);

enum class PulseShape { Rectangular, RootRaisedCosine };

struct ModScheme {
    Modulation kind = Modulation::BPSK;
    int samples_per_symbol = 8;
    PulseShape pulse = PulseShape::RootRaisedCosine;
    float rrc_rolloff = 0.35f;
};

// Unit-average-power constellation for a digital scheme.
std::vector<cfloat> constellation(Modulation m);

struct ChannelConfig {
    float snr_db = 20.0f;
    float cfo_norm = 0.0f;   // carrier offset as a fraction of sample rate, |.| < 0.5
    float phase_deg = 0.0f;
    std::vector<cfloat> multipath_taps;  // empty = ideal channel; first tap nonzero
    uint64_t seed = 0;

    void validate() const;  // throws config_error
};

// Uniform draw ranges for per-record channel parameters.
struct ChannelRanges {
    float snr_db_min = 15.0f, snr_db_max = 25.0f;
    float cfo_min = -0.002f, cfo_max = 0.002f;
    float phase_min_deg = 0.0f, phase_max_deg = 360.0f;
    int multipath_taps = 0;       // 0 or 1 = none
    float tap_strength = 0.5f;    // geometric decay of trailing taps
};

struct DatasetSpec {
    std::vector<ModScheme> classes;
    int per_class_count = 100;
    int record_samples = 1024;
    ChannelRanges channel;
    std::array<float, 3> split{0.70f, 0.15f, 0.15f};
    // Source pretext sets carry several symbol-rate variants of every class,
    // one variant per expert slice; target sets normally carry one.
    std::vector<int> sps_variants;  // empty = use each class's own sps
    uint64_t seed = 1;

    void validate() const;
};

struct Dataset {
    std::vector<IQRecord> records;        // label = class index
    std::vector<ChannelConfig> channels;  // per-record draw, kept for the manifest
    std::vector<int> sps;                 // per-record samples-per-symbol
    std::vector<uint64_t> record_seeds;
    std::vector<int> train, val, test;    // index lists, stratified
    int n_classes = 0;
    uint64_t seed = 0;
};

// Symbols -> constellation -> pulse shaping -> multipath -> phase/CFO -> AWGN.
// Deterministic under (scheme, n_samples, chan, seed); the noise draw comes
// last in the stream, so records generated at different SNR from the same
// seed share the identical noise-free signal.
IQRecord generate_record(const ModScheme& scheme, int n_samples, const ChannelConfig& chan,
                         uint64_t seed);

// Stratified 70/15/15 (configurable) split; per-partition class counts stay
// within one record of exact fractions.
Dataset build_dataset(const DatasetSpec& spec);

// First N train records of every class in the dataset's shuffled order;
// caps at the class size with a warning when N exceeds it. Nested across N.
std::vector<int> cap_per_class(const Dataset& ds, int cap);

// Exactly K train records per class (K = 0 -> empty support); throws
// data_error when a class cannot supply K. Nested across K.
std::vector<int> kshot_support(const Dataset& ds, int k);

// Subset of an index list with the given samples-per-symbol tag.
std::vector<int> slice_indices(const Dataset& ds, const std::vector<int>& part, int sps);

struct ShiftPair {
    Dataset source;
    Dataset target;
};

// Builds the pretext source set and the shifted adaptation target set.
ShiftPair make_shift_pair(const DatasetSpec& source_spec, const DatasetSpec& target_spec);

// Mean per-sample power |x|^2 of a record.
double mean_power(const IQRecord& rec);

// Default desk-scale task: 5 classes, RRC 0.35, 8 samples/symbol.
std::vector<ModScheme> default_classes();

// Default source (sps variants 4/8/16, clean channel) and target (shifted
// channel) specs used by the experiment harness.
DatasetSpec default_source_spec(uint64_t seed);
DatasetSpec default_target_spec(uint64_t seed);

}  // namespace rfp
