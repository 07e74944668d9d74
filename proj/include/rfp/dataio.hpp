#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rfp/dsp.hpp"
#include "rfp/synth.hpp"

namespace rfp {

// Dataset on disk: <prefix>.iq holds little-endian interleaved f32 pairs
// (I0,Q0,I1,Q1,...) for all records back to back; <prefix>.json is the
// manifest (per-record offset/length/class/channel/seed plus split lists).
void save_dataset(const Dataset& ds, const std::string& prefix);
Dataset load_dataset(const std::string& prefix);

// Spectrogram cache: <prefix>.f32 holds raw little-endian f32, row-major,
// 128x128 per record; <prefix>.json carries the count and class labels.
void save_spectrogram_cache(const std::vector<Spectrogram>& specs, const std::vector<int>& labels,
                            const std::string& prefix);
std::pair<std::vector<Spectrogram>, std::vector<int>> load_spectrogram_cache(
    const std::string& prefix);

// DatasetSpec from a JSON file (see README for the schema).
DatasetSpec load_dataset_spec(const std::string& path);

}  // namespace rfp
