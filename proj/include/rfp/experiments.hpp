#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rfp/dataio.hpp"
#include "rfp/metrics.hpp"
#include "rfp/model.hpp"
#include "rfp/synth.hpp"
#include "rfp/train.hpp"

namespace rfp {

// Sweep descriptions for the data-scale stage (per-class cap N), the
// few-shot stage (support size K) and the prompt-length ablation.
struct ExperimentSpec {
    std::vector<int> caps{100, 200, 400, 800, 1600};
    std::vector<int> shots{0, 2, 4, 8, 16, 32, 64, 128};
    std::vector<int> prompt_lengths{8, 12, 16, 20, 32};
    std::vector<std::string> regimes{"frozen", "pft", "rfprompt"};
    int prompt_len = 16;
    std::string output_dir = ".";
    TrainConfig train;

    void validate(bool stage_b) const;  // K = 0 only valid in stage B
};

struct SweepCell {
    std::string regime;
    int axis_value = 0;  // N, K, or P depending on the sweep
    MetricsReport report;
    TrainHistory history;
};

struct SweepResult {
    std::vector<SweepCell> cells;
    uint64_t config_hash = 0;
};

// Spectrograms for every record of a dataset.
SpecDataset to_spec_dataset(const Dataset& ds, bool center_dc = false);

// Every cell restarts from the same pretext checkpoint (read-only) and
// seed, so the regime/axis is the only varying factor. Results land in
// <output_dir>/<name>.csv plus one history CSV per cell. The ablation runs
// the prompt regime only, training at the first entry of `caps`.
SweepResult run_stage_a(const ExperimentSpec& spec, const std::string& pretext_ckpt,
                        const Dataset& target, const SpecDataset& target_specs);
SweepResult run_stage_b(const ExperimentSpec& spec, const std::string& pretext_ckpt,
                        const Dataset& target, const SpecDataset& target_specs);
SweepResult run_ablation(const ExperimentSpec& spec, const std::string& pretext_ckpt,
                         const Dataset& target, const SpecDataset& target_specs);

void write_sweep_csv(const SweepResult& result, const std::string& axis_name,
                     const std::string& path, uint64_t seed);
void print_sweep_table(std::ostream& os, const SweepResult& result, const std::string& axis_name);

// ---- parameter accounting ----------------------------------------------

struct ParamReport {
    size_t backbone_total = 0;
    size_t backbone_trainable = 0;
    size_t prompts = 0;
    size_t router = 0;
    size_t head = 0;
    size_t trainable = 0;
    size_t total = 0;
    double trainable_fraction = 0.0;
};

ParamReport report_params(const MoEClassifier& model, const AdaptationRegime& regime);

// Table with actual counts next to the nominal full-size budgets and the
// delta between them.
void print_param_table(std::ostream& os, const ParamReport& r, const AdaptationRegime& regime);

// ---- embedding export -------------------------------------------------------

// One CSV row per record: label, z_0..z_{d-1} of the router-fused
// embedding. Deterministic under fixed weights.
void export_embeddings(const MoEClassifier& model, const SpecDataset& data,
                       const std::vector<int>& idx, const std::string& path, bool use_prompts);

}  // namespace rfp
