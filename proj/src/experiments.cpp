#include "rfp/experiments.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "rfp/errors.hpp"

namespace rfp {

void ExperimentSpec::validate(bool stage_b) const {
    if (caps.empty() || shots.empty() || prompt_lengths.empty() || regimes.empty())
        throw config_error("experiment: sweep lists must be non-empty");
    // an empty support (K = 0) only makes sense for the few-shot stage; the
    // cap and prompt-length axes must stay positive everywhere
    for (int n : caps)
        if (n < 1) throw config_error("experiment: caps must be >= 1");
    for (int p : prompt_lengths)
        if (p < 1) throw config_error("experiment: prompt lengths must be >= 1");
    if (stage_b)
        for (int k : shots)
            if (k < 0) throw config_error("experiment: K must be >= 0");
    for (const std::string& r : regimes) regime_from_name(r);  // validates names
    train.validate();
}

SpecDataset to_spec_dataset(const Dataset& ds, bool center_dc) {
    SpecDataset out;
    out.n_classes = ds.n_classes;
    out.specs.reserve(ds.records.size());
    out.labels.reserve(ds.records.size());
    for (const IQRecord& r : ds.records) {
        out.specs.push_back(iq_to_spectrogram(r, center_dc));
        out.labels.push_back(r.label);
    }
    return out;
}

namespace {

uint64_t spec_hash(const ExperimentSpec& spec, const std::string& stage) {
    std::string s = stage;
    for (int v : spec.caps) s += "," + std::to_string(v);
    for (int v : spec.shots) s += "," + std::to_string(v);
    for (int v : spec.prompt_lengths) s += "," + std::to_string(v);
    for (const auto& r : spec.regimes) s += "," + r;
    s += ",p" + std::to_string(spec.prompt_len);
    s += ",seed" + std::to_string(spec.train.seed);
    s += ",ep" + std::to_string(spec.train.max_epochs);
    s += ",bs" + std::to_string(spec.train.batch_size);
    return fnv1a(s);
}

SweepCell run_cell(const std::string& pretext_ckpt, const AdaptationRegime& regime, int axis,
                   const Dataset& target, const SpecDataset& specs,
                   const std::vector<int>& train_idx, const ExperimentSpec& spec) {
    MoEClassifier model = load_checkpoint(pretext_ckpt);
    SweepCell cell;
    cell.regime = regime.name();
    cell.axis_value = axis;
    cell.history = adapt(model, regime, specs, train_idx, target.val, spec.train);
    cell.report = evaluate(model, specs, target.test, regime.kind == RegimeKind::RFPrompt);
    const ParamReport pr = report_params(model, regime);
    cell.report.trainable_params = pr.trainable;
    cell.report.total_params = pr.total;
    cell.report.trainable_fraction = pr.trainable_fraction;
    return cell;
}

void write_cell_history(const SweepCell& cell, const ExperimentSpec& spec,
                        const std::string& stage, uint64_t hash) {
    const std::string path = spec.output_dir + "/" + stage + "_" + cell.regime + "_" +
                             std::to_string(cell.axis_value) + "_history.csv";
    write_history_csv(cell.history, path, hash, spec.train.seed);
}

}  // namespace

SweepResult run_stage_a(const ExperimentSpec& spec, const std::string& pretext_ckpt,
                        const Dataset& target, const SpecDataset& target_specs) {
    spec.validate(false);
    SweepResult result;
    result.config_hash = spec_hash(spec, "stage_a");
    for (int cap : spec.caps) {
        const std::vector<int> capped = cap_per_class(target, cap);
        for (const std::string& rn : spec.regimes) {
            AdaptationRegime regime = regime_from_name(rn);
            if (regime.kind == RegimeKind::RFPrompt) regime.prompt_len = spec.prompt_len;
            SweepCell cell =
                run_cell(pretext_ckpt, regime, cap, target, target_specs, capped, spec);
            write_cell_history(cell, spec, "stage_a", result.config_hash);
            result.cells.push_back(std::move(cell));
        }
    }
    write_sweep_csv(result, "N", spec.output_dir + "/stage_a.csv", spec.train.seed);
    return result;
}

SweepResult run_stage_b(const ExperimentSpec& spec, const std::string& pretext_ckpt,
                        const Dataset& target, const SpecDataset& target_specs) {
    spec.validate(true);
    SweepResult result;
    result.config_hash = spec_hash(spec, "stage_b");
    for (int k : spec.shots) {
        const std::vector<int> support = kshot_support(target, k);
        for (const std::string& rn : spec.regimes) {
            AdaptationRegime regime = regime_from_name(rn);
            if (regime.kind == RegimeKind::RFPrompt) regime.prompt_len = spec.prompt_len;
            SweepCell cell =
                run_cell(pretext_ckpt, regime, k, target, target_specs, support, spec);
            write_cell_history(cell, spec, "stage_b", result.config_hash);
            result.cells.push_back(std::move(cell));
        }
    }
    write_sweep_csv(result, "K", spec.output_dir + "/stage_b.csv", spec.train.seed);
    return result;
}

SweepResult run_ablation(const ExperimentSpec& spec, const std::string& pretext_ckpt,
                         const Dataset& target, const SpecDataset& target_specs) {
    spec.validate(false);
    SweepResult result;
    result.config_hash = spec_hash(spec, "ablation");
    const std::vector<int> capped = cap_per_class(target, spec.caps.front());
    for (int p : spec.prompt_lengths) {
        AdaptationRegime regime = AdaptationRegime::rfprompt(p);
        SweepCell cell = run_cell(pretext_ckpt, regime, p, target, target_specs, capped, spec);
        // the prompt count column must equal n_experts * n_layers * P * d,
        // checked against the enumerated tensors
        MoEClassifier probe = load_checkpoint(pretext_ckpt);
        probe.attach_prompts(p, regime.prompt_sigma, 0);
        const size_t enumerated = probe.params().count_with_prefix("prompts.");
        const size_t formula = static_cast<size_t>(probe.config().n_experts) *
                               probe.config().n_layers * p * probe.config().d_model;
        if (enumerated != formula)
            throw numeric_error("ablation: prompt count mismatch at P=" + std::to_string(p));
        write_cell_history(cell, spec, "ablation", result.config_hash);
        result.cells.push_back(std::move(cell));
    }
    write_sweep_csv(result, "P", spec.output_dir + "/ablation.csv", spec.train.seed);
    return result;
}

void write_sweep_csv(const SweepResult& result, const std::string& axis_name,
                     const std::string& path, uint64_t seed) {
    std::ofstream f(path);
    if (!f) throw data_error("cannot write " + path);
    char line[320];
    std::snprintf(line, sizeof(line), "# config_hash=%016" PRIx64 " seed=%" PRIu64 "\n",
                  result.config_hash, seed);
    f << line;
    f << "regime," << axis_name
      << ",accuracy,macro_f1,trainable_params,total_params,trainable_fraction\n";
    for (const SweepCell& c : result.cells) {
        std::snprintf(line, sizeof(line), "%s,%d,%.6f,%.6f,%zu,%zu,%.9g\n", c.regime.c_str(),
                      c.axis_value, c.report.accuracy, c.report.macro_f1,
                      c.report.trainable_params, c.report.total_params,
                      c.report.trainable_fraction);
        f << line;
    }
}

void print_sweep_table(std::ostream& os, const SweepResult& result,
                       const std::string& axis_name) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-10s %6s %10s %10s %12s\n", "regime", axis_name.c_str(),
                  "acc", "macro_f1", "trainable");
    os << line;
    for (const SweepCell& c : result.cells) {
        std::snprintf(line, sizeof(line), "%-10s %6d %10.4f %10.4f %12zu\n", c.regime.c_str(),
                      c.axis_value, c.report.accuracy, c.report.macro_f1,
                      c.report.trainable_params);
        os << line;
    }
}

// ---- parameter accounting ----------------------------------------------

ParamReport report_params(const MoEClassifier& model, const AdaptationRegime& regime) {
    ParamReport r;
    r.backbone_total = model.params().count_with_prefix("expert.");
    r.prompts = model.params().count_with_prefix("prompts.");
    r.router = model.params().count_with_prefix("router.");
    r.head = model.params().count_with_prefix("head.");
    r.total = model.params().total_count();
    const std::vector<std::string> names = select_trainable(model, regime);
    for (const std::string& n : names) {
        const size_t c = model.params().get(n).numel();
        r.trainable += c;
        if (n.rfind("expert.", 0) == 0) r.backbone_trainable += c;
    }
    r.trainable_fraction = static_cast<double>(r.trainable) / static_cast<double>(r.total);
    return r;
}

void print_param_table(std::ostream& os, const ParamReport& r, const AdaptationRegime& regime) {
    // nominal column: the full-size budgets this architecture was sized
    // against (d=128, L=12, M=16, 3 experts)
    struct Row {
        const char* name;
        size_t actual;
        double nominal;
    };
    const double nominal_backbone_trainable =
        regime.kind == RegimeKind::PartialFineTune ? 800000.0 : 0.0;
    const double nominal_trainable = regime.kind == RegimeKind::PartialFineTune
                                         ? 800000.0 + 16000.0 + 165000.0
                                         : (regime.kind == RegimeKind::RFPrompt ? 255000.0
                                                                                : 181000.0);
    const Row rows[] = {
        {"backbone (total)", r.backbone_total, 4800000.0 - 16000.0 - 165000.0},
        {"backbone (trainable)", r.backbone_trainable, nominal_backbone_trainable},
        {"prompts", r.prompts, regime.kind == RegimeKind::RFPrompt ? 73728.0 : 0.0},
        {"router", r.router, 16000.0},
        {"head", r.head, 165000.0},
        {"trainable", r.trainable, nominal_trainable},
        {"total", r.total, 4800000.0},
    };
    char line[200];
    std::snprintf(line, sizeof(line), "regime: %s\n", regime.name().c_str());
    os << line;
    std::snprintf(line, sizeof(line), "%-22s %12s %12s %12s\n", "component", "actual", "nominal",
                  "delta");
    os << line;
    for (const Row& row : rows) {
        std::snprintf(line, sizeof(line), "%-22s %12zu %12.0f %+12.0f\n", row.name, row.actual,
                      row.nominal, static_cast<double>(row.actual) - row.nominal);
        os << line;
    }
    std::snprintf(line, sizeof(line), "%-22s %11.4f%% %11.2f%% \n", "trainable fraction",
                  100.0 * r.trainable_fraction,
                  regime.kind == RegimeKind::PartialFineTune
                      ? 17.0
                      : (regime.kind == RegimeKind::RFPrompt ? 0.34 : 0.37));
    os << line;
}

// ---- embedding export -------------------------------------------------------

void export_embeddings(const MoEClassifier& model, const SpecDataset& data,
                       const std::vector<int>& idx, const std::string& path, bool use_prompts) {
    std::ofstream f(path);
    if (!f) throw data_error("cannot write " + path);
    f << "label";
    for (int j = 0; j < model.config().d_model; ++j) f << ",z_" << j;
    f << "\n";
    Tape tape;
    NoGrad pause(tape);
    char buf[32];
    for (int i : idx) {
        auto out = model.forward(tape, data.specs[static_cast<size_t>(i)], use_prompts);
        f << data.labels[static_cast<size_t>(i)];
        for (int j = 0; j < model.config().d_model; ++j) {
            std::snprintf(buf, sizeof(buf), ",%.9g", static_cast<double>(out.z_final.at(j)));
            f << buf;
        }
        f << "\n";
        tape.clear();
    }
}

}  // namespace rfp
