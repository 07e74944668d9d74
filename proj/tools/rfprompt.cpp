// Command-line front end: dataset synthesis, pretext pretraining, single
// adaptation runs, the experiment sweeps, parameter accounting, embedding
// export and evaluation.

#include <cstdio>
#include <filesystem>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "rfp/dataio.hpp"
#include "rfp/errors.hpp"
#include "rfp/experiments.hpp"
#include "rfp/metrics.hpp"
#include "rfp/model.hpp"
#include "rfp/synth.hpp"
#include "rfp/train.hpp"

using nlohmann::json;

namespace {

std::string output_root() {
    const char* root = std::getenv("RFP_OUTPUT_ROOT");
    return root ? std::string(root) : std::string();
}

std::string out_path(const std::string& p) {
    const std::string root = output_root();
    std::string full = p;
    if (!root.empty() && !p.empty() && p.front() != '/') full = root + "/" + p;
    const auto parent = std::filesystem::path(full).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    return full;
}

void apply_train_json(rfp::TrainConfig& cfg, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw rfp::config_error("cannot read config " + path);
    json j;
    f >> j;
    cfg.lr_backbone = j.value("lr_backbone", cfg.lr_backbone);
    cfg.lr_adapt = j.value("lr_adapt", cfg.lr_adapt);
    cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
    cfg.warmup_epochs = j.value("warmup_epochs", cfg.warmup_epochs);
    cfg.router_warmup_epochs = j.value("router_warmup_epochs", cfg.router_warmup_epochs);
    cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.label_smoothing = j.value("label_smoothing", cfg.label_smoothing);
    cfg.early_stop_patience = j.value("early_stop_patience", cfg.early_stop_patience);
    cfg.seed = j.value("seed", cfg.seed);
}

struct TrainFlags {
    std::string config_path;
    rfp::TrainConfig cfg;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "JSON training config (flags override)");
        app->add_option("--lr-backbone", cfg.lr_backbone);
        app->add_option("--lr-adapt", cfg.lr_adapt);
        app->add_option("--weight-decay", cfg.weight_decay);
        app->add_option("--warmup-epochs", cfg.warmup_epochs);
        app->add_option("--router-warmup-epochs", cfg.router_warmup_epochs);
        app->add_option("--max-epochs", cfg.max_epochs);
        app->add_option("--batch-size", cfg.batch_size);
        app->add_option("--label-smoothing", cfg.label_smoothing);
        app->add_option("--patience", cfg.early_stop_patience);
        app->add_option("--seed", cfg.seed);
    }

    rfp::TrainConfig resolve(CLI::App* app) {
        rfp::TrainConfig out = cfg;
        if (!config_path.empty()) {
            // file first, then explicit flags override it
            rfp::TrainConfig from_file = rfp::TrainConfig{};
            apply_train_json(from_file, config_path);
            rfp::TrainConfig flags = cfg;
            out = from_file;
            auto touched = [&](const std::string& name) { return app->count(name) > 0; };
            if (touched("--lr-backbone")) out.lr_backbone = flags.lr_backbone;
            if (touched("--lr-adapt")) out.lr_adapt = flags.lr_adapt;
            if (touched("--weight-decay")) out.weight_decay = flags.weight_decay;
            if (touched("--warmup-epochs")) out.warmup_epochs = flags.warmup_epochs;
            if (touched("--router-warmup-epochs"))
                out.router_warmup_epochs = flags.router_warmup_epochs;
            if (touched("--max-epochs")) out.max_epochs = flags.max_epochs;
            if (touched("--batch-size")) out.batch_size = flags.batch_size;
            if (touched("--label-smoothing")) out.label_smoothing = flags.label_smoothing;
            if (touched("--patience")) out.early_stop_patience = flags.early_stop_patience;
            if (touched("--seed")) out.seed = flags.seed;
        }
        return out;
    }
};

std::vector<std::vector<int>> pretext_slices(const rfp::Dataset& ds, const std::vector<int>& part,
                                             const std::vector<int>& sps_per_expert) {
    std::vector<std::vector<int>> slices;
    for (int sps : sps_per_expert) slices.push_back(rfp::slice_indices(ds, part, sps));
    return slices;
}

int run(int argc, char** argv) {
    CLI::App app{"prompt-adapted mixture-of-experts spectrogram classifier"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a labeled IQ dataset");
    std::string synth_spec, synth_out, synth_preset;
    uint64_t synth_seed = 1;
    synth->add_option("--spec", synth_spec, "dataset spec JSON");
    synth->add_option("--preset", synth_preset, "source|target (ignored when --spec is given)");
    synth->add_option("--out", synth_out, "output prefix (<prefix>.iq + <prefix>.json)")
        ->required();
    synth->add_option("--seed", synth_seed);

    // ---- pretrain ----
    auto* pretrain = app.add_subcommand("pretrain", "pretext-train the experts on a source set");
    std::string pre_dataset, pre_out;
    int pre_width = 128, pre_topk = 2, pre_routing = 0;
    TrainFlags pre_train;
    pretrain->add_option("--dataset", pre_dataset, "source dataset prefix")->required();
    pretrain->add_option("--out", pre_out, "output checkpoint")->required();
    pretrain->add_option("--width", pre_width, "model width d");
    pretrain->add_option("--top-k", pre_topk);
    pretrain->add_option("--routing-input", pre_routing, "0: embed CLS, 1: mean final CLS");
    pre_train.attach(pretrain);

    // ---- adapt ----
    auto* adapt_cmd = app.add_subcommand("adapt", "single adaptation run");
    std::string ad_in, ad_out, ad_dataset, ad_regime = "rfprompt", ad_history;
    int ad_cap = -1, ad_shots = -1, ad_prompt_len = 16;
    TrainFlags ad_train;
    adapt_cmd->add_option("--checkpoint-in", ad_in)->required();
    adapt_cmd->add_option("--checkpoint-out", ad_out)->required();
    adapt_cmd->add_option("--dataset", ad_dataset, "target dataset prefix")->required();
    adapt_cmd->add_option("--regime", ad_regime, "frozen|pft|rfprompt");
    adapt_cmd->add_option("--cap", ad_cap, "per-class training cap N");
    adapt_cmd->add_option("--shots", ad_shots, "few-shot support size K");
    adapt_cmd->add_option("--prompt-len", ad_prompt_len);
    adapt_cmd->add_option("--history", ad_history, "history CSV path");
    ad_train.attach(adapt_cmd);

    // ---- sweeps ----
    auto* stage_a = app.add_subcommand("stage-a", "data-scale sweep (regime x N)");
    auto* stage_b = app.add_subcommand("stage-b", "few-shot sweep (regime x K)");
    auto* ablation = app.add_subcommand("ablation", "prompt-length sweep");
    struct SweepFlags {
        std::string ckpt, dataset, out_dir = ".";
        std::vector<int> axis;
        std::vector<std::string> regimes;
        int prompt_len = 16;
        TrainFlags train;
    } sa, sb, ab;
    auto attach_sweep = [](CLI::App* cmd, SweepFlags& fl, const char* axis_help) {
        cmd->add_option("--checkpoint", fl.ckpt)->required();
        cmd->add_option("--dataset", fl.dataset)->required();
        cmd->add_option("--out-dir", fl.out_dir);
        cmd->add_option("--axis", fl.axis, axis_help);
        cmd->add_option("--regimes", fl.regimes);
        cmd->add_option("--prompt-len", fl.prompt_len);
        fl.train.attach(cmd);
    };
    attach_sweep(stage_a, sa, "caps N");
    attach_sweep(stage_b, sb, "shot sizes K");
    attach_sweep(ablation, ab, "prompt lengths P");

    // ---- report-params ----
    auto* report = app.add_subcommand("report-params", "trainable/total parameter accounting");
    std::string rp_ckpt, rp_regime = "rfprompt";
    int rp_width = 128, rp_classes = 5, rp_prompt_len = 16;
    report->add_option("--checkpoint", rp_ckpt, "optional; fresh model otherwise");
    report->add_option("--regime", rp_regime);
    report->add_option("--width", rp_width);
    report->add_option("--classes", rp_classes);
    report->add_option("--prompt-len", rp_prompt_len);

    // ---- export-embeddings ----
    auto* exp = app.add_subcommand("export-embeddings", "router-fused embeddings as CSV");
    std::string ex_ckpt, ex_dataset, ex_out, ex_split = "test";
    exp->add_option("--checkpoint", ex_ckpt)->required();
    exp->add_option("--dataset", ex_dataset)->required();
    exp->add_option("--out", ex_out)->required();
    exp->add_option("--split", ex_split, "train|val|test");

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "metrics of a checkpoint on a dataset split");
    std::string ev_ckpt, ev_dataset, ev_split = "test";
    eval_cmd->add_option("--checkpoint", ev_ckpt)->required();
    eval_cmd->add_option("--dataset", ev_dataset)->required();
    eval_cmd->add_option("--split", ev_split);

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) {
        rfp::DatasetSpec spec;
        if (!synth_spec.empty())
            spec = rfp::load_dataset_spec(synth_spec);
        else if (synth_preset == "source")
            spec = rfp::default_source_spec(synth_seed);
        else if (synth_preset == "target")
            spec = rfp::default_target_spec(synth_seed);
        else
            throw rfp::config_error("synth: need --spec or --preset source|target");
        if (synth->count("--seed")) spec.seed = synth_seed;
        rfp::Dataset ds = rfp::build_dataset(spec);
        rfp::save_dataset(ds, out_path(synth_out));
        std::printf("wrote %zu records (%d classes) to %s.{iq,json}\n", ds.records.size(),
                    ds.n_classes, out_path(synth_out).c_str());
        return 0;
    }

    if (pretrain->parsed()) {
        rfp::TrainConfig cfg = pre_train.resolve(pretrain);
        rfp::Dataset source = rfp::load_dataset(pre_dataset);
        rfp::SpecDataset specs = rfp::to_spec_dataset(source);
        rfp::ModelConfig mc = rfp::ModelConfig::with_width(pre_width);
        mc.n_classes = source.n_classes;
        mc.top_k = pre_topk;
        mc.routing_input = pre_routing;
        rfp::MoEClassifier model(mc, cfg.seed);

        std::vector<int> sps_per_expert;
        for (int sps : {4, 8, 16}) sps_per_expert.push_back(sps);
        auto train_slices = pretext_slices(source, source.train, sps_per_expert);
        auto val_slices = pretext_slices(source, source.val, sps_per_expert);
        const auto accs = rfp::pretext_pretrain(model, specs, train_slices, val_slices, cfg);
        json meta;
        meta["phase"] = "pretext";
        meta["val_accuracy"] = accs;
        rfp::save_checkpoint(model, out_path(pre_out), meta);
        for (size_t e = 0; e < accs.size(); ++e)
            std::printf("expert %zu pretext val accuracy: %.4f\n", e, accs[e]);
        std::printf("checkpoint: %s\n", out_path(pre_out).c_str());
        return 0;
    }

    if (adapt_cmd->parsed()) {
        rfp::TrainConfig cfg = ad_train.resolve(adapt_cmd);
        rfp::Dataset target = rfp::load_dataset(ad_dataset);
        rfp::SpecDataset specs = rfp::to_spec_dataset(target);
        rfp::MoEClassifier model = rfp::load_checkpoint(ad_in);
        rfp::AdaptationRegime regime = rfp::regime_from_name(ad_regime);
        if (regime.kind == rfp::RegimeKind::RFPrompt) regime.prompt_len = ad_prompt_len;
        if (ad_cap > 0 && ad_shots >= 0)
            throw rfp::config_error("adapt: give --cap or --shots, not both");
        std::vector<int> train_idx;
        if (ad_shots >= 0)
            train_idx = rfp::kshot_support(target, ad_shots);
        else if (ad_cap > 0)
            train_idx = rfp::cap_per_class(target, ad_cap);
        else
            train_idx = target.train;
        rfp::TrainHistory hist = rfp::adapt(model, regime, specs, train_idx, target.val, cfg);
        rfp::MetricsReport report = rfp::evaluate(model, specs, target.test,
                                                  regime.kind == rfp::RegimeKind::RFPrompt);
        json meta;
        meta["phase"] = "adapt";
        meta["regime"] = regime.name();
        meta["prompt_len"] = regime.prompt_len;
        meta["seed"] = cfg.seed;
        meta["best_epoch"] = hist.best_epoch;
        meta["test_accuracy"] = report.accuracy;
        meta["test_macro_f1"] = report.macro_f1;
        rfp::save_checkpoint(model, out_path(ad_out), meta);
        if (!ad_history.empty()) {
            const uint64_t h = rfp::fnv1a(regime.name() + "/" + std::to_string(cfg.seed));
            rfp::write_history_csv(hist, out_path(ad_history), h, cfg.seed);
        }
        std::printf("test accuracy %.4f macro_f1 %.4f (best epoch %d)\n", report.accuracy,
                    report.macro_f1, hist.best_epoch);
        return 0;
    }

    auto run_sweep = [&](SweepFlags& fl, CLI::App* cmd, const char* which) {
        rfp::ExperimentSpec spec;
        spec.train = fl.train.resolve(cmd);
        spec.output_dir = out_path(fl.out_dir);
        spec.prompt_len = fl.prompt_len;
        if (!fl.regimes.empty()) spec.regimes = fl.regimes;
        if (!fl.axis.empty()) {
            if (std::string(which) == "a") spec.caps = fl.axis;
            if (std::string(which) == "b") spec.shots = fl.axis;
            if (std::string(which) == "p") spec.prompt_lengths = fl.axis;
        }
        rfp::Dataset target = rfp::load_dataset(fl.dataset);
        rfp::SpecDataset specs = rfp::to_spec_dataset(target);
        rfp::SweepResult result;
        std::string axis_name;
        if (std::string(which) == "a") {
            result = rfp::run_stage_a(spec, fl.ckpt, target, specs);
            axis_name = "N";
        } else if (std::string(which) == "b") {
            result = rfp::run_stage_b(spec, fl.ckpt, target, specs);
            axis_name = "K";
        } else {
            result = rfp::run_ablation(spec, fl.ckpt, target, specs);
            axis_name = "P";
        }
        rfp::print_sweep_table(std::cout, result, axis_name);
    };
    if (stage_a->parsed()) {
        run_sweep(sa, stage_a, "a");
        return 0;
    }
    if (stage_b->parsed()) {
        run_sweep(sb, stage_b, "b");
        return 0;
    }
    if (ablation->parsed()) {
        run_sweep(ab, ablation, "p");
        return 0;
    }

    if (report->parsed()) {
        rfp::AdaptationRegime regime = rfp::regime_from_name(rp_regime);
        if (regime.kind == rfp::RegimeKind::RFPrompt) regime.prompt_len = rp_prompt_len;
        std::unique_ptr<rfp::MoEClassifier> model;
        if (!rp_ckpt.empty()) {
            model = std::make_unique<rfp::MoEClassifier>(rfp::load_checkpoint(rp_ckpt));
        } else {
            rfp::ModelConfig mc = rp_width == 128 ? rfp::ModelConfig{}
                                                  : rfp::ModelConfig::with_width(rp_width);
            mc.n_classes = rp_classes;
            model = std::make_unique<rfp::MoEClassifier>(mc, 0);
        }
        if (regime.kind == rfp::RegimeKind::RFPrompt && !model->has_prompts())
            model->attach_prompts(regime.prompt_len, regime.prompt_sigma, 0);
        rfp::print_param_table(std::cout, rfp::report_params(*model, regime), regime);
        return 0;
    }

    if (exp->parsed()) {
        rfp::MoEClassifier model = rfp::load_checkpoint(ex_ckpt);
        rfp::Dataset ds = rfp::load_dataset(ex_dataset);
        rfp::SpecDataset specs = rfp::to_spec_dataset(ds);
        const std::vector<int>& idx =
            ex_split == "train" ? ds.train : (ex_split == "val" ? ds.val : ds.test);
        rfp::export_embeddings(model, specs, idx, out_path(ex_out), model.has_prompts());
        std::printf("wrote %zu embeddings to %s\n", idx.size(), out_path(ex_out).c_str());
        return 0;
    }

    if (eval_cmd->parsed()) {
        rfp::MoEClassifier model = rfp::load_checkpoint(ev_ckpt);
        rfp::Dataset ds = rfp::load_dataset(ev_dataset);
        rfp::SpecDataset specs = rfp::to_spec_dataset(ds);
        const std::vector<int>& idx =
            ev_split == "train" ? ds.train : (ev_split == "val" ? ds.val : ds.test);
        rfp::MetricsReport r = rfp::evaluate(model, specs, idx, model.has_prompts());
        std::printf("accuracy %.4f macro_f1 %.4f over %zu records\n", r.accuracy, r.macro_f1,
                    idx.size());
        for (int c = 0; c < r.n_classes; ++c)
            std::printf("class %d: precision %.4f recall %.4f f1 %.4f\n", c, r.precision[c],
                        r.recall[c], r.f1[c]);
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const rfp::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const rfp::dim_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const rfp::data_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const rfp::numeric_error& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
