#include "rfp/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "rfp/errors.hpp"
#include "rfp/rng.hpp"

namespace rfp {

AdaptationRegime AdaptationRegime::frozen() {
    AdaptationRegime r;
    r.kind = RegimeKind::FrozenExpert;
    return r;
}

AdaptationRegime AdaptationRegime::pft(std::vector<int> layers) {
    AdaptationRegime r;
    r.kind = RegimeKind::PartialFineTune;
    r.unfrozen_layers = std::move(layers);
    return r;
}

AdaptationRegime AdaptationRegime::rfprompt(int prompt_len, float sigma) {
    AdaptationRegime r;
    r.kind = RegimeKind::RFPrompt;
    r.prompt_len = prompt_len;
    r.prompt_sigma = sigma;
    return r;
}

std::string AdaptationRegime::name() const {
    switch (kind) {
        case RegimeKind::FrozenExpert: return "frozen";
        case RegimeKind::PartialFineTune: return "pft";
        case RegimeKind::RFPrompt: return "rfprompt";
    }
    return "unknown";
}

AdaptationRegime regime_from_name(const std::string& name) {
    if (name == "frozen") return AdaptationRegime::frozen();
    if (name == "pft") return AdaptationRegime::pft();
    if (name == "rfprompt") return AdaptationRegime::rfprompt();
    throw config_error("unknown regime: " + name + " (frozen|pft|rfprompt)");
}

void TrainConfig::validate() const {
    if (!(lr_backbone > 0.0f) || !(lr_adapt > 0.0f))
        throw config_error("train: learning rates must be > 0");
    if (early_stop_patience < 1) throw config_error("train: patience must be >= 1");
    if (batch_size < 1 || max_epochs < 1) throw config_error("train: bad batch/epoch config");
    if (label_smoothing < 0.0f || label_smoothing >= 1.0f)
        throw config_error("train: label_smoothing must be in [0, 1)");
}

void write_history_csv(const TrainHistory& h, const std::string& path, uint64_t config_hash,
                       uint64_t seed) {
    std::ofstream f(path);
    if (!f) throw data_error("cannot write history " + path);
    char line[256];
    std::snprintf(line, sizeof(line), "# config_hash=%016llx seed=%llu\n",
                  static_cast<unsigned long long>(config_hash),
                  static_cast<unsigned long long>(seed));
    f << line;
    f << "epoch,train_loss,val_loss,val_acc,lr_backbone,lr_adapt\n";
    for (const EpochStats& e : h.epochs) {
        std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", e.epoch, e.train_loss,
                      e.val_loss, e.val_acc, static_cast<double>(e.lr_backbone),
                      static_cast<double>(e.lr_adapt));
        f << line;
    }
}

// ---- loss --------------------------------------------------------------

std::vector<float> smoothed_targets(int y, float eps, int n_classes) {
    if (y < 0 || y >= n_classes)
        throw config_error("smoothed_targets: label " + std::to_string(y) + " out of " +
                           std::to_string(n_classes));
    std::vector<float> t(static_cast<size_t>(n_classes), eps / static_cast<float>(n_classes));
    t[static_cast<size_t>(y)] += 1.0f - eps;
    return t;
}

Tensor smoothed_cross_entropy(Tape& tape, const Tensor& logits, int y, float eps) {
    const int c = static_cast<int>(logits.numel());
    const std::vector<float> targets = smoothed_targets(y, eps, c);
    const float* x = logits.values().data();

    float mx = x[0];
    for (int i = 1; i < c; ++i) mx = std::max(mx, x[i]);
    double denom = 0.0;
    for (int i = 0; i < c; ++i) denom += std::exp(static_cast<double>(x[i]) - mx);
    const double lse = std::log(denom) + mx;

    double loss = 0.0;
    std::vector<float> probs(static_cast<size_t>(c));
    for (int i = 0; i < c; ++i) {
        const double logp = static_cast<double>(x[i]) - lse;
        probs[static_cast<size_t>(i)] = static_cast<float>(std::exp(logp));
        loss -= static_cast<double>(targets[static_cast<size_t>(i)]) * logp;
    }
    Tensor out = Tensor::scalar(static_cast<float>(loss));
    if (tape.recording() && logits.requires_grad()) {
        out.set_requires_grad(true);
        out.ensure_grad();
        const_cast<Tensor&>(logits).ensure_grad();
        auto ln = logits.node();
        auto on = out.node();
        tape.record([ln, on, probs = std::move(probs), targets, c] {
            const float g = on->grad[0];
            for (int i = 0; i < c; ++i)
                ln->grad[static_cast<size_t>(i)] +=
                    g * (probs[static_cast<size_t>(i)] - targets[static_cast<size_t>(i)]);
        });
    }
    return out;
}

// ---- optimizer -----------------------------------------------------------

AdamW::AdamW(std::vector<Slot> slots, float weight_decay, float beta1, float beta2, float eps)
    : slots_(std::move(slots)), wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps) {
    states_.resize(slots_.size());
    for (size_t i = 0; i < slots_.size(); ++i) {
        states_[i].m.assign(slots_[i].param.numel(), 0.0f);
        states_[i].v.assign(slots_[i].param.numel(), 0.0f);
        slots_[i].param.ensure_grad();
    }
}

void AdamW::step(float lr_backbone, float lr_adapt) {
    ++t_;
    const double bc1 = 1.0 - std::pow(static_cast<double>(b1_), t_);
    const double bc2 = 1.0 - std::pow(static_cast<double>(b2_), t_);
    for (size_t s = 0; s < slots_.size(); ++s) {
        Slot& slot = slots_[s];
        State& st = states_[s];
        const float lr = slot.backbone_rate ? lr_backbone : lr_adapt;
        float* w = slot.param.values().data();
        const float* g = slot.param.grad().data();
        const size_t n = slot.param.numel();
        for (size_t i = 0; i < n; ++i) {
            st.m[i] = b1_ * st.m[i] + (1.0f - b1_) * g[i];
            st.v[i] = b2_ * st.v[i] + (1.0f - b2_) * g[i] * g[i];
            const float mhat = static_cast<float>(st.m[i] / bc1);
            const float vhat = static_cast<float>(st.v[i] / bc2);
            float upd = mhat / (std::sqrt(vhat) + eps_);
            if (slot.decay) upd += wd_ * w[i];
            w[i] -= lr * upd;
        }
    }
}

void AdamW::zero_grad() {
    for (Slot& s : slots_) s.param.zero_grad();
}

float lr_schedule(int step, int steps_per_epoch, int max_epochs, float base_lr,
                  int warmup_epochs) {
    const double e = static_cast<double>(step) / std::max(1, steps_per_epoch);
    if (warmup_epochs > 0 && e < warmup_epochs)
        return static_cast<float>(base_lr * e / warmup_epochs);
    const double span = std::max(1e-12, static_cast<double>(max_epochs - warmup_epochs));
    const double progress = std::min(1.0, (e - warmup_epochs) / span);
    return static_cast<float>(0.5 * base_lr * (1.0 + std::cos(3.14159265358979323846 * progress)));
}

// ---- regimes ---------------------------------------------------------------

std::vector<std::string> select_trainable(const MoEClassifier& model,
                                          const AdaptationRegime& regime) {
    std::vector<std::string> names;
    auto matches = [&](const std::string& name) {
        if (name.rfind("router.", 0) == 0 || name.rfind("head.", 0) == 0) return true;
        switch (regime.kind) {
            case RegimeKind::FrozenExpert:
                return false;
            case RegimeKind::RFPrompt:
                return name.rfind("prompts.", 0) == 0;
            case RegimeKind::PartialFineTune: {
                if (name.rfind("expert.", 0) != 0) return false;
                for (int l : regime.unfrozen_layers) {
                    const std::string tag = ".layer." + std::to_string(l) + ".";
                    if (name.find(tag) != std::string::npos) return true;
                }
                return false;
            }
        }
        return false;
    };
    for (const ParamInfo& p : model.params().all())
        if (matches(p.name)) names.push_back(p.name);
    return names;
}

void apply_trainable(MoEClassifier& model, const std::vector<std::string>& names) {
    for (const ParamInfo& p : model.params().all()) {
        const bool on = std::find(names.begin(), names.end(), p.name) != names.end();
        Tensor t = p.tensor;
        t.set_requires_grad(on);
    }
}

std::vector<AdamW::Slot> optimizer_slots(const MoEClassifier& model,
                                         const std::vector<std::string>& names) {
    std::vector<AdamW::Slot> slots;
    for (const std::string& name : names) {
        AdamW::Slot s;
        bool found = false;
        for (const ParamInfo& p : model.params().all())
            if (p.name == name) {
                s.param = p.tensor;
                s.decay = p.decay;
                found = true;
                break;
            }
        if (!found) throw config_error("optimizer_slots: unknown parameter " + name);
        s.backbone_rate = name.rfind("expert.", 0) == 0;
        slots.push_back(std::move(s));
    }
    return slots;
}

uint64_t params_checksum(const ParamRegistry& reg, const std::string& prefix) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const ParamInfo& p : reg.all()) {
        if (!prefix.empty() && p.name.rfind(prefix, 0) != 0) continue;
        h = (h ^ p.tensor.checksum()) * 0x100000001b3ULL;
    }
    return h;
}

// ---- shared loop pieces ----------------------------------------------------

namespace {

void shuffle_indices(std::vector<int>& idx, Pcg32& rng) {
    for (size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[static_cast<size_t>(rng.next_below(static_cast<int>(i)))]);
}

struct ParamSnapshot {
    std::vector<std::string> names;
    std::vector<std::vector<float>> values;
};

ParamSnapshot take_snapshot(const MoEClassifier& model, const std::vector<std::string>& names) {
    ParamSnapshot s;
    s.names = names;
    for (const std::string& n : names) {
        Tensor t = model.params().get(n);
        s.values.emplace_back(t.values().begin(), t.values().end());
    }
    return s;
}

void restore_snapshot(MoEClassifier& model, const ParamSnapshot& s) {
    for (size_t i = 0; i < s.names.size(); ++i) {
        Tensor t = model.params().get(s.names[i]);
        std::copy(s.values[i].begin(), s.values[i].end(), t.values().begin());
    }
}

}  // namespace

EvalStats evaluate_loss_acc(const MoEClassifier& model, const SpecDataset& data,
                            const std::vector<int>& idx, bool use_prompts, float eps) {
    if (idx.empty()) throw data_error("evaluate: empty index list");
    Tape tape;
    NoGrad pause(tape);
    double loss = 0.0;
    size_t correct = 0;
    for (int i : idx) {
        auto out = model.forward(tape, data.specs[static_cast<size_t>(i)], use_prompts);
        const int y = data.labels[static_cast<size_t>(i)];
        Tensor l = smoothed_cross_entropy(tape, out.logits, y, eps);
        loss += l.item();
        int argmax = 0;
        for (int c = 1; c < static_cast<int>(out.logits.numel()); ++c)
            if (out.logits.at(c) > out.logits.at(argmax)) argmax = c;
        if (argmax == y) ++correct;
        tape.clear();
    }
    return {loss / static_cast<double>(idx.size()),
            static_cast<double>(correct) / static_cast<double>(idx.size())};
}

namespace {

// One epoch of batched single-sample accumulation. Returns the mean train
// loss (f64 accumulation) and advances the optimizer.
double train_epoch(MoEClassifier& model, const SpecDataset& data, std::vector<int>& order,
                   bool use_prompts, const TrainConfig& cfg, AdamW& opt, int& step,
                   int steps_per_epoch, float base_lr_backbone, float base_lr_adapt,
                   float& lr_b_out, float& lr_h_out) {
    double total = 0.0;
    size_t seen = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
        const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
        const float inv_batch = 1.0f / static_cast<float>(end - start);
        opt.zero_grad();
        Tape tape;
        for (size_t b = start; b < end; ++b) {
            const int i = order[b];
            auto out = model.forward(tape, data.specs[static_cast<size_t>(i)], use_prompts);
            Tensor loss = smoothed_cross_entropy(tape, out.logits,
                                                 data.labels[static_cast<size_t>(i)],
                                                 cfg.label_smoothing);
            const double lv = loss.item();
            if (!std::isfinite(lv)) throw numeric_error("training loss is not finite");
            total += lv;
            ++seen;
            tape.backward(loss, inv_batch);
            tape.clear();
        }
        lr_b_out = lr_schedule(step, steps_per_epoch, cfg.max_epochs, base_lr_backbone,
                               cfg.warmup_epochs);
        lr_h_out = lr_schedule(step, steps_per_epoch, cfg.max_epochs, base_lr_adapt,
                               cfg.warmup_epochs);
        opt.step(lr_b_out, lr_h_out);
        ++step;
    }
    return total / static_cast<double>(seen);
}

}  // namespace

// ---- pretext -----------------------------------------------------------------

std::vector<double> pretext_pretrain(MoEClassifier& model, const SpecDataset& data,
                                     const std::vector<std::vector<int>>& slice_train,
                                     const std::vector<std::vector<int>>& slice_val,
                                     const TrainConfig& cfg) {
    cfg.validate();
    const ModelConfig& mc = model.config();
    if (slice_train.size() != static_cast<size_t>(mc.n_experts) ||
        slice_val.size() != static_cast<size_t>(mc.n_experts))
        throw config_error("pretext: need one train/val slice per expert");

    // only the expert being trained (plus its throwaway head) is trainable
    for (const ParamInfo& p : model.params().all()) {
        Tensor t = p.tensor;
        t.set_requires_grad(false);
    }

    std::vector<double> val_accs;
    for (int e = 0; e < mc.n_experts; ++e) {
        const auto& train_idx = slice_train[static_cast<size_t>(e)];
        const auto& val_idx = slice_val[static_cast<size_t>(e)];
        if (train_idx.empty() || val_idx.empty())
            throw data_error("pretext: empty slice for expert " + std::to_string(e));

        ExpertEncoder& expert = model.experts()[static_cast<size_t>(e)];

        ParamRegistry scratch;
        Pcg32 rng(mix_seed(cfg.seed, 0x70726574ULL + static_cast<uint64_t>(e)));
        ClassifierHead pretext_head;
        pretext_head.init(scratch, mc, rng);

        std::vector<std::string> expert_names;
        for (const ParamInfo& p : model.params().all())
            if (p.name.rfind("expert." + std::to_string(e) + ".", 0) == 0)
                expert_names.push_back(p.name);
        for (const std::string& n : expert_names) {
            Tensor t = model.params().get(n);
            t.set_requires_grad(true);
        }

        std::vector<AdamW::Slot> slots = optimizer_slots(model, expert_names);
        for (AdamW::Slot& s : slots) s.backbone_rate = false;  // from-scratch rate
        for (const ParamInfo& p : scratch.all()) {
            Tensor t = p.tensor;
            t.set_requires_grad(true);
            slots.push_back({p.tensor, p.decay, false});
        }
        AdamW opt(std::move(slots), cfg.weight_decay);

        auto eval_slice = [&](const std::vector<int>& idx) -> EvalStats {
            Tape tape;
            NoGrad pause(tape);
            double loss = 0.0;
            size_t correct = 0;
            for (int i : idx) {
                Tensor c = expert.forward(tape, data.specs[static_cast<size_t>(i)], mc).cls;
                Tensor logits = pretext_head.forward(tape, c, mc.ln_eps);
                const int y = data.labels[static_cast<size_t>(i)];
                loss += smoothed_cross_entropy(tape, logits, y, cfg.label_smoothing).item();
                int argmax = 0;
                for (int k = 1; k < static_cast<int>(logits.numel()); ++k)
                    if (logits.at(k) > logits.at(argmax)) argmax = k;
                if (argmax == y) ++correct;
                tape.clear();
            }
            return {loss / static_cast<double>(idx.size()),
                    static_cast<double>(correct) / static_cast<double>(idx.size())};
        };

        std::vector<std::string> snap_names = expert_names;
        ParamSnapshot best = take_snapshot(model, snap_names);
        double best_val = std::numeric_limits<double>::infinity();
        double best_acc = 0.0;
        int since_best = 0;
        int step = 0;
        const int steps_per_epoch = std::max<int>(
            1, static_cast<int>((train_idx.size() + cfg.batch_size - 1) / cfg.batch_size));

        std::vector<int> order = train_idx;
        for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
            Pcg32 shuffle_rng(mix_seed(cfg.seed, 0xb617c000ULL + static_cast<uint64_t>(epoch) +
                                                     (static_cast<uint64_t>(e) << 32)));
            shuffle_indices(order, shuffle_rng);

            double total = 0.0;
            size_t seen = 0;
            for (size_t start = 0; start < order.size();
                 start += static_cast<size_t>(cfg.batch_size)) {
                const size_t bend = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
                const float inv = 1.0f / static_cast<float>(bend - start);
                opt.zero_grad();
                Tape tape;
                for (size_t b = start; b < bend; ++b) {
                    const int i = order[b];
                    Tensor c = expert.forward(tape, data.specs[static_cast<size_t>(i)], mc).cls;
                    Tensor logits = pretext_head.forward(tape, c, mc.ln_eps);
                    Tensor loss = smoothed_cross_entropy(
                        tape, logits, data.labels[static_cast<size_t>(i)], cfg.label_smoothing);
                    const double lv = loss.item();
                    if (!std::isfinite(lv)) throw numeric_error("pretext loss is not finite");
                    total += lv;
                    ++seen;
                    tape.backward(loss, inv);
                    tape.clear();
                }
                const float lr = lr_schedule(step, steps_per_epoch, cfg.max_epochs, cfg.lr_adapt,
                                             cfg.warmup_epochs);
                opt.step(lr, lr);
                ++step;
            }
            (void)total;
            (void)seen;

            const EvalStats vs = eval_slice(val_idx);
            if (vs.loss < best_val) {
                best_val = vs.loss;
                best_acc = vs.accuracy;
                best = take_snapshot(model, snap_names);
                since_best = 0;
            } else if (++since_best >= cfg.early_stop_patience) {
                break;
            }
        }
        restore_snapshot(model, best);
        val_accs.push_back(best_acc);

        for (const std::string& n : expert_names) {
            Tensor t = model.params().get(n);
            t.set_requires_grad(false);
        }
    }
    return val_accs;
}

// ---- adaptation -----------------------------------------------------------

TrainHistory adapt(MoEClassifier& model, const AdaptationRegime& regime, const SpecDataset& data,
                   const std::vector<int>& train_idx, const std::vector<int>& val_idx,
                   const TrainConfig& cfg) {
    cfg.validate();
    TrainHistory history;
    if (train_idx.empty()) return history;  // zero-shot path: untouched model
    if (val_idx.empty()) throw data_error("adapt: empty validation set");

    if (regime.kind == RegimeKind::RFPrompt && !model.has_prompts())
        model.attach_prompts(regime.prompt_len, regime.prompt_sigma, mix_seed(cfg.seed, 0x9072ULL));
    const bool use_prompts = regime.kind == RegimeKind::RFPrompt;

    const std::vector<std::string> warm_names =
        select_trainable(model, AdaptationRegime::frozen());
    const std::vector<std::string> full_names = select_trainable(model, regime);

    ParamSnapshot best = take_snapshot(model, full_names);
    int since_best = 0;
    int step = 0;
    const int steps_per_epoch = std::max<int>(
        1, static_cast<int>((train_idx.size() + cfg.batch_size - 1) / cfg.batch_size));

    apply_trainable(model, warm_names);
    AdamW opt(optimizer_slots(model, warm_names), cfg.weight_decay);
    bool warm_phase = true;

    std::vector<int> order = train_idx;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        if (warm_phase && epoch >= cfg.router_warmup_epochs) {
            apply_trainable(model, full_names);
            opt = AdamW(optimizer_slots(model, full_names), cfg.weight_decay);
            warm_phase = false;
        }
        Pcg32 shuffle_rng(mix_seed(cfg.seed, 0xe50c0000ULL + static_cast<uint64_t>(epoch)));
        shuffle_indices(order, shuffle_rng);

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss =
            train_epoch(model, data, order, use_prompts, cfg, opt, step, steps_per_epoch,
                        cfg.lr_backbone, cfg.lr_adapt, stats.lr_backbone, stats.lr_adapt);

        const EvalStats vs = evaluate_loss_acc(model, data, val_idx, use_prompts,
                                               cfg.label_smoothing);
        stats.val_loss = vs.loss;
        stats.val_acc = vs.accuracy;

        if (vs.loss < history.best_val_loss) {
            history.best_val_loss = vs.loss;
            history.best_epoch = epoch;
            best = take_snapshot(model, full_names);
            since_best = 0;
        } else {
            ++since_best;
        }
        stats.epochs_since_best = since_best;
        history.epochs.push_back(stats);
        if (since_best >= cfg.early_stop_patience) break;
    }
    restore_snapshot(model, best);
    return history;
}

}  // namespace rfp
