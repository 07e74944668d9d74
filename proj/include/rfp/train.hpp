#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "rfp/model.hpp"

namespace rfp {

enum class RegimeKind { FrozenExpert, PartialFineTune, RFPrompt };

// Which parameter subsets train. Router and head are trainable in every
// regime; the prompt regime adds the bank, partial fine-tuning adds the
// last two transformer blocks of every expert.
struct AdaptationRegime {
    RegimeKind kind = RegimeKind::FrozenExpert;
    std::vector<int> unfrozen_layers{10, 11};  // partial fine-tune only
    int prompt_len = 16;                       // prompt regime only
    float prompt_sigma = 0.02f;

    static AdaptationRegime frozen();
    static AdaptationRegime pft(std::vector<int> layers = {10, 11});
    static AdaptationRegime rfprompt(int prompt_len = 16, float sigma = 0.02f);

    std::string name() const;
};

AdaptationRegime regime_from_name(const std::string& name);

struct TrainConfig {
    float lr_backbone = 1e-5f;
    float lr_adapt = 1e-3f;
    float weight_decay = 0.01f;
    int warmup_epochs = 5;
    int router_warmup_epochs = 2;
    int max_epochs = 100;
    int batch_size = 32;
    float label_smoothing = 0.1f;
    int early_stop_patience = 10;
    uint64_t seed = 0;

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    float lr_backbone = 0.0f;
    float lr_adapt = 0.0f;
    int epochs_since_best = 0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_val_loss = std::numeric_limits<double>::infinity();
};

// CSV: epoch, train_loss, val_loss, val_acc, lr_backbone, lr_adapt, with a
// comment header carrying the config hash and seed.
void write_history_csv(const TrainHistory& h, const std::string& path, uint64_t config_hash,
                       uint64_t seed);

// ---- loss --------------------------------------------------------------

// Smoothed target: (1 - eps) on the true class plus eps / C everywhere.
std::vector<float> smoothed_targets(int y, float eps, int n_classes);

// L = -sum_c t_c log softmax(logits)_c, stable log-sum-exp form.
Tensor smoothed_cross_entropy(Tape& tape, const Tensor& logits, int y, float eps);

// ---- optimizer -----------------------------------------------------------

// Decoupled AdamW. State exists only for the parameters handed in, so
// optimizer memory scales with the trainable set.
class AdamW {
public:
    struct Slot {
        Tensor param;
        bool decay = false;
        bool backbone_rate = false;  // eta_b instead of eta_h
    };

    AdamW(std::vector<Slot> slots, float weight_decay, float beta1 = 0.9f, float beta2 = 0.999f,
          float eps = 1e-8f);

    void step(float lr_backbone, float lr_adapt);
    void zero_grad();
    int steps_taken() const { return t_; }

private:
    struct State {
        std::vector<float> m, v;
    };
    std::vector<Slot> slots_;
    std::vector<State> states_;
    float wd_, b1_, b2_, eps_;
    int t_ = 0;
};

// Linear warm-up to base_lr over warmup_epochs (measured in optimizer
// steps), then cosine decay to zero at max_epochs.
float lr_schedule(int step, int steps_per_epoch, int max_epochs, float base_lr,
                  int warmup_epochs);

// ---- regimes ---------------------------------------------------------------

// Names of the parameters a regime trains; everything else stays frozen.
std::vector<std::string> select_trainable(const MoEClassifier& model,
                                          const AdaptationRegime& regime);

// Sets requires_grad exactly on the given names.
void apply_trainable(MoEClassifier& model, const std::vector<std::string>& names);

// Builds optimizer slots for the given names (backbone rate for expert.*).
std::vector<AdamW::Slot> optimizer_slots(const MoEClassifier& model,
                                         const std::vector<std::string>& names);

// ---- data view ----------------------------------------------------------

struct SpecDataset {
    std::vector<Spectrogram> specs;
    std::vector<int> labels;
    int n_classes = 0;
};

// Mean smoothed-CE loss and accuracy over an index list, inference mode.
struct EvalStats {
    double loss = 0.0;
    double accuracy = 0.0;
};
EvalStats evaluate_loss_acc(const MoEClassifier& model, const SpecDataset& data,
                            const std::vector<int>& idx, bool use_prompts, float eps);

// ---- training loops ---------------------------------------------------------

// Supervised desk-scale pretext: every expert trains on its own slice with
// a throwaway head (discarded afterwards). Returns per-expert validation
// accuracy of the restored best weights.
std::vector<double> pretext_pretrain(MoEClassifier& model, const SpecDataset& data,
                                     const std::vector<std::vector<int>>& slice_train,
                                     const std::vector<std::vector<int>>& slice_val,
                                     const TrainConfig& cfg);

// Two-phase adaptation: a dedicated router(+head) warm-up, then the
// regime's trainable set under differential learning rates with early
// stopping on validation loss. The model is left at the best-validation
// state; parameters outside the regime's set are bitwise untouched.
// An empty train list is the zero-shot path: the model is returned as-is.
TrainHistory adapt(MoEClassifier& model, const AdaptationRegime& regime, const SpecDataset& data,
                   const std::vector<int>& train_idx, const std::vector<int>& val_idx,
                   const TrainConfig& cfg);

// FNV-1a fold of every parameter under a name prefix ("" = all).
uint64_t params_checksum(const ParamRegistry& reg, const std::string& prefix = "");

}  // namespace rfp
