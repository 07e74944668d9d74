#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "rfp/backbone.hpp"
#include "rfp/prompts.hpp"
#include "rfp/router.hpp"

namespace rfp {

// Three independent expert encoders behind a CLS-driven top-k router, a
// shared classifier head, and (optionally) a deep prompt bank.
class MoEClassifier {
public:
    MoEClassifier(ModelConfig config, uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    uint64_t seed() const { return seed_; }

    std::vector<ExpertEncoder>& experts() { return experts_; }
    const std::vector<ExpertEncoder>& experts() const { return experts_; }
    Router& router() { return router_; }
    const Router& router() const { return router_; }
    ClassifierHead& head() { return head_; }
    const ClassifierHead& head() const { return head_; }
    PromptBank& prompts() { return prompts_; }
    const PromptBank& prompts() const { return prompts_; }
    bool has_prompts() const { return cfg_.prompt_len > 0; }

    ParamRegistry& params() { return params_; }
    const ParamRegistry& params() const { return params_; }

    // Adds a freshly initialized prompt bank (adapt-time, prompt regime).
    void attach_prompts(int length, float sigma, uint64_t seed);

    struct ForwardResult {
        Tensor logits;   // 1 x C
        Tensor z_final;  // 1 x d
        RoutingDecision decision;
    };

    // Routing first, then only the selected experts run. Prompts are
    // injected when the bank exists and use_prompts is set.
    ForwardResult forward(Tape& tape, const Spectrogram& spec, bool use_prompts) const;

    // Routing representation (config.routing_input == 0 path); exposed for
    // tests and the embedding exporter.
    Tensor shared_cls(Tape& tape) const;

private:
    ModelConfig cfg_;
    uint64_t seed_ = 0;
    std::vector<ExpertEncoder> experts_;
    Router router_;
    ClassifierHead head_;
    PromptBank prompts_;
    ParamRegistry params_;
};

// ---- checkpoints -------------------------------------------------------
// Single file: u64 little-endian header length, JSON header (config, meta,
// named parameter index), then the f32 payload in index order.

void save_checkpoint(const MoEClassifier& model, const std::string& path,
                     const nlohmann::json& meta = {});
MoEClassifier load_checkpoint(const std::string& path);
nlohmann::json read_checkpoint_meta(const std::string& path);

nlohmann::json config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const nlohmann::json& j);

}  // namespace rfp
