#pragma once

#include <string>
#include <vector>

#include "rfp/dsp.hpp"
#include "rfp/params.hpp"
#include "rfp/rng.hpp"
#include "rfp/tensor.hpp"

namespace rfp {

// Expert encoder dimensions. The default configuration is a 12-layer,
// 4-head, d=128 pre-norm transformer over 64 patch tokens plus CLS.
struct ModelConfig {
    int input_size = kSpecSize;  // spectrogram side
    int patch_size = 16;         // 16x16 patches tile 128x128 into 64 tokens
    int d_model = 128;
    int n_layers = 12;
    int n_heads = 4;
    int ffn_mult = 4;
    int n_experts = 3;
    int router_hidden = 128;
    int head_hidden = 256;
    int n_classes = 5;
    int top_k = 2;
    float ln_eps = 1e-5f;
    bool final_layernorm = false;   // extra LN after the last block, off by default
    bool center_dc = false;         // spectrogram frequency-row rotation, off by default
    int routing_input = 0;          // 0: first expert's post-embedding CLS row
                                    // 1: mean of all experts' final CLS
    int prompt_len = 0;             // M; 0 = no prompt bank
    float prompt_sigma = 0.02f;

    int patches_per_side() const { return input_size / patch_size; }
    int n_patches() const { return patches_per_side() * patches_per_side(); }
    int patch_dim() const { return patch_size * patch_size; }
    int seq_len() const { return n_patches() + 1; }
    int head_dim() const { return d_model / n_heads; }

    void validate() const;

    // Same architecture at a narrower width (head/router hidden scale along).
    static ModelConfig with_width(int d);
};

// Builds the constant (no-grad) patch matrix: n_patches x patch_dim, each
// patch flattened in row-major order.
Tensor patch_matrix(const Spectrogram& spec, const ModelConfig& cfg);

struct PatchEmbedder {
    Tensor proj;  // patch_dim x d
    Tensor bias;  // d
    Tensor cls;   // 1 x d
    Tensor pos;   // (n_patches + 1) x d

    void init(ParamRegistry& reg, const std::string& prefix, const ModelConfig& cfg, Pcg32& rng);
    // CLS + projected patches + positional embeddings: seq_len x d
    Tensor embed(Tape& tape, const Spectrogram& spec, const ModelConfig& cfg) const;
    // Routing representation: the CLS row of the embedded sequence
    Tensor cls_row(Tape& tape) const;
};

struct TransformerLayer {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln1_g, ln1_b, ln2_g, ln2_b;
    Tensor w1, b1, w2, b2;  // FFN d -> ffn_mult*d -> d

    void init(ParamRegistry& reg, const std::string& prefix, const ModelConfig& cfg, Pcg32& rng);
    // Pre-norm residual block; sequence length S is preserved (S can exceed
    // seq_len when prompt tokens ride along).
    Tensor forward(Tape& tape, const Tensor& x, const ModelConfig& cfg) const;
};

// Scaled dot-product attention for one head: softmax(q k^T / sqrt(d_k)) v.
Tensor attention(Tape& tape, const Tensor& q, const Tensor& k, const Tensor& v);

// All heads of softmax(q k^T / sqrt(d_k)) v in one op over the full S x d
// projections, head h occupying columns [h*d_k, (h+1)*d_k). Same math as
// per-head attention() with far fewer graph nodes.
Tensor mhsa_core(Tape& tape, const Tensor& q, const Tensor& k, const Tensor& v, int n_heads);

struct ExpertEncoder {
    int expert_id = 0;
    std::string protocol;  // "lte" | "wifi" | "5g" label, cosmetic
    PatchEmbedder embedder;
    std::vector<TransformerLayer> layers;
    Tensor final_ln_g, final_ln_b;  // only when cfg.final_layernorm

    void init(ParamRegistry& reg, int id, const ModelConfig& cfg, Pcg32& rng);

    struct Output {
        Tensor sequence;  // seq_len x d
        Tensor cls;       // 1 x d
    };
    // per_layer_prompts: empty, or exactly n_layers tensors of identical M x d.
    // Prompts are prepended before each block and stripped after it, so the
    // output always has seq_len rows.
    Output forward(Tape& tape, const Spectrogram& spec, const ModelConfig& cfg,
                   const std::vector<Tensor>& per_layer_prompts = {}) const;
};

// Exact parameter count of one expert, by enumerating its registry entries.
size_t count_expert_params(const ParamRegistry& reg, int expert_id);

// Truncated-normal init shared by all projection matrices.
void init_trunc_normal(Tensor t, float std, Pcg32& rng);

}  // namespace rfp
