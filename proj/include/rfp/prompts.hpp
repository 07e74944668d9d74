#pragma once

#include <cstdint>
#include <vector>

#include "rfp/params.hpp"
#include "rfp/tensor.hpp"

namespace rfp {

// Learnable deep prompt tokens: one M x d tensor per (expert, layer),
// prepended before each transformer block and stripped after it.
struct PromptBank {
    int n_experts = 0;
    int n_layers = 0;
    int length = 0;  // M
    int dim = 0;     // d
    float sigma = 0.02f;
    std::vector<Tensor> prompts;  // [expert * n_layers + layer]

    Tensor& at(int expert, int layer) {
        return prompts[static_cast<size_t>(expert) * n_layers + layer];
    }
    const Tensor& at(int expert, int layer) const {
        return prompts[static_cast<size_t>(expert) * n_layers + layer];
    }

    std::vector<Tensor> for_expert(int expert) const {
        return {prompts.begin() + static_cast<ptrdiff_t>(expert) * n_layers,
                prompts.begin() + static_cast<ptrdiff_t>(expert + 1) * n_layers};
    }

    // Exact trainable size by enumeration: n_experts * n_layers * M * d.
    size_t param_count() const;
};

// i.i.d. N(0, sigma^2) entries, trainable, deterministic under seed.
// Registers every tensor as "prompts.expert.{i}.layer.{l}" (no weight decay).
PromptBank init_prompt_bank(ParamRegistry& reg, int length, int dim, int n_layers, int n_experts,
                            float sigma, uint64_t seed);

// Prompt rows first, original tokens after: (M + S) x d. M = 0 passes the
// tokens through untouched.
Tensor inject(Tape& tape, const Tensor& prompts_l, const Tensor& tokens);

// Drops the first M rows of a block's output; gradient still reaches the
// prompt tokens through their key/value participation inside the block.
Tensor strip(Tape& tape, const Tensor& augmented, int m);

// Diagnostic: pre-softmax attention scores q . k_p / sqrt(d_k) of one query
// toward each prompt key row. Pure, no tape.
std::vector<float> attention_scores_to_prompts(std::span<const float> query_head,
                                               const Tensor& prompt_keys);

}  // namespace rfp
