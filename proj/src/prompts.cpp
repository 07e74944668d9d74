#include "rfp/prompts.hpp"

#include <cmath>

#include "rfp/errors.hpp"
#include "rfp/rng.hpp"

namespace rfp {

size_t PromptBank::param_count() const {
    size_t n = 0;
    for (const Tensor& p : prompts) n += p.numel();
    return n;
}

PromptBank init_prompt_bank(ParamRegistry& reg, int length, int dim, int n_layers, int n_experts,
                            float sigma, uint64_t seed) {
    if (length < 1 || dim < 1 || n_layers < 1 || n_experts < 1)
        throw config_error("init_prompt_bank: all dimensions must be >= 1");
    if (!(sigma > 0.0f)) throw config_error("init_prompt_bank: sigma must be > 0");

    PromptBank bank;
    bank.n_experts = n_experts;
    bank.n_layers = n_layers;
    bank.length = length;
    bank.dim = dim;
    bank.sigma = sigma;
    Pcg32 rng(seed);
    for (int e = 0; e < n_experts; ++e)
        for (int l = 0; l < n_layers; ++l) {
            Tensor p = Tensor::zeros({length, dim}, true);
            for (float& v : p.values()) v = sigma * rng.gaussian();
            reg.add("prompts.expert." + std::to_string(e) + ".layer." + std::to_string(l), p,
                    false);
            bank.prompts.push_back(p);
        }
    return bank;
}

Tensor inject(Tape& tape, const Tensor& prompts_l, const Tensor& tokens) {
    if (prompts_l.rows() == 0) return tokens;
    return concat_rows(tape, prompts_l, tokens);
}

Tensor strip(Tape& tape, const Tensor& augmented, int m) {
    if (m == 0) return augmented;
    if (m < 0 || m >= augmented.rows())
        throw dim_error("strip: M=" + std::to_string(m) + " out of " + augmented.shape_str());
    return slice_rows(tape, augmented, m, augmented.rows());
}

std::vector<float> attention_scores_to_prompts(std::span<const float> query_head,
                                               const Tensor& prompt_keys) {
    const int m = prompt_keys.rows(), dk = prompt_keys.cols();
    if (static_cast<size_t>(dk) != query_head.size())
        throw dim_error("attention_scores_to_prompts: query dim " +
                        std::to_string(query_head.size()) + " vs key dim " + std::to_string(dk));
    const float sc = 1.0f / std::sqrt(static_cast<float>(dk));
    std::vector<float> scores(static_cast<size_t>(m));
    for (int p = 0; p < m; ++p) {
        double dot = 0.0;
        for (int j = 0; j < dk; ++j)
            dot += static_cast<double>(query_head[static_cast<size_t>(j)]) * prompt_keys.at(p, j);
        scores[static_cast<size_t>(p)] = static_cast<float>(dot * sc);
    }
    return scores;
}

}  // namespace rfp
