#pragma once

#include <vector>

#include "rfp/backbone.hpp"
#include "rfp/params.hpp"
#include "rfp/tensor.hpp"

namespace rfp {

// Full softmax over experts plus the renormalized top-k selection. Ties
// break toward the lower expert index.
struct RoutingDecision {
    std::vector<float> full_weights;      // softmax over all experts, sums to 1
    std::vector<int> selected;            // k indices, strongest first
    std::vector<float> selected_weights;  // renormalized over the selection, sums to 1
};

RoutingDecision route_from_weights(const std::vector<float>& full_weights, int k);

// Two-layer router MLP d -> hidden -> n_experts.
struct Router {
    Tensor w1, b1, w2, b2;

    void init(ParamRegistry& reg, const ModelConfig& cfg, Pcg32& rng);
    Tensor logits(Tape& tape, const Tensor& shared_cls) const;  // 1 x n_experts
};

// Softmax the router logits and pick top-k.
RoutingDecision route(Tape& tape, const Router& router, const Tensor& shared_cls, int k);

// z_final = sum of selected_weights[i] * expert_cls[selected[i]]. Unselected
// entries of expert_cls may be left undefined. k = 1 returns the selected
// embedding bit-exactly.
Tensor fuse(Tape& tape, const RoutingDecision& decision, const std::vector<Tensor>& expert_cls);

// Differentiable selection weights for the training graph: the probability
// row is masked to the selected experts and renormalized, keeping the
// router inside the gradient path.
Tensor selection_weights(Tape& tape, const Tensor& probs, const RoutingDecision& decision);

// Eq-style two-layer classifier: W2 gelu(LN(W1 z + b1)) + b2.
struct ClassifierHead {
    Tensor w1, b1, ln_g, ln_b, w2, b2;

    void init(ParamRegistry& reg, const ModelConfig& cfg, Pcg32& rng);
    Tensor forward(Tape& tape, const Tensor& z_final, float ln_eps = 1e-5f) const;
};

size_t count_router_params(const ParamRegistry& reg);
size_t count_head_params(const ParamRegistry& reg);

}  // namespace rfp
