#include "rfp/router.hpp"

#include <algorithm>
#include <numeric>

#include "rfp/errors.hpp"

namespace rfp {

RoutingDecision route_from_weights(const std::vector<float>& full_weights, int k) {
    const int n = static_cast<int>(full_weights.size());
    if (k < 1 || k > n) throw config_error("route: k out of range");
    RoutingDecision d;
    d.full_weights = full_weights;
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (full_weights[static_cast<size_t>(a)] != full_weights[static_cast<size_t>(b)])
            return full_weights[static_cast<size_t>(a)] > full_weights[static_cast<size_t>(b)];
        return a < b;  // ties -> lower expert index
    });
    d.selected.assign(order.begin(), order.begin() + k);
    float kept = 0.0f;
    for (int idx : d.selected) kept += full_weights[static_cast<size_t>(idx)];
    for (int idx : d.selected)
        d.selected_weights.push_back(full_weights[static_cast<size_t>(idx)] / kept);
    return d;
}

void Router::init(ParamRegistry& reg, const ModelConfig& cfg, Pcg32& rng) {
    w1 = Tensor::zeros({cfg.d_model, cfg.router_hidden}, true);
    init_trunc_normal(w1, 0.02f, rng);
    b1 = Tensor::zeros({cfg.router_hidden}, true);
    w2 = Tensor::zeros({cfg.router_hidden, cfg.n_experts}, true);
    init_trunc_normal(w2, 0.02f, rng);
    b2 = Tensor::zeros({cfg.n_experts}, true);
    reg.add("router.fc1.weight", w1, true);
    reg.add("router.fc1.bias", b1, false);
    reg.add("router.fc2.weight", w2, true);
    reg.add("router.fc2.bias", b2, false);
}

Tensor Router::logits(Tape& tape, const Tensor& shared_cls) const {
    if (shared_cls.cols() != w1.rows())
        throw dim_error("router: input " + shared_cls.shape_str() + " vs " + w1.shape_str());
    Tensor h = gelu(tape, linear(tape, shared_cls, w1, b1));
    return linear(tape, h, w2, b2);
}

RoutingDecision route(Tape& tape, const Router& router, const Tensor& shared_cls, int k) {
    NoGrad pause(tape);
    Tensor probs = softmax_rows(tape, router.logits(tape, shared_cls));
    std::vector<float> w(probs.values().begin(), probs.values().end());
    return route_from_weights(w, k);
}

Tensor fuse(Tape& tape, const RoutingDecision& decision, const std::vector<Tensor>& expert_cls) {
    if (decision.selected.empty()) throw config_error("fuse: empty selection");
    Tensor z;
    for (size_t i = 0; i < decision.selected.size(); ++i) {
        const int idx = decision.selected[i];
        if (idx < 0 || idx >= static_cast<int>(expert_cls.size()) ||
            !expert_cls[static_cast<size_t>(idx)].defined())
            throw data_error("fuse: missing embedding for selected expert " + std::to_string(idx));
        Tensor term = scale(tape, expert_cls[static_cast<size_t>(idx)], decision.selected_weights[i]);
        z = (i == 0) ? term : add(tape, z, term);
    }
    return z;
}

Tensor selection_weights(Tape& tape, const Tensor& probs, const RoutingDecision& decision) {
    std::vector<Tensor> kept;
    kept.reserve(decision.selected.size());
    for (int idx : decision.selected) kept.push_back(slice_cols(tape, probs, idx, idx + 1));
    Tensor sel = kept.size() == 1 ? kept[0] : concat_cols(tape, kept);
    return div_by_scalar(tape, sel, sum_all(tape, sel));
}

void ClassifierHead::init(ParamRegistry& reg, const ModelConfig& cfg, Pcg32& rng) {
    w1 = Tensor::zeros({cfg.d_model, cfg.head_hidden}, true);
    init_trunc_normal(w1, 0.02f, rng);
    b1 = Tensor::zeros({cfg.head_hidden}, true);
    ln_g = Tensor::full({cfg.head_hidden}, 1.0f, true);
    ln_b = Tensor::zeros({cfg.head_hidden}, true);
    w2 = Tensor::zeros({cfg.head_hidden, cfg.n_classes}, true);
    init_trunc_normal(w2, 0.02f, rng);
    b2 = Tensor::zeros({cfg.n_classes}, true);
    reg.add("head.fc1.weight", w1, true);
    reg.add("head.fc1.bias", b1, false);
    reg.add("head.ln.gamma", ln_g, false);
    reg.add("head.ln.beta", ln_b, false);
    reg.add("head.fc2.weight", w2, true);
    reg.add("head.fc2.bias", b2, false);
}

Tensor ClassifierHead::forward(Tape& tape, const Tensor& z_final, float ln_eps) const {
    Tensor h = linear(tape, z_final, w1, b1);
    h = gelu(tape, layernorm_rows(tape, h, ln_g, ln_b, ln_eps));
    return linear(tape, h, w2, b2);
}

size_t count_router_params(const ParamRegistry& reg) { return reg.count_with_prefix("router."); }

size_t count_head_params(const ParamRegistry& reg) { return reg.count_with_prefix("head."); }

}  // namespace rfp
