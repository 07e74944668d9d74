#include "rfp/backbone.hpp"

#include <cmath>
#include <limits>

#include "rfp/errors.hpp"
#include "rfp/fastmath.hpp"

namespace rfp {

void ModelConfig::validate() const {
    if (input_size % patch_size != 0)
        throw config_error("model: patch size " + std::to_string(patch_size) +
                           " does not tile input " + std::to_string(input_size));
    if (d_model % n_heads != 0) throw config_error("model: d_model must be divisible by n_heads");
    if (n_layers < 1 || n_experts < 1 || n_classes < 1)
        throw config_error("model: layers, experts and classes must be positive");
    if (top_k < 1 || top_k > n_experts) throw config_error("model: top_k out of range");
    if (routing_input != 0 && routing_input != 1)
        throw config_error("model: routing_input must be 0 or 1");
    if (prompt_len < 0) throw config_error("model: prompt_len must be >= 0");
}

ModelConfig ModelConfig::with_width(int d) {
    ModelConfig cfg;
    cfg.d_model = d;
    cfg.router_hidden = d;
    cfg.head_hidden = 2 * d;
    return cfg;
}

void init_trunc_normal(Tensor t, float std, Pcg32& rng) {
    for (float& v : t.values()) v = std * rng.truncated_gaussian(2.0f);
}

Tensor patch_matrix(const Spectrogram& spec, const ModelConfig& cfg) {
    if (spec.values.size() != static_cast<size_t>(cfg.input_size) * cfg.input_size)
        throw dim_error("patch_matrix: spectrogram is not " + std::to_string(cfg.input_size) +
                        "x" + std::to_string(cfg.input_size));
    const int ps = cfg.patch_size, grid = cfg.patches_per_side();
    Tensor m = Tensor::zeros({cfg.n_patches(), cfg.patch_dim()});
    for (int pr = 0; pr < grid; ++pr)
        for (int pc = 0; pc < grid; ++pc) {
            const int patch = pr * grid + pc;
            for (int r = 0; r < ps; ++r)
                for (int c = 0; c < ps; ++c)
                    m.at(patch, r * ps + c) =
                        spec.values[static_cast<size_t>(pr * ps + r) * cfg.input_size +
                                    (pc * ps + c)];
        }
    return m;
}

void PatchEmbedder::init(ParamRegistry& reg, const std::string& prefix, const ModelConfig& cfg,
                         Pcg32& rng) {
    proj = Tensor::zeros({cfg.patch_dim(), cfg.d_model}, true);
    // smaller than the 0.02 used everywhere else: raw magnitude patches reach
    // values near 60, and a 0.02-scale projection leaves patch tokens ~40x
    // larger than every other activation, which stalls from-scratch training
    init_trunc_normal(proj, 5e-4f, rng);
    bias = Tensor::zeros({cfg.d_model}, true);
    cls = Tensor::zeros({1, cfg.d_model}, true);
    pos = Tensor::zeros({cfg.seq_len(), cfg.d_model}, true);
    for (float& v : pos.values()) v = 0.02f * rng.gaussian();
    reg.add(prefix + ".proj.weight", proj, true);
    reg.add(prefix + ".proj.bias", bias, false);
    reg.add(prefix + ".cls", cls, false);
    reg.add(prefix + ".pos", pos, true);
}

Tensor PatchEmbedder::embed(Tape& tape, const Spectrogram& spec, const ModelConfig& cfg) const {
    Tensor patches = patch_matrix(spec, cfg);
    Tensor tokens = linear(tape, patches, proj, bias);
    Tensor seq = concat_rows(tape, cls, tokens);
    return add(tape, seq, pos);
}

Tensor PatchEmbedder::cls_row(Tape& tape) const {
    return add(tape, cls, slice_rows(tape, pos, 0, 1));
}

void TransformerLayer::init(ParamRegistry& reg, const std::string& prefix, const ModelConfig& cfg,
                            Pcg32& rng) {
    const int d = cfg.d_model, f = cfg.ffn_mult * cfg.d_model;
    auto proj = [&](Tensor& w, Tensor& b, const std::string& name, int in, int out) {
        w = Tensor::zeros({in, out}, true);
        init_trunc_normal(w, 0.02f, rng);
        b = Tensor::zeros({out}, true);
        reg.add(prefix + "." + name + ".weight", w, true);
        reg.add(prefix + "." + name + ".bias", b, false);
    };
    proj(wq, bq, "attn.q", d, d);
    proj(wk, bk, "attn.k", d, d);
    proj(wv, bv, "attn.v", d, d);
    proj(wo, bo, "attn.o", d, d);
    ln1_g = reg.add(prefix + ".ln1.gamma", Tensor::full({d}, 1.0f, true), false);
    ln1_b = reg.add(prefix + ".ln1.beta", Tensor::zeros({d}, true), false);
    ln2_g = reg.add(prefix + ".ln2.gamma", Tensor::full({d}, 1.0f, true), false);
    ln2_b = reg.add(prefix + ".ln2.beta", Tensor::zeros({d}, true), false);
    proj(w1, b1, "ffn.fc1", d, f);
    proj(w2, b2, "ffn.fc2", f, d);
}

Tensor attention(Tape& tape, const Tensor& q, const Tensor& k, const Tensor& v) {
    if (k.rows() != v.rows())
        throw dim_error("attention: key rows " + k.shape_str() + " vs value rows " +
                        v.shape_str());
    const float sc = 1.0f / std::sqrt(static_cast<float>(q.cols()));
    Tensor scores = scale(tape, matmul_nt(tape, q, k), sc);
    Tensor probs = softmax_rows(tape, scores);
    return matmul(tape, probs, v);
}

namespace {

inline float dot_f32(const float* __restrict a, const float* __restrict b, int n) {
    constexpr int kLanes = 8;
    float lanes[kLanes] = {};
    int i = 0;
    for (; i + kLanes <= n; i += kLanes)
        for (int l = 0; l < kLanes; ++l) lanes[l] += a[i + l] * b[i + l];
    float tail = 0.0f;
    for (; i < n; ++i) tail += a[i] * b[i];
    float s = 0.0f;
    for (int l = 0; l < kLanes; ++l) s += lanes[l];
    return s + tail;
}

inline void axpy_f32(float* __restrict y, const float* __restrict x, float a, int n) {
    for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

}  // namespace

namespace {

// head-major transposed pack: dst[t][j] = src[j, off + t]
void pack_head_t(const float* __restrict src, float* __restrict dst, int rows, int d, int off,
                 int dk) {
    for (int j = 0; j < rows; ++j)
        for (int t = 0; t < dk; ++t)
            dst[static_cast<size_t>(t) * rows + j] = src[static_cast<size_t>(j) * d + off + t];
}

}  // namespace

Tensor mhsa_core(Tape& tape, const Tensor& q, const Tensor& k, const Tensor& v, int n_heads) {
    if (q.cols() != k.cols() || k.shape() != v.shape() || q.cols() % n_heads != 0)
        throw dim_error("mhsa_core: bad shapes q=" + q.shape_str() + " k=" + k.shape_str() +
                        " v=" + v.shape_str());
    const int s = q.rows(), d = q.cols(), skv = k.rows(), dk = d / n_heads;
    const float sc = 1.0f / std::sqrt(static_cast<float>(dk));

    Tensor out = Tensor::zeros({s, d});
    // attention weights saved for backward: head-major, then query row
    auto probs = std::make_shared<std::vector<float>>(static_cast<size_t>(n_heads) * s * skv);
    std::vector<float> kt(static_cast<size_t>(dk) * skv), vt(static_cast<size_t>(dk) * skv);
    const float* qd = q.values().data();
    float* od = out.values().data();
    for (int h = 0; h < n_heads; ++h) {
        const int off = h * dk;
        pack_head_t(k.values().data(), kt.data(), skv, d, off, dk);
        pack_head_t(v.values().data(), vt.data(), skv, d, off, dk);
        for (int i = 0; i < s; ++i) {
            const float* qi = qd + static_cast<size_t>(i) * d + off;
            float* prow = probs->data() + (static_cast<size_t>(h) * s + i) * skv;
            // scores: prow = (K_head q_i) * sc, streaming over keys
            std::fill(prow, prow + skv, 0.0f);
            for (int t = 0; t < dk; ++t)
                axpy_f32(prow, kt.data() + static_cast<size_t>(t) * skv, qi[t], skv);
            float mx = prow[0] * sc;
            for (int j = 0; j < skv; ++j) {
                prow[j] *= sc;
                mx = std::max(mx, prow[j]);
            }
            for (int j = 0; j < skv; ++j) prow[j] = fast_expf(prow[j] - mx);
            float lanes[16] = {};
            int j = 0;
            for (; j + 16 <= skv; j += 16)
                for (int l = 0; l < 16; ++l) lanes[l] += prow[j + l];
            double denom = 0.0;
            for (; j < skv; ++j) denom += prow[j];
            for (int l = 0; l < 16; ++l) denom += lanes[l];
            const float inv = static_cast<float>(1.0 / denom);
            for (int j2 = 0; j2 < skv; ++j2) prow[j2] *= inv;
            float* oi = od + static_cast<size_t>(i) * d + off;
            for (int t = 0; t < dk; ++t)
                oi[t] = dot_f32(prow, vt.data() + static_cast<size_t>(t) * skv, skv);
        }
    }

    bool any = q.requires_grad() || k.requires_grad() || v.requires_grad();
    if (tape.recording() && any) {
        out.set_requires_grad(true);
        out.ensure_grad();
        for (const Tensor* t : {&q, &k, &v})
            if (t->requires_grad()) const_cast<Tensor*>(t)->ensure_grad();
        auto qn = q.node(), kn = k.node(), vn = v.node(), on = out.node();
        tape.record([qn, kn, vn, on, probs, s, d, skv, dk, sc, n_heads] {
            std::vector<float> kt(static_cast<size_t>(dk) * skv),
                vt(static_cast<size_t>(dk) * skv);
            std::vector<float> dkt(static_cast<size_t>(dk) * skv),
                dvt(static_cast<size_t>(dk) * skv);
            std::vector<float> dp(static_cast<size_t>(skv)), ds(static_cast<size_t>(skv));
            const float* qd2 = qn->value.data();
            const float* gd = on->grad.data();
            for (int h = 0; h < n_heads; ++h) {
                const int off = h * dk;
                pack_head_t(kn->value.data(), kt.data(), skv, d, off, dk);
                pack_head_t(vn->value.data(), vt.data(), skv, d, off, dk);
                std::fill(dkt.begin(), dkt.end(), 0.0f);
                std::fill(dvt.begin(), dvt.end(), 0.0f);
                for (int i = 0; i < s; ++i) {
                    const float* gi = gd + static_cast<size_t>(i) * d + off;
                    const float* prow = probs->data() + (static_cast<size_t>(h) * s + i) * skv;
                    std::fill(dp.begin(), dp.end(), 0.0f);
                    for (int t = 0; t < dk; ++t)
                        axpy_f32(dp.data(), vt.data() + static_cast<size_t>(t) * skv, gi[t], skv);
                    double dot_pd = 0.0;
                    for (int j = 0; j < skv; ++j)
                        dot_pd += static_cast<double>(dp[static_cast<size_t>(j)]) * prow[j];
                    const float dpd = static_cast<float>(dot_pd);
                    for (int j = 0; j < skv; ++j)
                        ds[static_cast<size_t>(j)] =
                            prow[j] * (dp[static_cast<size_t>(j)] - dpd) * sc;
                    if (vn->requires_grad)
                        for (int t = 0; t < dk; ++t)
                            axpy_f32(dvt.data() + static_cast<size_t>(t) * skv, prow, gi[t], skv);
                    if (qn->requires_grad) {
                        float* qg = qn->grad.data() + static_cast<size_t>(i) * d + off;
                        for (int t = 0; t < dk; ++t)
                            qg[t] += dot_f32(ds.data(), kt.data() + static_cast<size_t>(t) * skv,
                                             skv);
                    }
                    if (kn->requires_grad) {
                        const float* qi2 = qd2 + static_cast<size_t>(i) * d + off;
                        for (int t = 0; t < dk; ++t)
                            axpy_f32(dkt.data() + static_cast<size_t>(t) * skv, ds.data(), qi2[t],
                                     skv);
                    }
                }
                if (vn->requires_grad)
                    for (int t = 0; t < dk; ++t)
                        for (int j = 0; j < skv; ++j)
                            vn->grad[static_cast<size_t>(j) * d + off + t] +=
                                dvt[static_cast<size_t>(t) * skv + j];
                if (kn->requires_grad)
                    for (int t = 0; t < dk; ++t)
                        for (int j = 0; j < skv; ++j)
                            kn->grad[static_cast<size_t>(j) * d + off + t] +=
                                dkt[static_cast<size_t>(t) * skv + j];
            }
        });
    }
    return out;
}

Tensor TransformerLayer::forward(Tape& tape, const Tensor& x, const ModelConfig& cfg) const {
    if (x.cols() != cfg.d_model)
        throw dim_error("layer_forward: token dim " + x.shape_str() + ", expected d=" +
                        std::to_string(cfg.d_model));
    Tensor h = layernorm_rows(tape, x, ln1_g, ln1_b, cfg.ln_eps);
    Tensor q = linear(tape, h, wq, bq);
    Tensor k = linear(tape, h, wk, bk);
    Tensor v = linear(tape, h, wv, bv);
    Tensor ctx = mhsa_core(tape, q, k, v, cfg.n_heads);
    Tensor x1 = add(tape, x, linear(tape, ctx, wo, bo));

    Tensor h2 = layernorm_rows(tape, x1, ln2_g, ln2_b, cfg.ln_eps);
    Tensor f = gelu(tape, linear(tape, h2, w1, b1));
    return add(tape, x1, linear(tape, f, w2, b2));
}

void ExpertEncoder::init(ParamRegistry& reg, int id, const ModelConfig& cfg, Pcg32& rng) {
    static const char* kProtocols[] = {"lte", "wifi", "5g"};
    expert_id = id;
    protocol = id < 3 ? kProtocols[id] : "aux" + std::to_string(id);
    const std::string prefix = "expert." + std::to_string(id);
    embedder.init(reg, prefix + ".embed", cfg, rng);
    layers.resize(static_cast<size_t>(cfg.n_layers));
    for (int l = 0; l < cfg.n_layers; ++l)
        layers[static_cast<size_t>(l)].init(reg, prefix + ".layer." + std::to_string(l), cfg, rng);
    if (cfg.final_layernorm) {
        final_ln_g = reg.add(prefix + ".final_ln.gamma",
                             Tensor::full({cfg.d_model}, 1.0f, true), false);
        final_ln_b = reg.add(prefix + ".final_ln.beta", Tensor::zeros({cfg.d_model}, true), false);
    }
}

ExpertEncoder::Output ExpertEncoder::forward(Tape& tape, const Spectrogram& spec,
                                             const ModelConfig& cfg,
                                             const std::vector<Tensor>& per_layer_prompts) const {
    if (!per_layer_prompts.empty() &&
        per_layer_prompts.size() != static_cast<size_t>(cfg.n_layers))
        throw dim_error("expert_forward: got " + std::to_string(per_layer_prompts.size()) +
                        " prompt tensors for " + std::to_string(cfg.n_layers) + " layers");

    Tensor x = embedder.embed(tape, spec, cfg);
    for (int l = 0; l < cfg.n_layers; ++l) {
        if (per_layer_prompts.empty()) {
            x = layers[static_cast<size_t>(l)].forward(tape, x, cfg);
        } else {
            const Tensor& p = per_layer_prompts[static_cast<size_t>(l)];
            Tensor aug = concat_rows(tape, p, x);
            aug = layers[static_cast<size_t>(l)].forward(tape, aug, cfg);
            x = slice_rows(tape, aug, p.rows(), aug.rows());
        }
    }
    if (cfg.final_layernorm) x = layernorm_rows(tape, x, final_ln_g, final_ln_b, cfg.ln_eps);
    return {x, slice_rows(tape, x, 0, 1)};
}

size_t count_expert_params(const ParamRegistry& reg, int expert_id) {
    return reg.count_with_prefix("expert." + std::to_string(expert_id) + ".");
}

}  // namespace rfp
