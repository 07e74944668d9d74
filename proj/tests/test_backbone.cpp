#include <cmath>

#include "doctest.h"
#include "ref_model.hpp"
#include "rfp/backbone.hpp"
#include "rfp/model.hpp"
#include "rfp/rng.hpp"
#include "rfp/train.hpp"

using namespace rfp;

namespace {

ModelConfig toy_config(int d = 8, int layers = 2, int input = 8, int patch = 4) {
    ModelConfig cfg;
    cfg.input_size = input;
    cfg.patch_size = patch;  // -> 4 patches of 16 px
    cfg.d_model = d;
    cfg.n_layers = layers;
    cfg.n_heads = 2;
    cfg.ffn_mult = 4;
    cfg.n_experts = 1;
    cfg.router_hidden = d;
    cfg.head_hidden = 2 * d;
    cfg.n_classes = 3;
    cfg.top_k = 1;
    return cfg;
}

Spectrogram random_spec(int side, uint64_t seed, float scale = 1.0f) {
    Spectrogram s;
    s.values.resize(static_cast<size_t>(side) * side);
    Pcg32 rng(seed);
    for (float& v : s.values) v = scale * std::fabs(rng.gaussian());
    return s;
}

}  // namespace

TEST_SUITE_BEGIN("backbone");

TEST_CASE("default config tiles 128x128 into 64 patches of 16x16") {
    ModelConfig cfg;
    CHECK(cfg.n_patches() == 64);
    CHECK(cfg.patch_dim() == 256);
    CHECK(cfg.seq_len() == 65);
    CHECK(cfg.head_dim() == 32);
    cfg.validate();
}

TEST_CASE("embed of a zero spectrogram reduces to positional embeddings") {
    ModelConfig cfg;
    ParamRegistry reg;
    Pcg32 rng(1);
    PatchEmbedder emb;
    emb.init(reg, "expert.0.embed", cfg, rng);
    for (float& v : emb.bias.values()) v = 0.0f;

    Spectrogram zero;
    zero.values.assign(128 * 128, 0.0f);
    Tape tape;
    Tensor seq = emb.embed(tape, zero, cfg);
    CHECK(seq.rows() == 65);
    CHECK(seq.cols() == 128);
    // patch rows: projection of zeros + zero bias + pos
    for (int i = 1; i < 65; ++i)
        for (int j = 0; j < 128; ++j) CHECK(seq.at(i, j) == emb.pos.at(i, j));
    for (int j = 0; j < 128; ++j)
        CHECK(seq.at(0, j) == emb.cls.at(0, j) + emb.pos.at(0, j));
}

TEST_CASE("permuting two patches permutes exactly two token rows") {
    ModelConfig cfg;
    ParamRegistry reg;
    Pcg32 rng(2);
    PatchEmbedder emb;
    emb.init(reg, "expert.0.embed", cfg, rng);
    for (float& v : emb.pos.values()) v = 0.0f;  // isolate the patch path

    Spectrogram spec = random_spec(128, 3);
    Spectrogram swapped = spec;
    // swap patch (0,0) with patch (1,2): patches are 16x16 tiles
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c)
            std::swap(swapped.values[static_cast<size_t>(r) * 128 + c],
                      swapped.values[static_cast<size_t>(16 + r) * 128 + 32 + c]);
    const int pa = 0, pb = 1 * 8 + 2;

    Tape tape;
    Tensor a = emb.embed(tape, spec, cfg);
    Tensor b = emb.embed(tape, swapped, cfg);
    for (int i = 0; i < 65; ++i)
        for (int j = 0; j < 128; ++j) {
            float expect;
            if (i == pa + 1)
                expect = a.at(pb + 1, j);
            else if (i == pb + 1)
                expect = a.at(pa + 1, j);
            else
                expect = a.at(i, j);
            CHECK(b.at(i, j) == expect);
        }
}

TEST_CASE("attention with one key returns the value row") {
    Tape tape;
    Tensor q = Tensor::from_values({1, 4}, {0.3f, -1.0f, 2.0f, 0.1f});
    Tensor k = Tensor::from_values({1, 4}, {5.0f, 1.0f, 0.0f, -2.0f});
    Tensor v = Tensor::from_values({1, 4}, {7.0f, -3.0f, 0.5f, 9.0f});
    Tensor out = attention(tape, q, k, v);
    for (int j = 0; j < 4; ++j) CHECK(out.at(j) == v.at(j));
}

TEST_CASE("identical keys give the mean of values") {
    Pcg32 rng(5);
    Tape tape;
    Tensor q = Tensor::from_values({1, 2}, {0.4f, -0.9f});
    Tensor k = Tensor::from_values({3, 2}, {1.0f, 2.0f, 1.0f, 2.0f, 1.0f, 2.0f});
    Tensor v = Tensor::zeros({3, 2});
    for (float& x : v.values()) x = rng.gaussian();
    Tensor out = attention(tape, q, k, v);
    for (int j = 0; j < 2; ++j) {
        const float mean = (v.at(0, j) + v.at(1, j) + v.at(2, j)) / 3.0f;
        CHECK(out.at(j) == doctest::Approx(mean).epsilon(1e-6));
    }
}

TEST_CASE("attention matches the hand-rolled formula on a 3-token case") {
    Pcg32 rng(7);
    Tape tape;
    const int s = 3, dk = 4;
    Tensor q = Tensor::zeros({s, dk}), k = Tensor::zeros({s, dk}), v = Tensor::zeros({s, dk});
    for (Tensor* t : {&q, &k, &v})
        for (float& x : t->values()) x = rng.gaussian();
    Tensor out = attention(tape, q, k, v);

    for (int i = 0; i < s; ++i) {
        double scores[3], mx = -1e30;
        for (int j = 0; j < s; ++j) {
            double dot = 0.0;
            for (int p = 0; p < dk; ++p) dot += static_cast<double>(q.at(i, p)) * k.at(j, p);
            scores[j] = dot / std::sqrt(4.0);
            mx = std::max(mx, scores[j]);
        }
        double denom = 0.0;
        for (int j = 0; j < s; ++j) denom += std::exp(scores[j] - mx);
        for (int p = 0; p < dk; ++p) {
            double expect = 0.0;
            for (int j = 0; j < s; ++j)
                expect += std::exp(scores[j] - mx) / denom * v.at(j, p);
            CHECK(out.at(i, p) == doctest::Approx(expect).epsilon(1e-5));
        }
    }
}

TEST_CASE("zeroed output projections make the layer an identity map") {
    ModelConfig cfg = toy_config(8, 1);
    ParamRegistry reg;
    Pcg32 rng(9);
    TransformerLayer layer;
    layer.init(reg, "expert.0.layer.0", cfg, rng);
    for (float& v : layer.wo.values()) v = 0.0f;
    for (float& v : layer.bo.values()) v = 0.0f;
    for (float& v : layer.w2.values()) v = 0.0f;
    for (float& v : layer.b2.values()) v = 0.0f;

    Pcg32 xr(10);
    Tape tape;
    Tensor x = Tensor::zeros({5, 8});
    for (float& v : x.values()) v = xr.gaussian();
    Tensor out = layer.forward(tape, x, cfg);
    CHECK(out.checksum() == x.checksum());
}

TEST_CASE("layer keeps sequence length for 65 and 81 rows") {
    ModelConfig cfg;  // full width
    ParamRegistry reg;
    Pcg32 rng(11);
    TransformerLayer layer;
    layer.init(reg, "expert.0.layer.0", cfg, rng);
    Tape tape;
    for (int s : {65, 81}) {
        Tensor x = Tensor::zeros({s, 128});
        Pcg32 xr(static_cast<uint64_t>(s));
        for (float& v : x.values()) v = xr.gaussian();
        Tensor out = layer.forward(tape, x, cfg);
        CHECK(out.rows() == s);
        CHECK(out.cols() == 128);
    }
}

TEST_CASE("full-layer gradients match finite differences on a 4-token toy") {
    ModelConfig cfg = toy_config(8, 1);
    ParamRegistry reg;
    Pcg32 rng(13);
    TransformerLayer layer;
    layer.init(reg, "expert.0.layer.0", cfg, rng);
    // healthier-than-init magnitudes so no gradient is degenerate
    Pcg32 wr(14);
    for (const ParamInfo& p : reg.all()) {
        Tensor t = p.tensor;
        if (p.name.find(".gamma") != std::string::npos) continue;
        for (float& v : t.values()) v = 0.4f * wr.gaussian();
    }

    Tensor x = Tensor::zeros({4, 8}, true);
    Pcg32 xr(15);
    for (float& v : x.values()) v = xr.gaussian();
    for (const ParamInfo& p : reg.all()) {
        Tensor t = p.tensor;
        t.set_requires_grad(true);
    }

    auto loss_engine = [&]() {
        Tape tape;
        Tensor out = layer.forward(tape, x, cfg);
        Tensor loss = sum_all(tape, gelu(tape, out));
        tape.backward(loss);
        return loss.item();
    };
    loss_engine();

    auto loss_ref = [&]() {
        refm::DMat xd = refm::from_tensor(x);
        refm::DMat out = refm::layer_forward(layer, xd, cfg);
        double l = 0.0;
        for (double v : out.v) l += refm::gelu_scalar(v);
        return l;
    };

    auto check = [&](Tensor t) {
        const float h = 1e-3f;
        for (size_t i = 0; i < t.numel(); ++i) {
            const float old = t.values()[i];
            t.values()[i] = old + h;
            const double lp = loss_ref();
            t.values()[i] = old - h;
            const double lm = loss_ref();
            t.values()[i] = old;
            const double fd = (lp - lm) / (static_cast<double>(old + h) - (old - h));
            const double a = t.grad()[i];
            // rtol 1e-3 with an f32-resolution atol floor; the floor covers
            // mathematically-zero gradients (key bias under softmax shift
            // invariance) where f32 leaves ~1e-7 of cancellation noise
            CHECK(std::fabs(a - fd) <= 1e-5 + 1e-3 * std::max(std::fabs(a), std::fabs(fd)));
        }
    };
    check(x);
    for (const ParamInfo& p : reg.all()) check(p.tensor);
}

TEST_CASE("expert forward: zero prompts still shift the CLS embedding") {
    ModelConfig cfg;
    cfg.n_experts = 1;
    cfg.top_k = 1;
    MoEClassifier model(cfg, 77);
    Spectrogram spec = random_spec(128, 21);

    Tape tape;
    NoGrad pause(tape);
    auto plain = model.experts()[0].forward(tape, spec, cfg);
    CHECK(plain.sequence.rows() == 65);

    std::vector<Tensor> zero_prompts;
    for (int l = 0; l < cfg.n_layers; ++l) zero_prompts.push_back(Tensor::zeros({16, 128}));
    auto prompted = model.experts()[0].forward(tape, spec, cfg, zero_prompts);
    CHECK(prompted.sequence.rows() == 65);

    double diff = 0.0;
    for (int j = 0; j < 128; ++j)
        diff += std::fabs(static_cast<double>(plain.cls.at(j)) - prompted.cls.at(j));
    CHECK(diff > 0.0);  // zero prompts still receive attention mass
}

TEST_CASE("post-strip row count is 65 for every prompt length") {
    ModelConfig cfg;
    cfg.n_experts = 1;
    cfg.top_k = 1;
    MoEClassifier model(cfg, 78);
    Spectrogram spec = random_spec(128, 22);
    Tape tape;
    NoGrad pause(tape);
    for (int m : {8, 16, 32}) {
        std::vector<Tensor> prompts;
        Pcg32 rng(static_cast<uint64_t>(m));
        for (int l = 0; l < cfg.n_layers; ++l) {
            Tensor p = Tensor::zeros({m, 128});
            for (float& v : p.values()) v = 0.02f * rng.gaussian();
            prompts.push_back(p);
        }
        auto out = model.experts()[0].forward(tape, spec, cfg, prompts);
        CHECK(out.sequence.rows() == 65);
    }
}

TEST_CASE("prompt layer-count mismatch is rejected") {
    ModelConfig cfg;
    cfg.n_experts = 1;
    cfg.top_k = 1;
    MoEClassifier model(cfg, 79);
    Spectrogram spec = random_spec(128, 23);
    Tape tape;
    std::vector<Tensor> prompts(5, Tensor::zeros({4, 128}));  // 5 != 12 layers
    CHECK_THROWS_AS(model.experts()[0].forward(tape, spec, cfg, prompts), dim_error);
}

TEST_CASE("independently seeded experts embed the same input differently") {
    ModelConfig cfg;
    MoEClassifier model(cfg, 80);
    Spectrogram spec = random_spec(128, 24);
    Tape tape;
    NoGrad pause(tape);
    auto a = model.experts()[0].forward(tape, spec, cfg);
    auto b = model.experts()[1].forward(tape, spec, cfg);
    double diff = 0.0;
    for (int j = 0; j < 128; ++j)
        diff += std::fabs(static_cast<double>(a.cls.at(j)) - b.cls.at(j));
    CHECK(diff > 0.0);
}

TEST_CASE("expert parameter counts by enumeration") {
    ModelConfig cfg;
    MoEClassifier model(cfg, 81);
    // per layer: 4 d*d projections with bias + FFN (d->4d->d) + two LN pairs
    const size_t per_layer = 4 * (128 * 128 + 128) + (128 * 512 + 512) + (512 * 128 + 128) +
                             2 * (128 + 128);
    CHECK(per_layer == 198272);
    const size_t embedder = 256 * 128 + 128 + 128 + 65 * 128;
    const size_t expect = 12 * per_layer + embedder;
    CHECK(count_expert_params(model.params(), 0) == expect);
    CHECK(count_expert_params(model.params(), 1) == expect);
    CHECK(model.params().count_with_prefix("expert.0.embed.") == embedder);
}

TEST_CASE("mutating one expert leaves the others bitwise unchanged") {
    ModelConfig cfg;
    MoEClassifier model(cfg, 82);
    Spectrogram spec = random_spec(128, 26);
    Tape tape;
    NoGrad pause(tape);
    auto before = model.experts()[1].forward(tape, spec, cfg);
    const uint64_t before_sum = before.sequence.checksum();
    Tensor w = model.params().get("expert.0.layer.3.attn.q.weight");
    for (float& v : w.values()) v += 0.5f;
    auto after = model.experts()[1].forward(tape, spec, cfg);
    CHECK(after.sequence.checksum() == before_sum);
}

TEST_CASE("optional final layernorm changes the output and adds parameters") {
    ModelConfig cfg = toy_config(8, 2, 8, 4);
    ModelConfig with_ln = cfg;
    with_ln.final_layernorm = true;
    MoEClassifier plain(cfg, 91);
    MoEClassifier ln(with_ln, 91);
    CHECK(ln.params().contains("expert.0.final_ln.gamma"));
    CHECK(count_expert_params(ln.params(), 0) == count_expert_params(plain.params(), 0) + 16);

    Spectrogram spec = random_spec(8, 92);
    Tape tape;
    NoGrad pause(tape);
    auto a = plain.experts()[0].forward(tape, spec, cfg);
    auto b = ln.experts()[0].forward(tape, spec, with_ln);
    CHECK(a.sequence.rows() == b.sequence.rows());
    CHECK(a.cls.checksum() != b.cls.checksum());
}

TEST_CASE("no-grad forward writes nothing to any parameter") {
    ModelConfig cfg = toy_config(8, 2, 8, 4);
    cfg.n_experts = 2;
    cfg.top_k = 2;
    MoEClassifier model(cfg, 83);
    const uint64_t before = params_checksum(model.params());
    Spectrogram spec = random_spec(8, 27);
    Tape tape;
    NoGrad pause(tape);
    for (int rep = 0; rep < 3; ++rep) model.forward(tape, spec, false);
    CHECK(params_checksum(model.params()) == before);
    CHECK(tape.size() == 0);
}

TEST_SUITE_END();
