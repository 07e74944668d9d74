#include "rfp/model.hpp"

#include <cstring>
#include <fstream>

#include "rfp/errors.hpp"
#include "rfp/rng.hpp"

namespace rfp {

using nlohmann::json;

MoEClassifier::MoEClassifier(ModelConfig config, uint64_t seed)
    : cfg_(config), seed_(seed) {
    cfg_.validate();
    experts_.resize(static_cast<size_t>(cfg_.n_experts));
    for (int e = 0; e < cfg_.n_experts; ++e) {
        Pcg32 rng(mix_seed(seed, 100 + static_cast<uint64_t>(e)));
        experts_[static_cast<size_t>(e)].init(params_, e, cfg_, rng);
    }
    Pcg32 router_rng(mix_seed(seed, 200));
    router_.init(params_, cfg_, router_rng);
    Pcg32 head_rng(mix_seed(seed, 300));
    head_.init(params_, cfg_, head_rng);
    if (cfg_.prompt_len > 0)
        prompts_ = init_prompt_bank(params_, cfg_.prompt_len, cfg_.d_model, cfg_.n_layers,
                                    cfg_.n_experts, cfg_.prompt_sigma, mix_seed(seed, 400));
}

void MoEClassifier::attach_prompts(int length, float sigma, uint64_t seed) {
    if (has_prompts()) throw config_error("attach_prompts: model already has a prompt bank");
    cfg_.prompt_len = length;
    cfg_.prompt_sigma = sigma;
    prompts_ = init_prompt_bank(params_, length, cfg_.d_model, cfg_.n_layers, cfg_.n_experts,
                                sigma, seed);
}

Tensor MoEClassifier::shared_cls(Tape& tape) const {
    return experts_[0].embedder.cls_row(tape);
}

MoEClassifier::ForwardResult MoEClassifier::forward(Tape& tape, const Spectrogram& spec,
                                                    bool use_prompts) const {
    const bool prompted = use_prompts && has_prompts();
    ForwardResult out;

    Tensor probs;
    std::vector<Tensor> cls(static_cast<size_t>(cfg_.n_experts));
    if (cfg_.routing_input == 0) {
        // route on the designated expert's post-embedding CLS row, then run
        // only the selected experts
        Tensor shared = shared_cls(tape);
        probs = softmax_rows(tape, router_.logits(tape, shared));
        out.decision = route_from_weights(
            {probs.values().begin(), probs.values().end()}, cfg_.top_k);
        for (int idx : out.decision.selected) {
            const auto& ex = experts_[static_cast<size_t>(idx)];
            cls[static_cast<size_t>(idx)] =
                ex.forward(tape, spec, cfg_, prompted ? prompts_.for_expert(idx)
                                                      : std::vector<Tensor>{})
                    .cls;
        }
    } else {
        // costlier alternative: every expert runs and the mean final CLS
        // drives the router
        Tensor sum;
        for (int e = 0; e < cfg_.n_experts; ++e) {
            const auto& ex = experts_[static_cast<size_t>(e)];
            cls[static_cast<size_t>(e)] =
                ex.forward(tape, spec, cfg_, prompted ? prompts_.for_expert(e)
                                                      : std::vector<Tensor>{})
                    .cls;
            sum = e == 0 ? cls[static_cast<size_t>(e)] : add(tape, sum, cls[static_cast<size_t>(e)]);
        }
        Tensor shared = scale(tape, sum, 1.0f / static_cast<float>(cfg_.n_experts));
        probs = softmax_rows(tape, router_.logits(tape, shared));
        out.decision = route_from_weights(
            {probs.values().begin(), probs.values().end()}, cfg_.top_k);
    }

    Tensor weights = selection_weights(tape, probs, out.decision);
    Tensor stack;
    for (size_t i = 0; i < out.decision.selected.size(); ++i) {
        const Tensor& c = cls[static_cast<size_t>(out.decision.selected[i])];
        stack = i == 0 ? c : concat_rows(tape, stack, c);
    }
    out.z_final = matmul(tape, weights, stack);
    out.logits = head_.forward(tape, out.z_final, cfg_.ln_eps);
    return out;
}

// ---- checkpoints -----------------------------------------------------------

json config_to_json(const ModelConfig& cfg) {
    json j;
    j["input_size"] = cfg.input_size;
    j["patch_size"] = cfg.patch_size;
    j["d_model"] = cfg.d_model;
    j["n_layers"] = cfg.n_layers;
    j["n_heads"] = cfg.n_heads;
    j["ffn_mult"] = cfg.ffn_mult;
    j["n_experts"] = cfg.n_experts;
    j["router_hidden"] = cfg.router_hidden;
    j["head_hidden"] = cfg.head_hidden;
    j["n_classes"] = cfg.n_classes;
    j["top_k"] = cfg.top_k;
    j["ln_eps"] = cfg.ln_eps;
    j["final_layernorm"] = cfg.final_layernorm;
    j["center_dc"] = cfg.center_dc;
    j["routing_input"] = cfg.routing_input;
    j["prompt_len"] = cfg.prompt_len;
    j["prompt_sigma"] = cfg.prompt_sigma;
    return j;
}

ModelConfig config_from_json(const json& j) {
    ModelConfig cfg;
    cfg.input_size = j.at("input_size").get<int>();
    cfg.patch_size = j.at("patch_size").get<int>();
    cfg.d_model = j.at("d_model").get<int>();
    cfg.n_layers = j.at("n_layers").get<int>();
    cfg.n_heads = j.at("n_heads").get<int>();
    cfg.ffn_mult = j.at("ffn_mult").get<int>();
    cfg.n_experts = j.at("n_experts").get<int>();
    cfg.router_hidden = j.at("router_hidden").get<int>();
    cfg.head_hidden = j.at("head_hidden").get<int>();
    cfg.n_classes = j.at("n_classes").get<int>();
    cfg.top_k = j.at("top_k").get<int>();
    cfg.ln_eps = j.at("ln_eps").get<float>();
    cfg.final_layernorm = j.at("final_layernorm").get<bool>();
    cfg.center_dc = j.at("center_dc").get<bool>();
    cfg.routing_input = j.at("routing_input").get<int>();
    cfg.prompt_len = j.at("prompt_len").get<int>();
    cfg.prompt_sigma = j.at("prompt_sigma").get<float>();
    return cfg;
}

void save_checkpoint(const MoEClassifier& model, const std::string& path, const json& meta) {
    json header;
    header["format"] = "rfp-ckpt-v1";
    header["config"] = config_to_json(model.config());
    header["seed"] = model.seed();
    header["meta"] = meta.is_null() ? json::object() : meta;
    json index = json::array();
    uint64_t offset = 0;  // in floats
    for (const ParamInfo& p : model.params().all()) {
        json jp;
        jp["name"] = p.name;
        jp["shape"] = p.tensor.shape();
        jp["offset"] = offset;
        index.push_back(std::move(jp));
        offset += p.tensor.numel();
    }
    header["params"] = std::move(index);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot write checkpoint " + path);
    const std::string hs = header.dump();
    const uint64_t hlen = hs.size();
    f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const ParamInfo& p : model.params().all())
        f.write(reinterpret_cast<const char*>(p.tensor.values().data()),
                static_cast<std::streamsize>(p.tensor.numel() * sizeof(float)));
    if (!f) throw data_error("checkpoint write failed: " + path);
}

namespace {

json read_header(std::ifstream& f, const std::string& path) {
    uint64_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    if (!f) throw data_error("cannot read checkpoint header " + path);
    std::string hs(hlen, '\0');
    f.read(hs.data(), static_cast<std::streamsize>(hlen));
    if (!f) throw data_error("truncated checkpoint header " + path);
    json header = json::parse(hs);
    if (header.value("format", "") != "rfp-ckpt-v1")
        throw data_error("unrecognized checkpoint format in " + path);
    return header;
}

}  // namespace

MoEClassifier load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot open checkpoint " + path);
    json header = read_header(f, path);

    MoEClassifier model(config_from_json(header.at("config")), header.at("seed").get<uint64_t>());
    const auto& index = header.at("params");
    if (index.size() != model.params().all().size())
        throw data_error("checkpoint parameter count mismatch in " + path);
    for (size_t i = 0; i < index.size(); ++i) {
        const ParamInfo& p = model.params().all()[i];
        const auto& jp = index[i];
        if (jp.at("name").get<std::string>() != p.name ||
            jp.at("shape").get<std::vector<int>>() != p.tensor.shape())
            throw data_error("checkpoint layout mismatch at " + p.name + " in " + path);
        Tensor t = p.tensor;
        f.read(reinterpret_cast<char*>(t.values().data()),
               static_cast<std::streamsize>(t.numel() * sizeof(float)));
        if (!f) throw data_error("truncated checkpoint payload " + path);
    }
    return model;
}

json read_checkpoint_meta(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot open checkpoint " + path);
    json header = read_header(f, path);
    json out;
    out["config"] = header.at("config");
    out["seed"] = header.at("seed");
    out["meta"] = header.at("meta");
    return out;
}

}  // namespace rfp
