#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "rfp/tensor.hpp"

namespace rfp {

// Named parameter table. The name is the checkpoint key; `decay` marks
// tensors that receive decoupled weight decay (projection matrices only;
// biases, LayerNorm parameters and prompt tokens are exempt).
struct ParamInfo {
    std::string name;
    Tensor tensor;
    bool decay = false;
};

class ParamRegistry {
public:
    Tensor add(const std::string& name, Tensor t, bool decay) {
        if (by_name_.count(name)) throw dim_error("duplicate parameter name: " + name);
        by_name_[name] = params_.size();
        params_.push_back({name, t, decay});
        return t;
    }

    bool contains(const std::string& name) const { return by_name_.count(name) > 0; }

    Tensor get(const std::string& name) const {
        auto it = by_name_.find(name);
        if (it == by_name_.end()) throw dim_error("unknown parameter: " + name);
        return params_[it->second].tensor;
    }

    const std::vector<ParamInfo>& all() const { return params_; }

    size_t total_count() const {
        size_t n = 0;
        for (const auto& p : params_) n += p.tensor.numel();
        return n;
    }

    size_t count_with_prefix(const std::string& prefix) const {
        size_t n = 0;
        for (const auto& p : params_)
            if (p.name.rfind(prefix, 0) == 0) n += p.tensor.numel();
        return n;
    }

private:
    std::vector<ParamInfo> params_;
    std::unordered_map<std::string, size_t> by_name_;
};

}  // namespace rfp
