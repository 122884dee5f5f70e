#pragma once

#include <map>
#include <string>

#include "rf/tensor/tensor.hpp"

namespace rf {

// Named parameter set. Ordered by name so that iteration, checkpointing and
// optimizer updates are deterministic.
class ParamMap {
public:
    Tensor& add(const std::string& name, Tensor t) {
        t.set_requires_grad(true);
        auto [it, inserted] = params_.emplace(name, std::move(t));
        if (!inserted) throw UsageError("duplicate parameter name: " + name);
        return it->second;
    }

    Tensor& at(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end()) throw UsageError("unknown parameter: " + name);
        return it->second;
    }
    const Tensor& at(const std::string& name) const {
        return const_cast<ParamMap*>(this)->at(name);
    }
    bool contains(const std::string& name) const { return params_.count(name) != 0; }

    void zero_grad() {
        for (auto& [name, t] : params_) t.zero_grad();
    }

    int64_t total_size() const {
        int64_t n = 0;
        for (const auto& [name, t] : params_) n += t.numel();
        return n;
    }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }
    size_t size() const { return params_.size(); }

private:
    std::map<std::string, Tensor> params_;
};

}  // namespace rf
