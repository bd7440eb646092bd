#pragma once

#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "dsvr/nn/rng.hpp"
#include "dsvr/nn/tensor.hpp"
#include "dsvr/nn/var.hpp"

namespace dsvr::nn {

/// Named collection of learnable tensors. Each entry is a graph leaf whose
/// gradient slot is filled by backward passes. Entry order is insertion
/// order and is what checkpoints serialize.
template <typename T>
class ParamSet {
public:
    VarPtr<T>& add(const std::string& name, Tensor4<T> init, bool trainable = true) {
        if (map_.count(name)) {
            throw std::invalid_argument("ParamSet::add: duplicate parameter name '" + name + "'");
        }
        auto leaf = Var<T>::leaf(std::move(init));
        leaf->requires_grad = trainable;
        order_.push_back(name);
        auto [it, ok] = map_.emplace(name, Entry{std::move(leaf), trainable});
        (void)ok;
        return it->second.var;
    }

    bool contains(const std::string& name) const { return map_.count(name) != 0; }

    VarPtr<T>& at(const std::string& name) {
        auto it = map_.find(name);
        if (it == map_.end()) {
            throw std::out_of_range("ParamSet: no parameter named '" + name + "'");
        }
        return it->second.var;
    }

    const VarPtr<T>& at(const std::string& name) const {
        auto it = map_.find(name);
        if (it == map_.end()) {
            throw std::out_of_range("ParamSet: no parameter named '" + name + "'");
        }
        return it->second.var;
    }

    bool trainable(const std::string& name) const { return map_.at(name).trainable; }

    void set_trainable(const std::string& name, bool trainable) {
        auto& e = map_.at(name);
        e.trainable = trainable;
        e.var->requires_grad = trainable;
    }

    /// Freeze/unfreeze every parameter whose name starts with `prefix`.
    void set_trainable_prefix(const std::string& prefix, bool trainable) {
        for (const auto& name : order_) {
            if (name.rfind(prefix, 0) == 0) set_trainable(name, trainable);
        }
    }

    void zero_grad() {
        for (const auto& name : order_) map_.at(name).var->zero_grad();
    }

    const std::vector<std::string>& names() const { return order_; }
    std::size_t size() const { return order_.size(); }

    std::size_t numel() const {
        std::size_t total = 0;
        for (const auto& name : order_) total += map_.at(name).var->value.numel();
        return total;
    }

    template <typename U>
    ParamSet<U> cast() const {
        ParamSet<U> out;
        for (const auto& name : order_) {
            const auto& e = map_.at(name);
            out.add(name, e.var->value.template cast<U>(), e.trainable);
        }
        return out;
    }

private:
    struct Entry {
        VarPtr<T> var;
        bool trainable;
    };
    std::vector<std::string> order_;
    std::unordered_map<std::string, Entry> map_;
};

/// Fan-in scaled uniform init for conv kernels: U(-1/sqrt(fan_in), +1/sqrt(fan_in)).
template <typename T>
Tensor4<T> conv_weight_init(int out_c, int in_c, int k, Rng& rng) {
    Tensor4<T> w(out_c, in_c, k, k);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_c) * k * k);
    for (std::size_t i = 0; i < w.numel(); ++i) {
        w.data()[i] = static_cast<T>(rng.uniform(-bound, bound));
    }
    return w;
}

template <typename T>
Tensor4<T> bias_init(int out_c) {
    return Tensor4<T>(1, out_c, 1, 1);
}

}  // namespace dsvr::nn
