#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "dsvr/nn/params.hpp"
#include "dsvr/nn/tensor.hpp"

namespace dsvr::nn {

/// Adaptive-moment optimizer with bias correction. Moment buffers are keyed
/// by parameter name and created lazily on first update.
template <typename T>
class Adam {
public:
    struct Config {
        T lr = static_cast<T>(2e-4);
        T beta1 = static_cast<T>(0.9);
        T beta2 = static_cast<T>(0.999);
        T eps = static_cast<T>(1e-8);
    };

    Adam() = default;
    explicit Adam(Config cfg) : cfg_(cfg) {}

    const Config& config() const { return cfg_; }
    void set_lr(T lr) { cfg_.lr = lr; }
    std::int64_t step_count() const { return step_; }

    /// One update over every trainable entry. Requires that a backward pass
    /// populated each trainable gradient since the last zero_grad.
    void step(ParamSet<T>& params) {
        for (const auto& name : params.names()) {
            if (!params.trainable(name)) continue;
            if (!params.at(name)->grad_seen) {
                throw std::runtime_error("Adam::step: no gradient populated for trainable parameter '" +
                                         name + "'");
            }
        }
        ++step_;
        const double bc1 = 1.0 - std::pow(static_cast<double>(cfg_.beta1), static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(static_cast<double>(cfg_.beta2), static_cast<double>(step_));
        for (const auto& name : params.names()) {
            if (!params.trainable(name)) continue;
            auto& var = *params.at(name);
            auto it = moments_.find(name);
            if (it == moments_.end()) {
                const auto& s = var.value.shape();
                it = moments_.emplace(name, Moments{Tensor4<T>(s[0], s[1], s[2], s[3]),
                                                    Tensor4<T>(s[0], s[1], s[2], s[3])}).first;
            }
            Moments& mo = it->second;
            T* theta = var.value.data();
            const T* g = var.grad.data();
            T* m = mo.m.data();
            T* v = mo.v.data();
            const std::size_t count = var.value.numel();
            for (std::size_t i = 0; i < count; ++i) {
                m[i] = cfg_.beta1 * m[i] + (T(1) - cfg_.beta1) * g[i];
                v[i] = cfg_.beta2 * v[i] + (T(1) - cfg_.beta2) * g[i] * g[i];
                const T mhat = m[i] / static_cast<T>(bc1);
                const T vhat = v[i] / static_cast<T>(bc2);
                theta[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

    bool has_moments(const std::string& name) const { return moments_.count(name) != 0; }
    const Tensor4<T>& first_moment(const std::string& name) const { return moments_.at(name).m; }
    const Tensor4<T>& second_moment(const std::string& name) const { return moments_.at(name).v; }

    /// Checkpoint restore.
    void restore(const std::string& name, Tensor4<T> m, Tensor4<T> v) {
        moments_[name] = Moments{std::move(m), std::move(v)};
    }
    void set_step_count(std::int64_t step) { step_ = step; }

private:
    struct Moments {
        Tensor4<T> m;
        Tensor4<T> v;
    };
    Config cfg_;
    std::int64_t step_ = 0;
    std::unordered_map<std::string, Moments> moments_;
};

}  // namespace dsvr::nn
