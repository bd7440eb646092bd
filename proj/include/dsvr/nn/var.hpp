#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dsvr/nn/tensor.hpp"

namespace dsvr::nn {

namespace detail {
inline int& no_grad_depth() {
    thread_local int depth = 0;
    return depth;
}
}  // namespace detail

inline bool grad_enabled() { return detail::no_grad_depth() == 0; }

/// RAII guard: ops evaluated inside do not record the backward graph.
struct NoGradGuard {
    NoGradGuard() { ++detail::no_grad_depth(); }
    ~NoGradGuard() { --detail::no_grad_depth(); }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

template <typename T>
class Var;

template <typename T>
using VarPtr = std::shared_ptr<Var<T>>;

/// Node of the reverse-mode autodiff graph. Leaves are parameters or
/// constant inputs; interior nodes carry a closure that routes the node's
/// gradient into its parents.
template <typename T>
class Var : public std::enable_shared_from_this<Var<T>> {
public:
    Tensor4<T> value;
    Tensor4<T> grad;  // allocated on first accumulation
    bool requires_grad = false;
    bool grad_seen = false;

    std::vector<VarPtr<T>> parents;
    std::function<void(Var<T>&)> backward_fn;

    Var() = default;
    explicit Var(Tensor4<T> v) : value(std::move(v)) {}

    static VarPtr<T> constant(Tensor4<T> v) { return std::make_shared<Var<T>>(std::move(v)); }

    static VarPtr<T> leaf(Tensor4<T> v) {
        auto p = std::make_shared<Var<T>>(std::move(v));
        p->requires_grad = true;
        return p;
    }

    bool is_scalar() const { return value.numel() == 1; }

    Tensor4<T>& ensure_grad() {
        if (grad.empty()) {
            const auto& s = value.shape();
            grad = Tensor4<T>(s[0], s[1], s[2], s[3]);
        }
        return grad;
    }

    void accumulate(const Tensor4<T>& g) {
        if (!g.same_shape(value)) {
            throw std::invalid_argument("Var::accumulate: gradient shape " + g.shape_str() +
                                        " does not match value shape " + value.shape_str());
        }
        auto& dst = ensure_grad();
        const T* src = g.data();
        T* d = dst.data();
        const std::size_t count = dst.numel();
        for (std::size_t i = 0; i < count; ++i) d[i] += src[i];
        grad_seen = true;
    }

    void zero_grad() {
        if (!grad.empty()) grad.fill(T(0));
        grad_seen = false;
    }

    /// Reverse-mode sweep from a scalar root. Seeds d(root)/d(root) = 1 and
    /// walks the graph in reverse topological order.
    void backward() {
        if (!is_scalar()) {
            throw std::invalid_argument("Var::backward: root must be scalar, got " +
                                        value.shape_str());
        }
        if (!requires_grad) return;

        std::vector<Var<T>*> order;
        topo_order(order);

        ensure_grad().fill(T(1));
        grad_seen = true;
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            Var<T>* node = *it;
            if (node->backward_fn && node->grad_seen) node->backward_fn(*node);
        }
    }

private:
    void topo_order(std::vector<Var<T>*>& order) {
        // Iterative post-order DFS along parent edges.
        std::unordered_set<Var<T>*> seen;
        std::vector<std::pair<Var<T>*, std::size_t>> stack;
        stack.emplace_back(this, 0);
        seen.insert(this);
        while (!stack.empty()) {
            auto& [node, next] = stack.back();
            if (next < node->parents.size()) {
                Var<T>* p = node->parents[next++].get();
                if (p->requires_grad && seen.insert(p).second) {
                    stack.emplace_back(p, 0);
                }
            } else {
                order.push_back(node);
                stack.pop_back();
            }
        }
    }
};

/// Builds an op node. The backward closure is only retained when gradients
/// are enabled and some parent needs them, so inference records nothing.
template <typename T>
VarPtr<T> make_op(Tensor4<T> value, std::vector<VarPtr<T>> parents,
                  std::function<void(Var<T>&)> backward) {
    auto out = std::make_shared<Var<T>>(std::move(value));
    bool needs = false;
    if (grad_enabled()) {
        for (const auto& p : parents) {
            if (p && p->requires_grad) {
                needs = true;
                break;
            }
        }
    }
    if (needs) {
        out->requires_grad = true;
        out->parents = std::move(parents);
        out->backward_fn = std::move(backward);
    }
    return out;
}

}  // namespace dsvr::nn
