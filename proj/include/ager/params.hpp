#pragma once

// Named parameter registry with AdamW state, plus the per-forward leaf
// cache (GraphCtx). Registration order is the canonical parameter order
// used by the optimizer, checkpoints and gradient checks.

#include "ager/autodiff.hpp"
#include "ager/rng.hpp"

#include <map>
#include <string>
#include <vector>

namespace ager {

enum class ParamGroup { backbone, rest };

template <class T>
struct ParamStore {
    struct Entry {
        std::string name;
        Tensor<T> value;
        Tensor<T> m, v;  // AdamW moments
        ParamGroup group = ParamGroup::rest;
    };

    std::vector<Entry> entries;
    std::map<std::string, int> index;
    uint64_t init_seed = 0;

    int add(const std::string& name, Tensor<T> value, ParamGroup group = ParamGroup::rest) {
        if (index.count(name)) throw std::runtime_error("duplicate parameter: " + name);
        Entry e;
        e.name = name;
        e.m = Tensor<T>::zeros(value.shape);
        e.v = Tensor<T>::zeros(value.shape);
        e.value = std::move(value);
        e.group = group;
        entries.push_back(std::move(e));
        index[name] = static_cast<int>(entries.size()) - 1;
        return static_cast<int>(entries.size()) - 1;
    }

    Entry& at(int id) { return entries[static_cast<size_t>(id)]; }
    const Entry& at(int id) const { return entries[static_cast<size_t>(id)]; }
    int id_of(const std::string& name) const { return index.at(name); }
    int64_t total_scalars() const {
        int64_t n = 0;
        for (auto& e : entries) n += e.value.numel();
        return n;
    }
};

// ---------------------------------------------------------------- init fns

template <class T>
Tensor<T> xavier_uniform(std::vector<int> shape, int fan_in, int fan_out, std::mt19937_64& rng) {
    Tensor<T> t(std::move(shape));
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> d(-bound, bound);
    for (auto& v : *t.buf) v = static_cast<T>(d(rng));
    return t;
}

template <class T>
Tensor<T> normal_init(std::vector<int> shape, double stddev, std::mt19937_64& rng) {
    Tensor<T> t(std::move(shape));
    std::normal_distribution<double> d(0.0, stddev);
    for (auto& v : *t.buf) v = static_cast<T>(d(rng));
    return t;
}

// ------------------------------------------------------------ leaf caching

// Per-forward context: hands out autodiff leaves bound to the store's
// parameter buffers (no copy) and caches them so each parameter appears
// once per graph.
template <class T>
struct GraphCtx {
    const ParamStore<T>* store = nullptr;
    std::vector<Var<T>> leaves;
    bool want_grad = true;

    explicit GraphCtx(const ParamStore<T>& s, bool grad = true)
        : store(&s), leaves(s.entries.size()), want_grad(grad) {}

    Var<T> p(int id) {
        auto& slot = leaves[static_cast<size_t>(id)];
        if (!slot) slot = leaf(store->at(id).value, want_grad);
        return slot;
    }

    // gradient of parameter id accumulated by backward(); empty if untouched
    const Tensor<T>* grad_of(int id) const {
        const auto& slot = leaves[static_cast<size_t>(id)];
        if (!slot || slot->grad.empty()) return nullptr;
        return &slot->grad;
    }
};

// -------------------------------------------------------------------- AdamW

template <class T>
struct AdamW {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double weight_decay = 1e-4;
    int64_t step_count = 0;

    // grads: one tensor per store entry (empty tensors are skipped)
    void step(ParamStore<T>& store, const std::vector<Tensor<T>>& grads, double lr_backbone,
              double lr_rest) {
        ++step_count;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
        for (size_t i = 0; i < store.entries.size(); ++i) {
            auto& e = store.entries[i];
            const double lr = e.group == ParamGroup::backbone ? lr_backbone : lr_rest;
            const Tensor<T>& g = grads[i];
            if (g.empty()) continue;
            T* p = e.value.data();
            T* m = e.m.data();
            T* v = e.v.data();
            const T* gd = g.data();
            const int64_t n = e.value.numel();
            for (int64_t k = 0; k < n; ++k) {
                const double gk = static_cast<double>(gd[k]);
                const double mk = beta1 * static_cast<double>(m[k]) + (1.0 - beta1) * gk;
                const double vk = beta2 * static_cast<double>(v[k]) + (1.0 - beta2) * gk * gk;
                m[k] = static_cast<T>(mk);
                v[k] = static_cast<T>(vk);
                const double mhat = mk / bc1;
                const double vhat = vk / bc2;
                const double upd = mhat / (std::sqrt(vhat) + eps) +
                                   weight_decay * static_cast<double>(p[k]);
                p[k] = static_cast<T>(static_cast<double>(p[k]) - lr * upd);
            }
        }
    }
};

}  // namespace ager
