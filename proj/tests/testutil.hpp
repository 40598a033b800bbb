#pragma once

// Shared test helpers: central-difference gradient checking against the
// autodiff path, and small random tensor builders.

#include "ager/params.hpp"

#include <functional>
#include <string>

namespace agertest {

struct GradCheckReport {
    double max_rel = 0.0;
    std::string worst_param;
    double ad_at_worst = 0.0, fd_at_worst = 0.0;
    double loss_value = 0.0;
};

// loss_fn must be deterministic in the store values (seed any rng per call).
inline GradCheckReport grad_check(
    ager::ParamStore<double>& store,
    const std::function<ager::Var<double>(ager::GraphCtx<double>&)>& loss_fn, double h = 1e-5) {
    GradCheckReport rep;
    std::vector<ager::Tensor<double>> grads;
    {
        ager::GraphCtx<double> g(store);
        auto loss = loss_fn(g);
        rep.loss_value = loss->val[0];
        ager::backward(loss);
        for (size_t i = 0; i < store.entries.size(); ++i) {
            const auto* t = g.grad_of(static_cast<int>(i));
            grads.push_back(t ? t->clone()
                              : ager::Tensor<double>::zeros(store.entries[i].value.shape));
        }
    }
    auto eval = [&]() {
        ager::GraphCtx<double> g(store, /*grad=*/false);
        return loss_fn(g)->val[0];
    };
    for (size_t i = 0; i < store.entries.size(); ++i) {
        auto& value = store.entries[i].value;
        for (int64_t k = 0; k < value.numel(); ++k) {
            const double orig = value[k];
            value[k] = orig + h;
            const double lp = eval();
            value[k] = orig - h;
            const double lm = eval();
            value[k] = orig;
            const double fd = (lp - lm) / (2 * h);
            const double ad = grads[i][k];
            // the floor scales with the loss so finite-difference
            // cancellation noise on true-zero gradients stays below it
            const double floor = 1e-6 * std::max(1.0, std::abs(rep.loss_value));
            const double rel = std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), floor});
            if (rel > rep.max_rel) {
                rep.max_rel = rel;
                rep.worst_param = store.entries[i].name + "[" + std::to_string(k) + "]";
                rep.ad_at_worst = ad;
                rep.fd_at_worst = fd;
            }
        }
    }
    return rep;
}

inline ager::Tensor<double> randn(std::vector<int> shape, uint64_t seed, double stddev = 1.0) {
    auto rng = ager::make_rng(seed);
    return ager::normal_init<double>(std::move(shape), stddev, rng);
}

}  // namespace agertest
