#pragma once

// Convolutional stem + tokenizer. Three strided conv blocks (4,4,2 — total
// stride 32) turn a [3,H,W] raster into a token grid; tokens are flattened
// row-major and a cosine positional embedding is added. Kernel size equals
// stride everywhere, so the stem is exactly translation-equivariant at the
// stride-cell level.

#include "ager/errors.hpp"
#include "ager/nn.hpp"
#include "ager/positional.hpp"

namespace ager {

inline constexpr int kStrideTotal = 32;

template <class T>
struct PatchTokenSet {
    Var<T> tokens;  // [grid_h*grid_w, dim]
    int grid_h = 0, grid_w = 0;
};

template <class T>
struct BackboneStem {
    Linear<T> conv1, conv2, conv3;
    int dim = 0;

    BackboneStem() = default;
    BackboneStem(Builder<T>& bl, const std::string& prefix, int dim_) : dim(dim_) {
        const int c1 = std::max(4, dim / 4);
        const int c2 = std::max(4, dim / 2);
        conv1 = Linear<T>(bl, prefix + ".conv1", 3 * 4 * 4, c1);
        conv2 = Linear<T>(bl, prefix + ".conv2", c1 * 4 * 4, c2);
        conv3 = Linear<T>(bl, prefix + ".conv3", c2 * 2 * 2, dim);
    }

    // stem features before the positional embedding, [N_b, dim]
    Var<T> features(GraphCtx<T>& g, const Var<T>& raster) const {
        if (raster->val.rank() != 3 || raster->val.dim(0) != 3)
            throw DimensionError("tokenize: raster must be [3,H,W]");
        const int H = raster->val.dim(1), W = raster->val.dim(2);
        if (H % kStrideTotal != 0 || W % kStrideTotal != 0)
            throw DimensionError("tokenize: H and W must be divisible by " +
                                 std::to_string(kStrideTotal));
        if (H < kStrideTotal || W < kStrideTotal)
            throw DimensionError("tokenize: raster smaller than total stride");
        auto x = gelu(conv1.fwd(g, patchify(raster, 4)));        // [HW/16, c1]
        x = to_chw(x, H / 4, W / 4);
        x = gelu(conv2.fwd(g, patchify(x, 4)));                  // [HW/256, c2]
        x = to_chw(x, H / 16, W / 16);
        return conv3.fwd(g, patchify(x, 2));                     // [HW/1024, dim]
    }

    PatchTokenSet<T> tokenize(GraphCtx<T>& g, const Var<T>& raster) const {
        auto feats = features(g, raster);
        const int gh = raster->val.dim(1) / kStrideTotal;
        const int gw = raster->val.dim(2) / kStrideTotal;
        auto pos = constant(cosine_position_embedding<T>(gh, gw, dim));
        return {add(feats, pos), gh, gw};
    }
};

}  // namespace ager
