#pragma once

// 2D sine/cosine positional embedding for a token grid. Half the channels
// encode the row index, half the column index; within each half, even
// channels are sines and odd channels cosines of geometrically spaced
// frequencies.

#include "ager/errors.hpp"
#include "ager/tensor.hpp"

#include <cmath>

namespace ager {

template <class T>
Tensor<T> cosine_position_embedding(int grid_h, int grid_w, int dim) {
    if (dim % 2 != 0) throw DimensionError("cosine_position_embedding: dim must be even");
    const int half = dim / 2;
    Tensor<T> out({grid_h * grid_w, dim});
    for (int y = 0; y < grid_h; ++y) {
        for (int x = 0; x < grid_w; ++x) {
            T* row = out.data() + static_cast<int64_t>(y * grid_w + x) * dim;
            for (int i = 0; i < half; ++i) {
                const double freq = std::pow(10000.0, -2.0 * (i / 2) / half);
                const double ay = y * freq;
                const double ax = x * freq;
                row[i] = static_cast<T>(i % 2 == 0 ? std::sin(ay) : std::cos(ay));
                row[half + i] = static_cast<T>(i % 2 == 0 ? std::sin(ax) : std::cos(ax));
            }
        }
    }
    return out;
}

}  // namespace ager
