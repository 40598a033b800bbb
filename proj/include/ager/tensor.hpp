#pragma once

// Dense row-major tensor with shared storage. Buffers are written once at
// creation and treated as immutable afterwards, so views and parameter
// leaves can share them safely across autodiff graphs.

#include <Eigen/Core>

#include <cassert>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <new>
#include <numeric>
#include <vector>

namespace ager {

// All tensor buffers share one alignment so Eigen's vectorized kernels peel
// identically no matter the allocation history; keeps results bitwise
// reproducible across runs and checkpoints.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};
    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) {}
    T* allocate(std::size_t n) {
        return static_cast<T*>(::operator new(n * sizeof(T), kAlign));
    }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }
    template <class U>
    bool operator==(const AlignedAllocator<U>&) const {
        return true;
    }
};

template <class T>
using AlignedVec = std::vector<T, AlignedAllocator<T>>;

template <class T>
struct Tensor {
    std::vector<int> shape;
    std::shared_ptr<AlignedVec<T>> buf;

    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using MapM = Eigen::Map<Mat>;
    using CMapM = Eigen::Map<const Mat>;

    Tensor() = default;
    explicit Tensor(std::vector<int> s)
        : shape(std::move(s)), buf(std::make_shared<AlignedVec<T>>(numel_of(shape), T(0))) {}
    Tensor(std::vector<int> s, AlignedVec<T> values)
        : shape(std::move(s)), buf(std::make_shared<AlignedVec<T>>(std::move(values))) {
        assert(static_cast<int64_t>(buf->size()) == numel_of(shape));
    }

    static int64_t numel_of(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) n *= d;
        return n;
    }

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
    static Tensor full(std::vector<int> s, T v) {
        Tensor t(std::move(s));
        std::fill(t.buf->begin(), t.buf->end(), v);
        return t;
    }
    static Tensor scalar(T v) { return full({1}, v); }

    bool empty() const { return !buf; }
    int64_t numel() const { return buf ? static_cast<int64_t>(buf->size()) : 0; }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }

    // rows/cols of the matrix view: rank-1 tensors are [1, n] rows,
    // rank>2 tensors collapse all leading dims into rows.
    int rows() const {
        if (shape.empty()) return 1;
        if (shape.size() == 1) return 1;
        int64_t r = 1;
        for (size_t i = 0; i + 1 < shape.size(); ++i) r *= shape[i];
        return static_cast<int>(r);
    }
    int cols() const { return shape.empty() ? 1 : shape.back(); }

    T* data() { return buf->data(); }
    const T* data() const { return buf->data(); }
    T& operator[](int64_t i) { return (*buf)[static_cast<size_t>(i)]; }
    const T& operator[](int64_t i) const { return (*buf)[static_cast<size_t>(i)]; }
    T& at(int r, int c) { return (*buf)[static_cast<size_t>(r) * cols() + c]; }
    const T& at(int r, int c) const { return (*buf)[static_cast<size_t>(r) * cols() + c]; }

    MapM mat() { return MapM(data(), rows(), cols()); }
    CMapM mat() const { return CMapM(data(), rows(), cols()); }

    Tensor clone() const {
        Tensor t;
        t.shape = shape;
        t.buf = std::make_shared<AlignedVec<T>>(*buf);
        return t;
    }

    Tensor reshaped(std::vector<int> s) const {
        assert(numel_of(s) == numel());
        Tensor t;
        t.shape = std::move(s);
        t.buf = buf;
        return t;
    }

    template <class U>
    Tensor<U> cast() const {
        Tensor<U> t;
        t.shape = shape;
        t.buf = std::make_shared<AlignedVec<U>>(buf->size());
        for (size_t i = 0; i < buf->size(); ++i) (*t.buf)[i] = static_cast<U>((*buf)[i]);
        return t;
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (T v : *buf)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }
};

using Tensor32 = Tensor<float>;
using Tensor64 = Tensor<double>;

}  // namespace ager
