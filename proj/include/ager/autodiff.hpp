#pragma once

// Reverse-mode autodiff over Tensor<T>. Graphs are built per forward pass
// (shared_ptr nodes, closures for the backward step) and discarded after
// backward(); parameter leaves share the parameter buffers, so building a
// graph never copies weights.
//
// Convention: backward closures that need the forward output capture their
// own aliasing Tensor copy *before* make_node is called, since argument
// evaluation order is unspecified.

#include "ager/tensor.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace ager {

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class T>
struct Node {
    Tensor<T> val;
    Tensor<T> grad;  // allocated during backward
    bool needs_grad = false;
    std::vector<std::shared_ptr<Node<T>>> parents;
    std::function<void(Node<T>&)> backprop;

    void ensure_grad() {
        if (grad.empty()) grad = Tensor<T>::zeros(val.shape);
    }
};

template <class T>
using Var = std::shared_ptr<Node<T>>;

template <class T>
Var<T> make_node(Tensor<T> val, std::vector<Var<T>> parents, std::function<void(Node<T>&)> bp) {
    auto n = std::make_shared<Node<T>>();
    n->val = std::move(val);
    n->parents = std::move(parents);
    for (auto& p : n->parents)
        if (p->needs_grad) n->needs_grad = true;
    if (n->needs_grad) n->backprop = std::move(bp);
    return n;
}

template <class T>
Var<T> leaf(Tensor<T> val, bool needs_grad) {
    auto n = std::make_shared<Node<T>>();
    n->val = std::move(val);
    n->needs_grad = needs_grad;
    return n;
}

template <class T>
Var<T> constant(Tensor<T> val) {
    return leaf(std::move(val), false);
}

// Value passes through, gradient does not (the stop-gradient operator).
template <class T>
Var<T> detach(const Var<T>& x) {
    return constant(x->val);
}

template <class T>
void backward(const Var<T>& loss) {
    if (loss->val.numel() != 1) throw ShapeError("backward: loss must be scalar");
    // reverse post-order DFS = valid topological order (consumers first)
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    std::vector<std::pair<Node<T>*, size_t>> stack{{loss.get(), 0}};
    seen.insert(loss.get());
    while (!stack.empty()) {
        auto [n, i] = stack.back();
        if (i < n->parents.size()) {
            ++stack.back().second;
            Node<T>* p = n->parents[i].get();
            if (p->needs_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    loss->ensure_grad();
    (*loss->grad.buf)[0] = T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<T>* n = *it;
        if (n->backprop && n->needs_grad) {
            n->ensure_grad();
            n->backprop(*n);
        }
    }
}

namespace detail {
template <class T>
void accum(const Var<T>& p, const Tensor<T>& g) {
    if (!p->needs_grad) return;
    p->ensure_grad();
    p->grad.mat() += g.mat();
}
}  // namespace detail

// ---------------------------------------------------------------- arithmetic

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    if (a->val.shape != b->val.shape) throw ShapeError("add: shape mismatch");
    Tensor<T> out(a->val.shape);
    out.mat() = a->val.mat() + b->val.mat();
    return make_node<T>(std::move(out), {a, b}, [a, b](Node<T>& n) {
        detail::accum(a, n.grad);
        detail::accum(b, n.grad);
    });
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
    if (a->val.shape != b->val.shape) throw ShapeError("sub: shape mismatch");
    Tensor<T> out(a->val.shape);
    out.mat() = a->val.mat() - b->val.mat();
    return make_node<T>(std::move(out), {a, b}, [a, b](Node<T>& n) {
        detail::accum(a, n.grad);
        if (b->needs_grad) {
            b->ensure_grad();
            b->grad.mat() -= n.grad.mat();
        }
    });
}

template <class T>
Var<T> neg(const Var<T>& a) {
    Tensor<T> out(a->val.shape);
    out.mat() = -a->val.mat();
    return make_node<T>(std::move(out), {a}, [a](Node<T>& n) {
        if (!a->needs_grad) return;
        a->ensure_grad();
        a->grad.mat() -= n.grad.mat();
    });
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
    if (a->val.shape != b->val.shape) throw ShapeError("mul: shape mismatch");
    Tensor<T> out(a->val.shape);
    out.mat() = a->val.mat().cwiseProduct(b->val.mat());
    return make_node<T>(std::move(out), {a, b}, [a, b](Node<T>& n) {
        if (a->needs_grad) {
            a->ensure_grad();
            a->grad.mat() += n.grad.mat().cwiseProduct(b->val.mat());
        }
        if (b->needs_grad) {
            b->ensure_grad();
            b->grad.mat() += n.grad.mat().cwiseProduct(a->val.mat());
        }
    });
}

template <class T>
Var<T> scale(const Var<T>& a, T c) {
    Tensor<T> out(a->val.shape);
    out.mat() = a->val.mat() * c;
    return make_node<T>(std::move(out), {a}, [a, c](Node<T>& n) {
        if (!a->needs_grad) return;
        a->ensure_grad();
        a->grad.mat() += n.grad.mat() * c;
    });
}

// broadcast a [d] (or [1,d]) row vector over every row of a [n,d] matrix
template <class T>
Var<T> add_rowvec(const Var<T>& a, const Var<T>& v) {
    if (a->val.cols() != v->val.cols() || v->val.rows() != 1)
        throw ShapeError("add_rowvec: shape mismatch");
    Tensor<T> out(a->val.shape);
    out.mat() = a->val.mat().rowwise() + v->val.mat().row(0);
    return make_node<T>(std::move(out), {a, v}, [a, v](Node<T>& n) {
        detail::accum(a, n.grad);
        if (v->needs_grad) {
            v->ensure_grad();
            v->grad.mat().row(0) += n.grad.mat().colwise().sum();
        }
    });
}

// scale row i of a by column vector c[i]
template <class T>
Var<T> mul_cols(const Var<T>& a, const Var<T>& c) {
    if (a->val.rows() != c->val.rows() || c->val.cols() != 1)
        throw ShapeError("mul_cols: shape mismatch");
    Tensor<T> out(a->val.shape);
    out.mat().array() = a->val.mat().array().colwise() * c->val.mat().col(0).array();
    return make_node<T>(std::move(out), {a, c}, [a, c](Node<T>& n) {
        if (a->needs_grad) {
            a->ensure_grad();
            a->grad.mat().array() += n.grad.mat().array().colwise() * c->val.mat().col(0).array();
        }
        if (c->needs_grad) {
            c->ensure_grad();
            c->grad.mat().col(0) += n.grad.mat().cwiseProduct(a->val.mat()).rowwise().sum();
        }
    });
}

// divide row i of a by column vector d[i]
template <class T>
Var<T> div_cols(const Var<T>& a, const Var<T>& d) {
    if (a->val.rows() != d->val.rows() || d->val.cols() != 1)
        throw ShapeError("div_cols: shape mismatch");
    Tensor<T> out(a->val.shape);
    out.mat().array() = a->val.mat().array().colwise() / d->val.mat().col(0).array();
    auto bp = [a, d, o = out](Node<T>& n) {
        if (a->needs_grad) {
            a->ensure_grad();
            a->grad.mat().array() += n.grad.mat().array().colwise() / d->val.mat().col(0).array();
        }
        if (d->needs_grad) {
            d->ensure_grad();
            d->grad.mat().col(0).array() -=
                n.grad.mat().cwiseProduct(o.mat()).rowwise().sum().array() /
                d->val.mat().col(0).array();
        }
    };
    return make_node<T>(std::move(out), {a, d}, std::move(bp));
}

// elementwise division (denominator nonzero by contract)
template <class T>
Var<T> div(const Var<T>& a, const Var<T>& b) {
    if (a->val.shape != b->val.shape) throw ShapeError("div: shape mismatch");
    Tensor<T> out(a->val.shape);
    out.mat() = a->val.mat().cwiseQuotient(b->val.mat());
    auto bp = [a, b, o = out](Node<T>& n) {
        if (a->needs_grad) {
            a->ensure_grad();
            a->grad.mat() += n.grad.mat().cwiseQuotient(b->val.mat());
        }
        if (b->needs_grad) {
            b->ensure_grad();
            b->grad.mat() -= n.grad.mat().cwiseProduct(o.mat()).cwiseQuotient(b->val.mat());
        }
    };
    return make_node<T>(std::move(out), {a, b}, std::move(bp));
}

// ------------------------------------------------------------------- matmul

template <class T>
Var<T> matmul(const Var<T>& a, const Var<T>& b, bool ta = false, bool tb = false) {
    const auto A = a->val.mat();
    const auto B = b->val.mat();
    const int m = ta ? A.cols() : A.rows();
    const int k = ta ? A.rows() : A.cols();
    const int k2 = tb ? B.cols() : B.rows();
    const int n = tb ? B.rows() : B.cols();
    if (k != k2) throw ShapeError("matmul: inner dim mismatch");
    Tensor<T> out({m, n});
    if (!ta && !tb)
        out.mat().noalias() = A * B;
    else if (!ta && tb)
        out.mat().noalias() = A * B.transpose();
    else if (ta && !tb)
        out.mat().noalias() = A.transpose() * B;
    else
        out.mat().noalias() = A.transpose() * B.transpose();
    return make_node<T>(std::move(out), {a, b}, [a, b, ta, tb](Node<T>& n) {
        const auto G = n.grad.mat();
        const auto A = a->val.mat();
        const auto B = b->val.mat();
        if (a->needs_grad) {
            a->ensure_grad();
            auto Ga = a->grad.mat();
            if (!ta && !tb)
                Ga.noalias() += G * B.transpose();
            else if (!ta && tb)
                Ga.noalias() += G * B;
            else if (ta && !tb)
                Ga.noalias() += B * G.transpose();
            else
                Ga.noalias() += B.transpose() * G.transpose();
        }
        if (b->needs_grad) {
            b->ensure_grad();
            auto Gb = b->grad.mat();
            if (!ta && !tb)
                Gb.noalias() += A.transpose() * G;
            else if (!ta && tb)
                Gb.noalias() += G.transpose() * A;
            else if (ta && !tb)
                Gb.noalias() += A * G;
            else
                Gb.noalias() += G.transpose() * A.transpose();
        }
    });
}

template <class T>
Var<T> transpose(const Var<T>& a) {
    Tensor<T> out({a->val.cols(), a->val.rows()});
    out.mat() = a->val.mat().transpose();
    return make_node<T>(std::move(out), {a}, [a](Node<T>& n) {
        if (!a->needs_grad) return;
        a->ensure_grad();
        a->grad.mat() += n.grad.mat().transpose();
    });
}

// ------------------------------------------------------------- nonlinearities

template <class T>
Var<T> softmax_rows(const Var<T>& a) {
    Tensor<T> out(a->val.shape);
    auto X = a->val.mat();
    auto Y = out.mat();
    for (int i = 0; i < X.rows(); ++i) {
        T mx = X.row(i).maxCoeff();
        Y.row(i).array() = (X.row(i).array() - mx).exp();
        Y.row(i) /= Y.row(i).sum();
    }
    auto bp = [a, o = out](Node<T>& n) {
        if (!a->needs_grad) return;
        a->ensure_grad();
        auto Y = o.mat();
        auto G = n.grad.mat();
        auto Ga = a->grad.mat();
        for (int i = 0; i < Y.rows(); ++i) {
            T dot = G.row(i).cwiseProduct(Y.row(i)).sum();
            Ga.row(i).array() += Y.row(i).array() * (G.row(i).array() - dot);
        }
    };
    return make_node<T>(std::move(out), {a}, std::move(bp));
}

// softmax over each column (normalizes every column to sum 1)
template <class T>
Var<T> softmax_cols(const Var<T>& a) {
    Tensor<T> out(a->val.shape);
    auto X = a->val.mat();
    auto Y = out.mat();
    for (int j = 0; j < X.cols(); ++j) {
        T mx = X.col(j).maxCoeff();
        Y.col(j).array() = (X.col(j).array() - mx).exp();
        Y.col(j) /= Y.col(j).sum();
    }
    auto bp = [a, o = out](Node<T>& n) {
        if (!a->needs_grad) return;
        a->ensure_grad();
        auto Y = o.mat();
        auto G = n.grad.mat();
        auto Ga = a->grad.mat();
        for (int j = 0; j < Y.cols(); ++j) {
            T dot = G.col(j).cwiseProduct(Y.col(j)).sum();
            Ga.col(j).array() += Y.col(j).array() * (G.col(j).array() - dot);
        }
    };
    return make_node<T>(std::move(out), {a}, std::move(bp));
}

template <class T>
Var<T> layer_norm_rows(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                       T eps = T(1e-5)) {
    const int d = x->val.cols();
    if (gamma->val.numel() != d || beta->val.numel() != d)
        throw ShapeError("layer_norm: gamma/beta size mismatch");
    Tensor<T> out(x->val.shape);
    Tensor<T> xhat(x->val.shape);
    Tensor<T> inv_std({x->val.rows(), 1});
    auto X = x->val.mat();
    for (int i = 0; i < X.rows(); ++i) {
        T mu = X.row(i).mean();
        T var = (X.row(i).array() - mu).square().mean();
        T is = T(1) / std::sqrt(var + eps);
        inv_std.at(i, 0) = is;
        xhat.mat().row(i).array() = (X.row(i).array() - mu) * is;
        out.mat().row(i) =
            xhat.mat().row(i).cwiseProduct(gamma->val.mat().row(0)) + beta->val.mat().row(0);
    }
    auto bp = [x, gamma, beta, xhat, inv_std](Node<T>& n) {
        auto G = n.grad.mat();
        auto Xh = xhat.mat();
        if (gamma->needs_grad) {
            gamma->ensure_grad();
            gamma->grad.mat().row(0) += G.cwiseProduct(Xh).colwise().sum();
        }
        if (beta->needs_grad) {
            beta->ensure_grad();
            beta->grad.mat().row(0) += G.colwise().sum();
        }
        if (x->needs_grad) {
            x->ensure_grad();
            auto Gx = x->grad.mat();
            Eigen::Array<T, 1, Eigen::Dynamic> dxhat;
            for (int i = 0; i < Xh.rows(); ++i) {
                dxhat = G.row(i).array() * gamma->val.mat().row(0).array();
                const T m1 = dxhat.mean();
                const T m2 = (dxhat * Xh.row(i).array()).mean();
                Gx.row(i).array() += (dxhat - m1 - Xh.row(i).array() * m2) * inv_std.at(i, 0);
            }
        }
    };
    return make_node<T>(std::move(out), {x, gamma, beta}, std::move(bp));
}

template <class T>
Var<T> gelu(const Var<T>& a) {
    Tensor<T> out(a->val.shape);
    const T* x = a->val.data();
    T* y = out.data();
    const int64_t n = a->val.numel();
    for (int64_t i = 0; i < n; ++i)
        y[i] = T(0.5) * x[i] * (T(1) + std::erf(x[i] * T(M_SQRT1_2)));
    return make_node<T>(std::move(out), {a}, [a](Node<T>& nd) {
        if (!a->needs_grad) return;
        a->ensure_grad();
        const T* x = a->val.data();
        const T* g = nd.grad.data();
        T* ga = a->grad.data();
        const T inv_sqrt2pi = T(0.3989422804014326779);
        for (int64_t i = 0; i < nd.grad.numel(); ++i) {
            T cdf = T(0.5) * (T(1) + std::erf(x[i] * T(M_SQRT1_2)));
            T pdf = inv_sqrt2pi * std::exp(T(-0.5) * x[i] * x[i]);
            ga[i] += g[i] * (cdf + x[i] * pdf);
        }
    });
}

template <class T>
Var<T> sigmoid(const Var<T>& a) {
    Tensor<T> out(a->val.shape);
    const T* x = a->val.data();
    T* y = out.data();
    for (int64_t i = 0; i < a->val.numel(); ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
    auto bp = [a, o = out](Node<T>& nd) {
        if (!a->needs_grad) return;
        a->ensure_grad();
        const T* y = o.data();
        const T* g = nd.grad.data();
        T* ga = a->grad.data();
        for (int64_t i = 0; i < nd.grad.numel(); ++i) ga[i] += g[i] * y[i] * (T(1) - y[i]);
    };
    return make_node<T>(std::move(out), {a}, std::move(bp));
}

template <class T>
Var<T> log_op(const Var<T>& a) {
    Tensor<T> out(a->val.shape);
    out.mat().array() = a->val.mat().array().log();
    return make_node<T>(std::move(out), {a}, [a](Node<T>& nd) {
        if (!a->needs_grad) return;
        a->ensure_grad();
        a->grad.mat().array() += nd.grad.mat().array() / a->val.mat().array();
    });
}

template <class T>
Var<T> sqrt_op(const Var<T>& a) {
    Tensor<T> out(a->val.shape);
    out.mat().array() = a->val.mat().array().sqrt();
    auto bp = [a, o = out](Node<T>& nd) {
        if (!a->needs_grad) return;
        a->ensure_grad();
        a->grad.mat().array() += nd.grad.mat().array() / (T(2) * o.mat().array());
    };
    return make_node<T>(std::move(out), {a}, std::move(bp));
}

// x^p for constant p (x >= 0 by contract)
template <class T>
Var<T> pow_const(const Var<T>& a, T p) {
    Tensor<T> out(a->val.shape);
    out.mat().array() = a->val.mat().array().pow(p);
    return make_node<T>(std::move(out), {a}, [a, p](Node<T>& nd) {
        if (!a->needs_grad || p == T(0)) return;
        a->ensure_grad();
        a->grad.mat().array() += nd.grad.mat().array() * p * a->val.mat().array().pow(p - T(1));
    });
}

// max(x, c); gradient passes only where x > c
template <class T>
Var<T> clamp_min(const Var<T>& a, T c) {
    Tensor<T> out(a->val.shape);
    out.mat() = a->val.mat().cwiseMax(c);
    return make_node<T>(std::move(out), {a}, [a, c](Node<T>& nd) {
        if (!a->needs_grad) return;
        a->ensure_grad();
        const T* x = a->val.data();
        const T* g = nd.grad.data();
        T* ga = a->grad.data();
        for (int64_t i = 0; i < nd.grad.numel(); ++i)
            if (x[i] > c) ga[i] += g[i];
    });
}

// ----------------------------------------------------------- shape plumbing

template <class T>
Var<T> reshape(const Var<T>& a, std::vector<int> shape) {
    Tensor<T> out = a->val.reshaped(std::move(shape));
    return make_node<T>(std::move(out), {a}, [a](Node<T>& nd) {
        if (!a->needs_grad) return;
        a->ensure_grad();
        Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>(a->grad.data(), a->grad.numel()) +=
            Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>(nd.grad.data(),
                                                                 nd.grad.numel());
    });
}

template <class T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
    int rows = 0;
    const int cols = parts.front()->val.cols();
    for (auto& p : parts) {
        if (p->val.cols() != cols) throw ShapeError("concat_rows: col mismatch");
        rows += p->val.rows();
    }
    Tensor<T> out({rows, cols});
    int r = 0;
    for (auto& p : parts) {
        out.mat().middleRows(r, p->val.rows()) = p->val.mat();
        r += p->val.rows();
    }
    return make_node<T>(std::move(out), parts, [parts](Node<T>& nd) {
        int r = 0;
        for (auto& p : parts) {
            if (p->needs_grad) {
                p->ensure_grad();
                p->grad.mat() += nd.grad.mat().middleRows(r, p->val.rows());
            }
            r += p->val.rows();
        }
    });
}

template <class T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
    int cols = 0;
    const int rows = parts.front()->val.rows();
    for (auto& p : parts) {
        if (p->val.rows() != rows) throw ShapeError("concat_cols: row mismatch");
        cols += p->val.cols();
    }
    Tensor<T> out({rows, cols});
    int c = 0;
    for (auto& p : parts) {
        out.mat().middleCols(c, p->val.cols()) = p->val.mat();
        c += p->val.cols();
    }
    return make_node<T>(std::move(out), parts, [parts](Node<T>& nd) {
        int c = 0;
        for (auto& p : parts) {
            if (p->needs_grad) {
                p->ensure_grad();
                p->grad.mat() += nd.grad.mat().middleCols(c, p->val.cols());
            }
            c += p->val.cols();
        }
    });
}

template <class T>
Var<T> slice_rows(const Var<T>& a, int r0, int nrows) {
    Tensor<T> out({nrows, a->val.cols()});
    out.mat() = a->val.mat().middleRows(r0, nrows);
    return make_node<T>(std::move(out), {a}, [a, r0, nrows](Node<T>& nd) {
        if (!a->needs_grad) return;
        a->ensure_grad();
        a->grad.mat().middleRows(r0, nrows) += nd.grad.mat();
    });
}

template <class T>
Var<T> slice_cols(const Var<T>& a, int c0, int ncols) {
    Tensor<T> out({a->val.rows(), ncols});
    out.mat() = a->val.mat().middleCols(c0, ncols);
    return make_node<T>(std::move(out), {a}, [a, c0, ncols](Node<T>& nd) {
        if (!a->needs_grad) return;
        a->ensure_grad();
        a->grad.mat().middleCols(c0, ncols) += nd.grad.mat();
    });
}

template <class T>
Var<T> gather_rows(const Var<T>& a, std::vector<int> idx) {
    Tensor<T> out({static_cast<int>(idx.size()), a->val.cols()});
    for (size_t i = 0; i < idx.size(); ++i)
        out.mat().row(static_cast<int>(i)) = a->val.mat().row(idx[i]);
    return make_node<T>(std::move(out), {a}, [a, idx = std::move(idx)](Node<T>& nd) {
        if (!a->needs_grad) return;
        a->ensure_grad();
        for (size_t i = 0; i < idx.size(); ++i)
            a->grad.mat().row(idx[i]) += nd.grad.mat().row(static_cast<int>(i));
    });
}

// pick individual (row, col) entries into a [k,1] column
template <class T>
Var<T> select_entries(const Var<T>& a, std::vector<std::pair<int, int>> rc) {
    Tensor<T> out({static_cast<int>(rc.size()), 1});
    for (size_t i = 0; i < rc.size(); ++i)
        out.at(static_cast<int>(i), 0) = a->val.at(rc[i].first, rc[i].second);
    return make_node<T>(std::move(out), {a}, [a, rc = std::move(rc)](Node<T>& nd) {
        if (!a->needs_grad) return;
        a->ensure_grad();
        for (size_t i = 0; i < rc.size(); ++i)
            a->grad.at(rc[i].first, rc[i].second) += nd.grad.at(static_cast<int>(i), 0);
    });
}

// ---------------------------------------------------------------- reductions

template <class T>
Var<T> sum_all(const Var<T>& a) {
    Tensor<T> out = Tensor<T>::scalar(a->val.mat().sum());
    return make_node<T>(std::move(out), {a}, [a](Node<T>& nd) {
        if (!a->needs_grad) return;
        a->ensure_grad();
        a->grad.mat().array() += (*nd.grad.buf)[0];
    });
}

template <class T>
Var<T> mean_all(const Var<T>& a) {
    const T inv = T(1) / static_cast<T>(a->val.numel());
    Tensor<T> out = Tensor<T>::scalar(a->val.mat().sum() * inv);
    return make_node<T>(std::move(out), {a}, [a, inv](Node<T>& nd) {
        if (!a->needs_grad) return;
        a->ensure_grad();
        a->grad.mat().array() += (*nd.grad.buf)[0] * inv;
    });
}

template <class T>
Var<T> row_sum(const Var<T>& a) {
    Tensor<T> out({a->val.rows(), 1});
    out.mat().col(0) = a->val.mat().rowwise().sum();
    return make_node<T>(std::move(out), {a}, [a](Node<T>& nd) {
        if (!a->needs_grad) return;
        a->ensure_grad();
        a->grad.mat().array().colwise() += nd.grad.mat().col(0).array();
    });
}

template <class T>
Var<T> row_dot(const Var<T>& a, const Var<T>& b) {
    if (a->val.shape != b->val.shape) throw ShapeError("row_dot: shape mismatch");
    Tensor<T> out({a->val.rows(), 1});
    out.mat().col(0) = a->val.mat().cwiseProduct(b->val.mat()).rowwise().sum();
    return make_node<T>(std::move(out), {a, b}, [a, b](Node<T>& nd) {
        if (a->needs_grad) {
            a->ensure_grad();
            a->grad.mat().array() += b->val.mat().array().colwise() * nd.grad.mat().col(0).array();
        }
        if (b->needs_grad) {
            b->ensure_grad();
            b->grad.mat().array() += a->val.mat().array().colwise() * nd.grad.mat().col(0).array();
        }
    });
}

// -------------------------------------------------------------- convolution

// Split a [C,H,W] tensor into non-overlapping k x k patches (stride = k,
// no padding), one row per patch in row-major patch order. Row layout:
// channel-major, then ky, then kx.
template <class T>
Var<T> patchify(const Var<T>& x, int k) {
    const int C = x->val.dim(0), H = x->val.dim(1), W = x->val.dim(2);
    if (H % k != 0 || W % k != 0) throw ShapeError("patchify: dims not divisible by k");
    const int gh = H / k, gw = W / k;
    const int pc = C * k * k;
    Tensor<T> out({gh * gw, pc});
    const T* src = x->val.data();
    T* dst = out.data();
    for (int py = 0; py < gh; ++py)
        for (int px = 0; px < gw; ++px) {
            T* row = dst + (static_cast<int64_t>(py) * gw + px) * pc;
            for (int c = 0; c < C; ++c)
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx)
                        row[(c * k + ky) * k + kx] =
                            src[(static_cast<int64_t>(c) * H + py * k + ky) * W + px * k + kx];
        }
    return make_node<T>(std::move(out), {x}, [x, k, C, H, W, gh, gw, pc](Node<T>& nd) {
        if (!x->needs_grad) return;
        x->ensure_grad();
        const T* g = nd.grad.data();
        T* gx = x->grad.data();
        for (int py = 0; py < gh; ++py)
            for (int px = 0; px < gw; ++px) {
                const T* row = g + (static_cast<int64_t>(py) * gw + px) * pc;
                for (int c = 0; c < C; ++c)
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx)
                            gx[(static_cast<int64_t>(c) * H + py * k + ky) * W + px * k + kx] +=
                                row[(c * k + ky) * k + kx];
            }
    });
}

// [cells, C] row-major grid -> [C, h, w]
template <class T>
Var<T> to_chw(const Var<T>& x, int h, int w) {
    const int C = x->val.cols();
    if (x->val.rows() != h * w) throw ShapeError("to_chw: cell count mismatch");
    Tensor<T> out({C, h, w});
    for (int i = 0; i < h * w; ++i)
        for (int c = 0; c < C; ++c) out.data()[static_cast<int64_t>(c) * h * w + i] = x->val.at(i, c);
    return make_node<T>(std::move(out), {x}, [x, h, w, C](Node<T>& nd) {
        if (!x->needs_grad) return;
        x->ensure_grad();
        for (int i = 0; i < h * w; ++i)
            for (int c = 0; c < C; ++c)
                x->grad.at(i, c) += nd.grad.data()[static_cast<int64_t>(c) * h * w + i];
    });
}

}  // namespace ager
