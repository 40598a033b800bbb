#pragma once

// Transformer building blocks on top of the autodiff core: linear layers,
// MLPs, multi-head attention, pre-norm encoder/decoder layers and a single
// MLP-Mixer block. Modules register parameters at construction and hold
// ids into the ParamStore; forward passes pull leaves from a GraphCtx.

#include "ager/params.hpp"

namespace ager {

template <class T>
struct Builder {
    ParamStore<T>& store;
    std::mt19937_64 rng;
    ParamGroup group = ParamGroup::rest;

    Builder(ParamStore<T>& s, uint64_t seed) : store(s), rng(make_rng(seed)) {}
};

template <class T>
struct Linear {
    int w = -1, b = -1;
    int in = 0, out = 0;

    Linear() = default;
    Linear(Builder<T>& bl, const std::string& prefix, int in_, int out_, bool zero_init = false)
        : in(in_), out(out_) {
        Tensor<T> W = zero_init ? Tensor<T>::zeros({out, in})
                                : xavier_uniform<T>({out, in}, in, out, bl.rng);
        w = bl.store.add(prefix + ".w", std::move(W), bl.group);
        b = bl.store.add(prefix + ".b", Tensor<T>::zeros({1, out}), bl.group);
    }

    Var<T> fwd(GraphCtx<T>& g, const Var<T>& x) const {
        return add_rowvec(matmul(x, g.p(w), false, true), g.p(b));
    }
};

template <class T>
struct LayerNorm {
    int gamma = -1, beta = -1;

    LayerNorm() = default;
    LayerNorm(Builder<T>& bl, const std::string& prefix, int dim) {
        gamma = bl.store.add(prefix + ".g", Tensor<T>::full({1, dim}, T(1)), bl.group);
        beta = bl.store.add(prefix + ".b", Tensor<T>::zeros({1, dim}), bl.group);
    }

    Var<T> fwd(GraphCtx<T>& g, const Var<T>& x) const {
        return layer_norm_rows(x, g.p(gamma), g.p(beta));
    }
};

// n_layers linear layers with GELU between them (none after the last)
template <class T>
struct Mlp {
    std::vector<Linear<T>> layers;

    Mlp() = default;
    Mlp(Builder<T>& bl, const std::string& prefix, int in, int hidden, int out, int n_layers) {
        for (int i = 0; i < n_layers; ++i) {
            const int li = i == 0 ? in : hidden;
            const int lo = i == n_layers - 1 ? out : hidden;
            layers.emplace_back(bl, prefix + ".l" + std::to_string(i), li, lo);
        }
    }

    Var<T> fwd(GraphCtx<T>& g, Var<T> x) const {
        for (size_t i = 0; i < layers.size(); ++i) {
            x = layers[i].fwd(g, x);
            if (i + 1 < layers.size()) x = gelu(x);
        }
        return x;
    }
};

template <class T>
struct MultiHeadAttention {
    Linear<T> wq, wk, wv, wo;
    int heads = 1, dim = 0;

    MultiHeadAttention() = default;
    MultiHeadAttention(Builder<T>& bl, const std::string& prefix, int dim_, int heads_)
        : heads(heads_), dim(dim_) {
        if (dim % heads != 0) throw ShapeError("mha: dim not divisible by heads");
        wq = Linear<T>(bl, prefix + ".q", dim, dim);
        wk = Linear<T>(bl, prefix + ".k", dim, dim);
        wv = Linear<T>(bl, prefix + ".v", dim, dim);
        wo = Linear<T>(bl, prefix + ".o", dim, dim);
    }

    Var<T> fwd(GraphCtx<T>& g, const Var<T>& query, const Var<T>& memory) const {
        const int dh = dim / heads;
        auto Q = wq.fwd(g, query);
        auto K = wk.fwd(g, memory);
        auto V = wv.fwd(g, memory);
        std::vector<Var<T>> outs;
        outs.reserve(static_cast<size_t>(heads));
        const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));
        for (int h = 0; h < heads; ++h) {
            auto qh = slice_cols(Q, h * dh, dh);
            auto kh = slice_cols(K, h * dh, dh);
            auto vh = slice_cols(V, h * dh, dh);
            auto attn = softmax_rows(scale(matmul(qh, kh, false, true), inv_sqrt));
            outs.push_back(matmul(attn, vh));
        }
        return wo.fwd(g, heads == 1 ? outs[0] : concat_cols(outs));
    }
};

// pre-norm: x + MHA(LN(x)); x + FFN(LN(x))
template <class T>
struct SaLayer {
    LayerNorm<T> ln1, ln2;
    MultiHeadAttention<T> attn;
    Linear<T> ff1, ff2;

    SaLayer() = default;
    SaLayer(Builder<T>& bl, const std::string& prefix, int dim, int heads, int ffn_dim) {
        ln1 = LayerNorm<T>(bl, prefix + ".ln1", dim);
        attn = MultiHeadAttention<T>(bl, prefix + ".attn", dim, heads);
        ln2 = LayerNorm<T>(bl, prefix + ".ln2", dim);
        ff1 = Linear<T>(bl, prefix + ".ff1", dim, ffn_dim);
        ff2 = Linear<T>(bl, prefix + ".ff2", ffn_dim, dim);
    }

    Var<T> fwd(GraphCtx<T>& g, Var<T> x) const {
        auto n1 = ln1.fwd(g, x);
        x = add(x, attn.fwd(g, n1, n1));
        x = add(x, ff2.fwd(g, gelu(ff1.fwd(g, ln2.fwd(g, x)))));
        return x;
    }
};

// cross-attention over memory, then self-attention, then FFN (pre-norm)
template <class T>
struct DecoderLayer {
    LayerNorm<T> ln_ca, ln_sa, ln_ff;
    MultiHeadAttention<T> cross, self_attn;
    Linear<T> ff1, ff2;

    DecoderLayer() = default;
    DecoderLayer(Builder<T>& bl, const std::string& prefix, int dim, int heads, int ffn_dim) {
        ln_ca = LayerNorm<T>(bl, prefix + ".ln_ca", dim);
        cross = MultiHeadAttention<T>(bl, prefix + ".cross", dim, heads);
        ln_sa = LayerNorm<T>(bl, prefix + ".ln_sa", dim);
        self_attn = MultiHeadAttention<T>(bl, prefix + ".self", dim, heads);
        ln_ff = LayerNorm<T>(bl, prefix + ".ln_ff", dim);
        ff1 = Linear<T>(bl, prefix + ".ff1", dim, ffn_dim);
        ff2 = Linear<T>(bl, prefix + ".ff2", ffn_dim, dim);
    }

    Var<T> fwd(GraphCtx<T>& g, Var<T> q, const Var<T>& memory) const {
        q = add(q, cross.fwd(g, ln_ca.fwd(g, q), memory));
        auto n = ln_sa.fwd(g, q);
        q = add(q, self_attn.fwd(g, n, n));
        q = add(q, ff2.fwd(g, gelu(ff1.fwd(g, ln_ff.fwd(g, q)))));
        return q;
    }
};

// one token-mixing + channel-mixing block over a fixed-length token set
template <class T>
struct MixerBlock {
    LayerNorm<T> ln_tok, ln_ch;
    Linear<T> tok1, tok2, ch1, ch2;
    int n_tokens = 0;

    MixerBlock() = default;
    MixerBlock(Builder<T>& bl, const std::string& prefix, int n_tokens_, int dim)
        : n_tokens(n_tokens_) {
        ln_tok = LayerNorm<T>(bl, prefix + ".ln_tok", dim);
        tok1 = Linear<T>(bl, prefix + ".tok1", n_tokens, n_tokens * 2);
        tok2 = Linear<T>(bl, prefix + ".tok2", n_tokens * 2, n_tokens);
        ln_ch = LayerNorm<T>(bl, prefix + ".ln_ch", dim);
        ch1 = Linear<T>(bl, prefix + ".ch1", dim, dim * 2);
        ch2 = Linear<T>(bl, prefix + ".ch2", dim * 2, dim);
    }

    Var<T> fwd(GraphCtx<T>& g, Var<T> x) const {
        if (x->val.rows() != n_tokens) throw ShapeError("mixer: token count mismatch");
        auto t = transpose(ln_tok.fwd(g, x));  // [dim, n_tokens]
        t = tok2.fwd(g, gelu(tok1.fwd(g, t)));
        x = add(x, transpose(t));
        x = add(x, ch2.fwd(g, gelu(ch1.fwd(g, ln_ch.fwd(g, x)))));
        return x;
    }
};

}  // namespace ager
