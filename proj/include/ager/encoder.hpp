#pragma once

// Two-stage instance encoder. Each stage runs self-attention over
// [human centers; object centers; image tokens], then a clustering layer:
// cross-attention center update, Gumbel-softmax assignment over centers
// (normalized per image token) and a weighted merge into grouped tokens.
// Stage 2 consumes the stage-1 grouped tokens, so its sequence length is
// independent of the input resolution.

#include "ager/backbone.hpp"
#include "ager/nn.hpp"
#include "ager/rng.hpp"

#include <optional>

namespace ager {

enum class RunMode { train, eval };

template <class T>
struct CenterState {
    Var<T> human;   // [N_h^s, D]
    Var<T> object;  // [N_o^s, D]
    int stage = 1;

    Var<T> all() const { return concat_rows<T>({human, object}); }
    int n_human() const { return human->val.rows(); }
    int n_object() const { return object->val.rows(); }
    int n_total() const { return n_human() + n_object(); }
};

template <class T>
struct StageOutput {
    Var<T> grouped_human;    // [N_h^s, D]
    Var<T> grouped_object;   // [N_o^s, D]
    Var<T> assignment;       // [N_c^s, N_i^s], columns sum to 1
    Var<T> updated_centers;  // [N_c^s, D]
    int degenerate_centers = 0;  // centers whose assignment mass fell below eps
};

template <class T>
struct InstanceTokens {
    Var<T> human;   // [N_h^pred, D]
    Var<T> object;  // [N_o^pred, D]
};

template <class T>
struct EncodeDiagnostics {
    Tensor<T> assignment_stage1;  // [N_c^1, N_b]
    Tensor<T> assignment_stage2;  // [N_c^2, N_c^1]
    int degenerate_stage1 = 0;
    int degenerate_stage2 = 0;
};

// Eq.-style cross-attention center update: softmax(C T^t / sqrt(D)) T.
// Every output row is a convex combination of image-token rows.
template <class T>
Var<T> update_centers(const Var<T>& centers, const Var<T>& image_tokens) {
    const int d = image_tokens->val.cols();
    if (centers->val.cols() != d) throw ShapeError("update_centers: dim mismatch");
    auto weights = softmax_rows(
        scale(matmul(centers, image_tokens, false, true), T(1) / std::sqrt(static_cast<T>(d))));
    return matmul(weights, image_tokens);
}

template <class T>
struct ClusteringLayer {
    int w_c = -1, w_i = -1, w_u = -1, w_v = -1;  // square [D,D] projections
    static constexpr double kMassEps = 1e-8;

    ClusteringLayer() = default;
    ClusteringLayer(Builder<T>& bl, const std::string& prefix, int dim) {
        w_c = bl.store.add(prefix + ".w_c", xavier_uniform<T>({dim, dim}, dim, dim, bl.rng),
                           bl.group);
        w_i = bl.store.add(prefix + ".w_i", xavier_uniform<T>({dim, dim}, dim, dim, bl.rng),
                           bl.group);
        w_u = bl.store.add(prefix + ".w_u", xavier_uniform<T>({dim, dim}, dim, dim, bl.rng),
                           bl.group);
        w_v = bl.store.add(prefix + ".w_v", xavier_uniform<T>({dim, dim}, dim, dim, bl.rng),
                           bl.group);
    }

    // similarity matrix A [N_c, N_i]; every column sums to 1
    Var<T> gumbel_assign(GraphCtx<T>& g, const Var<T>& centers, const Var<T>& tokens,
                         T temperature, RunMode mode, std::mt19937_64& rng,
                         bool hard = false) const {
        if (!(temperature > T(0))) throw ValueError("gumbel_assign: temperature must be > 0");
        auto pc = matmul(centers, g.p(w_c), false, true);
        auto pt = matmul(tokens, g.p(w_i), false, true);
        auto logits = matmul(pc, pt, false, true);  // [N_c, N_i]
        if (mode == RunMode::train) {
            Tensor<T> noise(logits->val.shape);
            for (auto& v : *noise.buf) v = sample_gumbel<T>(rng);
            logits = add(logits, constant(std::move(noise)));
        }
        auto soft = softmax_cols(scale(logits, T(1) / temperature));
        if (!hard) return soft;
        // straight-through: one-hot argmax per column forward, soft gradient
        Tensor<T> delta(soft->val.shape);
        auto S = soft->val.mat();
        for (int j = 0; j < S.cols(); ++j) {
            int best = 0;
            S.col(j).maxCoeff(&best);
            for (int k = 0; k < S.rows(); ++k)
                delta.at(k, j) = (k == best ? T(1) : T(0)) - S(k, j);
        }
        return add(soft, constant(std::move(delta)));
    }

    // Eq.-style merge: g_k = c_k + W_u * (sum_j A_kj W_v t_j / sum_j A_kj)
    Var<T> merge_tokens(GraphCtx<T>& g, const Var<T>& centers, const Var<T>& tokens,
                        const Var<T>& assignment, int* degenerate_count = nullptr) const {
        auto projected = matmul(tokens, g.p(w_v), false, true);   // [N_i, D]
        auto weighted = matmul(assignment, projected);            // [N_c, D]
        auto mass = row_sum(assignment);                          // [N_c, 1]
        if (degenerate_count) {
            int n = 0;
            for (int k = 0; k < mass->val.rows(); ++k)
                if (static_cast<double>(mass->val.at(k, 0)) < kMassEps) ++n;
            *degenerate_count = n;
        }
        auto guarded = add(mass, constant(Tensor<T>::full(mass->val.shape, T(kMassEps))));
        auto mean = div_cols(weighted, guarded);
        return add(centers, matmul(mean, g.p(w_u), false, true));
    }
};

template <class T>
struct EncoderStage {
    std::vector<SaLayer<T>> sa_layers;
    ClusteringLayer<T> cluster;
    int pos_h = -1, pos_o = -1;  // learned center position embeddings
    int n_h = 0, n_o = 0, dim = 0;

    EncoderStage() = default;
    EncoderStage(Builder<T>& bl, const std::string& prefix, int n_h_, int n_o_, int dim_,
                 int heads, int ffn_dim, int n_layers)
        : n_h(n_h_), n_o(n_o_), dim(dim_) {
        pos_h = bl.store.add(prefix + ".pos_h", normal_init<T>({n_h, dim}, 0.02, bl.rng),
                             bl.group);
        pos_o = bl.store.add(prefix + ".pos_o", normal_init<T>({n_o, dim}, 0.02, bl.rng),
                             bl.group);
        for (int i = 0; i < n_layers; ++i)
            sa_layers.emplace_back(bl, prefix + ".sa" + std::to_string(i), dim, heads, ffn_dim);
        cluster = ClusteringLayer<T>(bl, prefix + ".cluster", dim);
    }

    // self-attention over [C_h; C_o; T_i]; returns (centers, image tokens)
    std::pair<Var<T>, Var<T>> run_sa_stack(GraphCtx<T>& g, const CenterState<T>& centers,
                                           const Var<T>& image_tokens) const {
        if (image_tokens->val.cols() != dim) throw ShapeError("run_sa_stack: dim mismatch");
        auto x = concat_rows<T>({centers.human, centers.object, image_tokens});
        for (const auto& layer : sa_layers) x = layer.fwd(g, x);
        const int nc = centers.n_total();
        return {slice_rows(x, 0, nc), slice_rows(x, nc, image_tokens->val.rows())};
    }

    StageOutput<T> run(GraphCtx<T>& g, const CenterState<T>& centers, const Var<T>& image_tokens,
                       T temperature, RunMode mode, std::mt19937_64& rng,
                       bool hard_assign = false) const {
        auto [c_hat, t_hat] = run_sa_stack(g, centers, image_tokens);
        auto c_upd = update_centers(c_hat, t_hat);
        auto assignment =
            cluster.gumbel_assign(g, c_upd, t_hat, temperature, mode, rng, hard_assign);
        StageOutput<T> out;
        auto grouped =
            cluster.merge_tokens(g, c_upd, t_hat, assignment, &out.degenerate_centers);
        out.grouped_human = slice_rows(grouped, 0, n_h);
        out.grouped_object = slice_rows(grouped, n_h, n_o);
        out.assignment = assignment;
        out.updated_centers = c_upd;
        return out;
    }
};

template <class T>
struct InstanceEncoder {
    EncoderStage<T> stage1, stage2;
    MixerBlock<T> mixer;
    int reduce_h = -1, reduce_o = -1;  // token-axis maps N^1 -> N^2, zero-init
    int dim = 0;
    T temperature = T(1);
    bool hard_assign = false;

    InstanceEncoder() = default;
    InstanceEncoder(Builder<T>& bl, const std::string& prefix, int n_h1, int n_o1, int n_h2,
                    int n_o2, int dim_, int heads, int ffn_dim, int layers1, int layers2)
        : dim(dim_) {
        stage1 = EncoderStage<T>(bl, prefix + ".s1", n_h1, n_o1, dim, heads, ffn_dim, layers1);
        stage2 = EncoderStage<T>(bl, prefix + ".s2", n_h2, n_o2, dim, heads, ffn_dim, layers2);
        mixer = MixerBlock<T>(bl, prefix + ".mixer", n_h1 + n_o1, dim);
        reduce_h = bl.store.add(prefix + ".reduce_h", Tensor<T>::zeros({n_h2, n_h1}), bl.group);
        reduce_o = bl.store.add(prefix + ".reduce_o", Tensor<T>::zeros({n_o2, n_o1}), bl.group);
    }

    // stage 1: centers are zeros + learned position embedding;
    // stage 2 additionally adds the MLP-Mixer propagation of the stage-1
    // updated centers, reduced per role along the token axis.
    CenterState<T> init_centers(GraphCtx<T>& g, int stage,
                                std::optional<Var<T>> prev_updated = std::nullopt) const {
        if (stage == 1) return {g.p(stage1.pos_h), g.p(stage1.pos_o), 1};
        if (stage != 2) throw ValueError("init_centers: stage must be 1 or 2");
        if (!prev_updated)
            throw MissingInputError("init_centers: stage 2 requires stage-1 updated centers");
        auto mixed = mixer.fwd(g, *prev_updated);  // [N_c^1, D]
        auto mixed_h = slice_rows(mixed, 0, stage1.n_h);
        auto mixed_o = slice_rows(mixed, stage1.n_h, stage1.n_o);
        auto prop_h = matmul(g.p(reduce_h), mixed_h);  // [N_h^2, D]
        auto prop_o = matmul(g.p(reduce_o), mixed_o);  // [N_o^2, D]
        return {add(g.p(stage2.pos_h), prop_h), add(g.p(stage2.pos_o), prop_o), 2};
    }

    std::pair<InstanceTokens<T>, EncodeDiagnostics<T>> encode(GraphCtx<T>& g,
                                                              const PatchTokenSet<T>& patches,
                                                              RunMode mode,
                                                              std::mt19937_64& rng) const {
        auto c1 = init_centers(g, 1);
        auto s1 = stage1.run(g, c1, patches.tokens, temperature, mode, rng, hard_assign);
        auto c2 = init_centers(g, 2, s1.updated_centers);
        auto t2 = concat_rows<T>({s1.grouped_human, s1.grouped_object});
        auto s2 = stage2.run(g, c2, t2, temperature, mode, rng, hard_assign);
        EncodeDiagnostics<T> diag;
        diag.assignment_stage1 = s1.assignment->val;
        diag.assignment_stage2 = s2.assignment->val;
        diag.degenerate_stage1 = s1.degenerate_centers;
        diag.degenerate_stage2 = s2.degenerate_centers;
        return {{s2.grouped_human, s2.grouped_object}, diag};
    }
};

}  // namespace ager
