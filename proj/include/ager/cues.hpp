#pragma once

// Cue extraction and aggregation. Lightweight MLPs read pose keypoints,
// boxes and class distributions off the instance tokens; cue embeddings are
// gated by classification confidence (the cue switch) and concatenated back
// into the tokens through a learned projection.

#include "ager/encoder.hpp"
#include "ager/scenes.hpp"

namespace ager {

template <class T>
struct CueBundle {
    Var<T> keypoints;     // [N_h, 17*2], sigmoid-normalized
    Var<T> human_boxes;   // [N_h, 4] (cx, cy, w, h)
    Var<T> object_boxes;  // [N_o, 4]
    Var<T> human_class;   // [N_h, 2] probabilities; index 1 = no-human
    Var<T> object_class;  // [N_o, C+1] probabilities; index C = no-object
};

template <class T>
struct CueEmbeddings {
    Var<T> e_pos;    // [N_h, d_pos]
    Var<T> e_h_spa;  // [N_h, d_spa]
    Var<T> e_o_spa;  // [N_o, d_spa]
    Var<T> e_cls;    // [N_o, d_cls]
    std::vector<char> gate_h, gate_o;  // gates actually applied
    std::vector<int> chosen_class;     // argmax real class per object slot
};

// Frozen gate/argmax decisions, used to evaluate the loss as a function of
// the parameters with the discrete choices held fixed.
struct GateOverride {
    std::vector<char> gate_h, gate_o;
    std::vector<int> chosen_class;
};

template <class T>
struct CueHead {
    Mlp<T> pose_head;          // 5-layer, humans only
    Mlp<T> box_head;           // 3-layer, shared by both roles
    Linear<T> cls_h, cls_o;    // 1-layer FFN + softmax
    Mlp<T> embed_pose, embed_hspa, embed_ospa, embed_cls;  // 2-FC cue projectors
    Linear<T> agg_h, agg_o;    // [D+d_pos+d_spa] -> D and [D+d_cls+d_spa] -> D
    Tensor<T> word_table;      // [C, d_word] frozen text word vectors
    int num_classes = 0;

    CueHead() = default;
    CueHead(Builder<T>& bl, const std::string& prefix, int dim, int num_classes_, int d_pos,
            int d_spa, int d_cls, Tensor<T> word_vectors)
        : word_table(std::move(word_vectors)), num_classes(num_classes_) {
        pose_head = Mlp<T>(bl, prefix + ".pose", dim, dim, kNumKeypoints * 2, 5);
        box_head = Mlp<T>(bl, prefix + ".box", dim, dim, 4, 3);
        cls_h = Linear<T>(bl, prefix + ".cls_h", dim, 2);
        cls_o = Linear<T>(bl, prefix + ".cls_o", dim, num_classes + 1);
        embed_pose = Mlp<T>(bl, prefix + ".e_pos", kNumKeypoints * 2, d_pos, d_pos, 2);
        embed_hspa = Mlp<T>(bl, prefix + ".e_hspa", 4, d_spa, d_spa, 2);
        embed_ospa = Mlp<T>(bl, prefix + ".e_ospa", 4, d_spa, d_spa, 2);
        embed_cls = Mlp<T>(bl, prefix + ".e_cls", word_table.cols(), d_cls, d_cls, 2);
        agg_h = Linear<T>(bl, prefix + ".agg_h", dim + d_pos + d_spa, dim);
        agg_o = Linear<T>(bl, prefix + ".agg_o", dim + d_cls + d_spa, dim);
    }

    CueBundle<T> extract_cues(GraphCtx<T>& g, const InstanceTokens<T>& tokens) const {
        CueBundle<T> b;
        b.keypoints = sigmoid(pose_head.fwd(g, tokens.human));
        b.human_boxes = sigmoid(box_head.fwd(g, tokens.human));
        b.object_boxes = sigmoid(box_head.fwd(g, tokens.object));
        b.human_class = softmax_rows(cls_h.fwd(g, tokens.human));
        b.object_class = softmax_rows(cls_o.fwd(g, tokens.object));
        return b;
    }

    // gate = (max real-class probability > threshold); gated-out instances
    // get exactly-zero embedding rows. cue_switch=false keeps everything.
    CueEmbeddings<T> gate_and_embed(GraphCtx<T>& g, const CueBundle<T>& bundle, T threshold,
                                    bool cue_switch = true,
                                    const GateOverride* frozen = nullptr) const {
        if (!(threshold >= T(0) && threshold < T(1)))
            throw ValueError("gate_and_embed: threshold must be in [0,1)");
        const int n_h = bundle.human_class->val.rows();
        const int n_o = bundle.object_class->val.rows();
        CueEmbeddings<T> e;
        if (frozen) {
            e.gate_h = frozen->gate_h;
            e.gate_o = frozen->gate_o;
            e.chosen_class = frozen->chosen_class;
        } else {
            e.gate_h.resize(static_cast<size_t>(n_h));
            for (int i = 0; i < n_h; ++i)
                e.gate_h[static_cast<size_t>(i)] =
                    !cue_switch || bundle.human_class->val.at(i, 0) > threshold;
            e.gate_o.resize(static_cast<size_t>(n_o));
            e.chosen_class.resize(static_cast<size_t>(n_o));
            for (int i = 0; i < n_o; ++i) {
                T best = bundle.object_class->val.at(i, 0);
                int best_c = 0;
                for (int c = 1; c < num_classes; ++c)
                    if (bundle.object_class->val.at(i, c) > best) {
                        best = bundle.object_class->val.at(i, c);
                        best_c = c;
                    }
                e.chosen_class[static_cast<size_t>(i)] = best_c;
                e.gate_o[static_cast<size_t>(i)] = !cue_switch || best > threshold;
            }
        }
        Tensor<T> mask_h({n_h, 1}), mask_o({n_o, 1});
        for (int i = 0; i < n_h; ++i) mask_h.at(i, 0) = e.gate_h[static_cast<size_t>(i)] ? T(1) : T(0);
        for (int i = 0; i < n_o; ++i) mask_o.at(i, 0) = e.gate_o[static_cast<size_t>(i)] ? T(1) : T(0);
        auto mh = constant(std::move(mask_h));
        auto mo = constant(std::move(mask_o));

        // predicted-class word vectors are constants: only the projector trains
        Tensor<T> words({n_o, word_table.cols()});
        for (int i = 0; i < n_o; ++i)
            words.mat().row(i) = word_table.mat().row(e.chosen_class[static_cast<size_t>(i)]);

        e.e_pos = mul_cols(embed_pose.fwd(g, bundle.keypoints), mh);
        e.e_h_spa = mul_cols(embed_hspa.fwd(g, bundle.human_boxes), mh);
        e.e_o_spa = mul_cols(embed_ospa.fwd(g, bundle.object_boxes), mo);
        e.e_cls = mul_cols(embed_cls.fwd(g, constant(std::move(words))), mo);
        return e;
    }

    InstanceTokens<T> aggregate(GraphCtx<T>& g, const InstanceTokens<T>& tokens,
                                const CueEmbeddings<T>& emb) const {
        auto h = agg_h.fwd(g, concat_cols<T>({tokens.human, emb.e_pos, emb.e_h_spa}));
        auto o = agg_o.fwd(g, concat_cols<T>({tokens.object, emb.e_cls, emb.e_o_spa}));
        return {h, o};
    }
};

}  // namespace ager
