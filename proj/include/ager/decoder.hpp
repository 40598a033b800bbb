#pragma once

// Interaction decoder. All human-object pairs are enumerated as queries,
// N_pattern position offsets per pair; the query position for (p, i, j) is
// p_h^i + p_o^j + p_pattern^p, the content starts at zero. Three decoder
// layers attend over the 12 cue-aggregated instance tokens, then a single
// linear layer scores every verb.

#include "ager/cues.hpp"

namespace ager {

struct InteractionIndexMap {
    int n_pattern = 0, n_h = 0, n_o = 0;

    int size() const { return n_pattern * n_h * n_o; }
    // lexicographic (pattern, human, object)
    int query_index(int p, int i, int j) const { return (p * n_h + i) * n_o + j; }
    struct Triple {
        int pattern, human, object;
    };
    Triple triple(int q) const {
        return {q / (n_h * n_o), (q / n_o) % n_h, q % n_o};
    }
};

template <class T>
struct InteractionQuerySet {
    Var<T> queries;  // [N_a, D]
    InteractionIndexMap index_map;
};

template <class T>
struct InteractionDecoder {
    int pos_h = -1, pos_o = -1, pos_pattern = -1;
    int qpos_h = -1, qpos_o = -1;  // separate query tables (ablation), else shared
    std::vector<DecoderLayer<T>> layers;
    Linear<T> verb_head;
    InteractionIndexMap map;
    bool separate_query_pos = false;

    InteractionDecoder() = default;
    InteractionDecoder(Builder<T>& bl, const std::string& prefix, int n_h, int n_o,
                       int n_pattern, int dim, int heads, int ffn_dim, int n_layers,
                       int n_verbs, bool separate_query_pos_ = false)
        : map{n_pattern, n_h, n_o}, separate_query_pos(separate_query_pos_) {
        pos_h = bl.store.add(prefix + ".pos_h", normal_init<T>({n_h, dim}, 0.02, bl.rng),
                             bl.group);
        pos_o = bl.store.add(prefix + ".pos_o", normal_init<T>({n_o, dim}, 0.02, bl.rng),
                             bl.group);
        pos_pattern = bl.store.add(prefix + ".pos_pattern",
                                   normal_init<T>({n_pattern, dim}, 0.02, bl.rng), bl.group);
        if (separate_query_pos) {
            qpos_h = bl.store.add(prefix + ".qpos_h", normal_init<T>({n_h, dim}, 0.02, bl.rng),
                                  bl.group);
            qpos_o = bl.store.add(prefix + ".qpos_o", normal_init<T>({n_o, dim}, 0.02, bl.rng),
                                  bl.group);
        }
        for (int i = 0; i < n_layers; ++i)
            layers.emplace_back(bl, prefix + ".layer" + std::to_string(i), dim, heads, ffn_dim);
        verb_head = Linear<T>(bl, prefix + ".verb", dim, n_verbs);
    }

    InteractionQuerySet<T> build_queries(GraphCtx<T>& g) const {
        std::vector<int> hi, oi, pi;
        hi.reserve(static_cast<size_t>(map.size()));
        for (int p = 0; p < map.n_pattern; ++p)
            for (int i = 0; i < map.n_h; ++i)
                for (int j = 0; j < map.n_o; ++j) {
                    pi.push_back(p);
                    hi.push_back(i);
                    oi.push_back(j);
                }
        auto ph = g.p(separate_query_pos ? qpos_h : pos_h);
        auto po = g.p(separate_query_pos ? qpos_o : pos_o);
        auto pos = add(add(gather_rows(ph, hi), gather_rows(po, oi)),
                       gather_rows(g.p(pos_pattern), pi));
        return {pos, map};
    }

    // memory = [T_h + P_h ; T_o + P_o]
    Var<T> memory(GraphCtx<T>& g, const InstanceTokens<T>& tokens) const {
        auto th = add(tokens.human, g.p(pos_h));
        auto to = add(tokens.object, g.p(pos_o));
        return concat_rows<T>({th, to});
    }

    Var<T> decode(GraphCtx<T>& g, Var<T> queries, const Var<T>& mem) const {
        for (const auto& layer : layers) queries = layer.fwd(g, queries, mem);
        return queries;
    }

    Var<T> classify(GraphCtx<T>& g, const Var<T>& decoded) const {
        return verb_head.fwd(g, decoded);
    }
};

}  // namespace ager
