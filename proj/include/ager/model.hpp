#pragma once

// Full model: stem -> two-stage instance encoder -> cue extraction and
// aggregation -> interaction decoder -> verb logits, plus the trainable
// r_vis projector and frozen text vectors used by the tokenization loss.

#include "ager/backbone.hpp"
#include "ager/config.hpp"
#include "ager/decoder.hpp"
#include "ager/encoder.hpp"
#include "ager/eval.hpp"
#include "ager/losses.hpp"
#include "ager/text_provider.hpp"

namespace ager {

template <class T>
struct ForwardPass {
    PatchTokenSet<T> patches;
    InstanceTokens<T> raw;         // encoder output (tokenization targets)
    CueBundle<T> cues;
    CueEmbeddings<T> emb;
    InstanceTokens<T> aggregated;  // decoder memory content
    InteractionQuerySet<T> queries;
    Var<T> decoded;
    Var<T> logits;                 // [N_a, V]
    Var<T> r_vis_h, r_vis_o;       // [N, d_txt]
    EncodeDiagnostics<T> diag;
};

template <class T>
class AgerModel {
  public:
    ParamStore<T> store;
    RunConfig cfg;
    LossWeights weights;

    BackboneStem<T> stem;
    InstanceEncoder<T> encoder;
    CueHead<T> cue_head;
    InteractionDecoder<T> decoder;
    Mlp<T> r_vis_proj;          // token dim -> d_txt, two FC layers
    Tensor<T> text_objects;     // [C, d_txt] frozen
    Tensor<T> text_human;       // [1, d_txt] frozen
    std::vector<std::string> class_names;

    AgerModel(const RunConfig& config, const TextProvider& provider) : cfg(config) {
        cfg.validate();
        weights.lambda = cfg.lambda;
        weights.alpha_a = cfg.alpha_a;
        weights.alpha_e = cfg.alpha_e;
        weights.alpha_t = cfg.alpha_t;
        weights.focal_alpha = cfg.focal_alpha;
        weights.focal_gamma = cfg.focal_gamma;
        weights.clamp_cos_weight = cfg.clamp_cos_weight;
        weights.metric = sim_metric_from_string(cfg.sim_metric);

        SceneConfig sc;
        sc.num_classes = cfg.num_classes;
        class_names = sc.class_names();

        Builder<T> bl(store, mix_seed(cfg.seed, fnv1a64("model-init")));
        bl.group = ParamGroup::backbone;
        stem = BackboneStem<T>(bl, "stem", cfg.dim);
        bl.group = ParamGroup::rest;
        encoder = InstanceEncoder<T>(bl, "encoder", cfg.centers_h1, cfg.centers_o1,
                                     cfg.centers_h2, cfg.centers_o2, cfg.dim, cfg.heads,
                                     cfg.dim * cfg.ffn_mult, cfg.sa_layers1, cfg.sa_layers2);
        encoder.temperature = static_cast<T>(cfg.temperature);
        encoder.hard_assign = cfg.hard_assign;

        Tensor<T> words({cfg.num_classes, cfg.d_word});
        for (int c = 0; c < cfg.num_classes; ++c) {
            auto wv = provider.word_vector(class_names[static_cast<size_t>(c)]);
            if (static_cast<int>(wv.size()) != cfg.d_word)
                throw ProviderError("word vector dimension mismatch");
            for (int d = 0; d < cfg.d_word; ++d) words.at(c, d) = static_cast<T>(wv[static_cast<size_t>(d)]);
        }
        cue_head = CueHead<T>(bl, "cues", cfg.dim, cfg.num_classes, cfg.d_pos, cfg.d_spa,
                              cfg.d_cls, std::move(words));
        decoder = InteractionDecoder<T>(bl, "decoder", cfg.centers_h2, cfg.centers_o2,
                                        cfg.patterns, cfg.dim, cfg.heads,
                                        cfg.dim * cfg.ffn_mult, cfg.decoder_layers,
                                        cfg.num_verbs, cfg.separate_query_pos);
        r_vis_proj = Mlp<T>(bl, "text_head.r_vis", cfg.dim, cfg.d_txt, cfg.d_txt, 2);

        text_objects = Tensor<T>({cfg.num_classes, cfg.d_txt});
        for (int c = 0; c < cfg.num_classes; ++c) {
            auto e = provider.embed(TextProvider::prompt(class_names[static_cast<size_t>(c)]));
            for (int d = 0; d < cfg.d_txt; ++d)
                text_objects.at(c, d) = static_cast<T>(e.vector[static_cast<size_t>(d)]);
        }
        text_human = Tensor<T>({1, cfg.d_txt});
        auto eh = provider.embed(TextProvider::prompt("human"));
        for (int d = 0; d < cfg.d_txt; ++d) text_human.at(0, d) = static_cast<T>(eh.vector[static_cast<size_t>(d)]);
    }

    ForwardPass<T> forward(GraphCtx<T>& g, const Tensor<T>& raster, RunMode mode,
                           std::mt19937_64& rng, const GateOverride* frozen_gates = nullptr) const {
        ForwardPass<T> f;
        f.patches = stem.tokenize(g, constant(raster));
        auto [tokens, diag] = encoder.encode(g, f.patches, mode, rng);
        f.raw = tokens;
        f.diag = diag;
        f.cues = cue_head.extract_cues(g, f.raw);
        f.emb = cue_head.gate_and_embed(g, f.cues, static_cast<T>(cfg.gate_threshold),
                                        cfg.cue_switch, frozen_gates);
        f.aggregated = cue_head.aggregate(g, f.raw, f.emb);
        f.queries = decoder.build_queries(g);
        auto mem = decoder.memory(g, f.aggregated);
        f.decoded = decoder.decode(g, f.queries.queries, mem);
        f.logits = decoder.classify(g, f.decoded);
        f.r_vis_h = r_vis_proj.fwd(g, f.raw.human);
        f.r_vis_o = r_vis_proj.fwd(g, f.raw.object);
        return f;
    }

    RoleLossInputs<T> human_inputs(const ForwardPass<T>& f, const SceneSample& gt) const {
        RoleLossInputs<T> in;
        in.probs = f.cues.human_class;
        in.r_vis = f.r_vis_h;
        in.text = &text_human;
        in.gt_class.assign(gt.humans.size(), 0);
        in.no_class_index = 1;
        return in;
    }

    RoleLossInputs<T> object_inputs(const ForwardPass<T>& f, const SceneSample& gt) const {
        RoleLossInputs<T> in;
        in.probs = f.cues.object_class;
        in.r_vis = f.r_vis_o;
        in.text = &text_objects;
        for (const auto& o : gt.objects) in.gt_class.push_back(o.class_id);
        in.no_class_index = cfg.num_classes;
        return in;
    }

    LossBreakdown<T> loss(GraphCtx<T>& g, const ForwardPass<T>& f, const SceneSample& gt,
                          const LossSnapshot* frozen = nullptr,
                          LossSnapshot* capture = nullptr) const {
        if (static_cast<int>(gt.humans.size()) > cfg.centers_h2 ||
            static_cast<int>(gt.objects.size()) > cfg.centers_o2)
            throw DatasetError("scene has more instances than prediction slots");

        auto in_h = human_inputs(f, gt);
        auto in_o = object_inputs(f, gt);

        std::vector<int> sigma_h, sigma_o;
        if (frozen && frozen->valid) {
            sigma_h = frozen->sigma_h;
            sigma_o = frozen->sigma_o;
        } else {
            sigma_h = match_role(in_h, weights.metric).sigma;
            sigma_o = match_role(in_o, weights.metric).sigma;
        }

        LossBreakdown<T> out;
        const std::vector<double>* fy_h = frozen && frozen->valid ? &frozen->sg_y_h : nullptr;
        const std::vector<double>* fc_h = frozen && frozen->valid ? &frozen->sg_cos_h : nullptr;
        const std::vector<double>* fy_o = frozen && frozen->valid ? &frozen->sg_y_o : nullptr;
        const std::vector<double>* fc_o = frozen && frozen->valid ? &frozen->sg_cos_o : nullptr;

        auto pos_h = loss_t_positive(g, in_h, sigma_h, weights, fy_h, fc_h,
                                     capture ? &capture->sg_y_h : nullptr,
                                     capture ? &capture->sg_cos_h : nullptr);
        auto neg_h = loss_t_negative(g, in_h, sigma_h);
        auto pos_o = loss_t_positive(g, in_o, sigma_o, weights, fy_o, fc_o,
                                     capture ? &capture->sg_y_o : nullptr,
                                     capture ? &capture->sg_cos_o : nullptr);
        auto neg_o = loss_t_negative(g, in_o, sigma_o);

        const T lam = static_cast<T>(weights.lambda);
        auto l_t = add(add(scale(pos_h, lam), scale(neg_h, T(1) - lam)),
                       add(scale(pos_o, lam), scale(neg_o, T(1) - lam)));

        auto l_e = loss_cues(g, f.cues, sigma_h, sigma_o, gt);

        Tensor<T> targets;
        if (frozen && frozen->valid) {
            targets = frozen->targets.template cast<T>();
        } else {
            int warnings = 0;
            targets = assign_interaction_targets(f.queries.index_map, sigma_h, sigma_o,
                                                 gt.interactions, f.logits->val, cfg.num_verbs,
                                                 weights.focal_alpha, weights.focal_gamma,
                                                 &warnings);
            out.capacity_warnings = warnings;
        }
        auto l_a = loss_interactions(f.logits, targets, weights.focal_alpha,
                                     weights.focal_gamma);

        out.l_t_pos_h = pos_h->val[0];
        out.l_t_neg_h = neg_h->val[0];
        out.l_t_pos_o = pos_o->val[0];
        out.l_t_neg_o = neg_o->val[0];
        out.l_t = l_t->val[0];
        out.l_e = l_e->val[0];
        out.l_a = l_a->val[0];
        out.total_var = add(add(scale(l_a, static_cast<T>(weights.alpha_a)),
                                scale(l_e, static_cast<T>(weights.alpha_e))),
                            scale(l_t, static_cast<T>(weights.alpha_t)));
        out.total = out.total_var->val[0];

        if (capture) {
            capture->valid = true;
            capture->gates.gate_h = f.emb.gate_h;
            capture->gates.gate_o = f.emb.gate_o;
            capture->gates.chosen_class = f.emb.chosen_class;
            capture->sigma_h = sigma_h;
            capture->sigma_o = sigma_o;
            capture->n_gt_h = static_cast<int>(gt.humans.size());
            capture->n_gt_o = static_cast<int>(gt.objects.size());
            capture->targets = targets.template cast<double>();
        }
        return out;
    }

    // Eval-side prediction extraction (values only, no gradients).
    void extract_predictions(const ForwardPass<T>& f, int scene_id,
                             std::vector<DetectionPrediction>& dets,
                             std::vector<HoiPrediction>& hois) const {
        const int n_h = cfg.centers_h2, n_o = cfg.centers_o2;
        auto box_of = [](const Tensor<T>& rows, int i) {
            return Box{static_cast<double>(rows.at(i, 0)), static_cast<double>(rows.at(i, 1)),
                       static_cast<double>(rows.at(i, 2)), static_cast<double>(rows.at(i, 3))};
        };
        std::vector<double> conf_h(static_cast<size_t>(n_h));
        std::vector<double> conf_o(static_cast<size_t>(n_o));
        std::vector<int> cls_o(static_cast<size_t>(n_o));
        for (int i = 0; i < n_h; ++i) {
            conf_h[static_cast<size_t>(i)] = static_cast<double>(f.cues.human_class->val.at(i, 0));
            dets.push_back({scene_id, cfg.num_classes,  // humans use class id C
                            conf_h[static_cast<size_t>(i)], box_of(f.cues.human_boxes->val, i)});
        }
        for (int j = 0; j < n_o; ++j) {
            double best = -1;
            int best_c = 0;
            for (int c = 0; c < cfg.num_classes; ++c)
                if (static_cast<double>(f.cues.object_class->val.at(j, c)) > best) {
                    best = static_cast<double>(f.cues.object_class->val.at(j, c));
                    best_c = c;
                }
            conf_o[static_cast<size_t>(j)] = best;
            cls_o[static_cast<size_t>(j)] = best_c;
            dets.push_back({scene_id, best_c, best, box_of(f.cues.object_boxes->val, j)});
        }
        const auto& map = f.queries.index_map;
        for (int q = 0; q < map.size(); ++q) {
            const auto t = map.triple(q);
            for (int v = 0; v < cfg.num_verbs; ++v) {
                const double sv =
                    1.0 / (1.0 + std::exp(-static_cast<double>(f.logits->val.at(q, v))));
                const double score = sv * conf_h[static_cast<size_t>(t.human)] *
                                     conf_o[static_cast<size_t>(t.object)];
                hois.push_back({scene_id, v, score, box_of(f.cues.human_boxes->val, t.human),
                                box_of(f.cues.object_boxes->val, t.object)});
            }
        }
    }
};

}  // namespace ager
