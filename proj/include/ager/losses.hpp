#pragma once

// Training objective: text-guided similarity metric, Hungarian instance
// matching (ground truths padded with "nothing"), positive/negative
// tokenization losses with stop-gradient weights, L2 cue loss, sigmoid
// focal interaction loss, and the weighted total.
//
// Discrete decisions (matching, target assignment, gates, the stop-gradient
// weight values) can be captured into a LossSnapshot and replayed, which
// evaluates the loss as a function of the parameters with those decisions
// held constant — the function finite differences must probe.

#include "ager/cues.hpp"
#include "ager/decoder.hpp"
#include "ager/errors.hpp"
#include "ager/hungarian.hpp"
#include "ager/scenes.hpp"

#include <optional>

namespace ager {

enum class SimMetric { weighted, ce, cosine, ce_plus_cos };

inline SimMetric sim_metric_from_string(const std::string& s) {
    if (s == "weighted") return SimMetric::weighted;
    if (s == "ce") return SimMetric::ce;
    if (s == "cos") return SimMetric::cosine;
    if (s == "ce_plus_cos") return SimMetric::ce_plus_cos;
    throw ConfigError("unknown sim_metric: " + s);
}

struct LossSnapshot {
    bool valid = false;
    GateOverride gates;
    std::vector<int> sigma_h, sigma_o;
    int n_gt_h = 0, n_gt_o = 0;
    Tensor<double> targets;  // [N_a, V]
    std::vector<double> sg_y_h, sg_cos_h, sg_y_o, sg_cos_o;
};

template <class T>
struct LossBreakdown {
    double l_a = 0, l_e = 0;
    double l_t_pos_h = 0, l_t_neg_h = 0, l_t_pos_o = 0, l_t_neg_o = 0, l_t = 0;
    double total = 0;
    Var<T> total_var;
    int capacity_warnings = 0;
};

struct LossWeights {
    double lambda = 0.75;
    double alpha_a = 2.5, alpha_e = 1.0, alpha_t = 1.5;
    double focal_alpha = 0.25, focal_gamma = 2.0;
    bool clamp_cos_weight = true;
    SimMetric metric = SimMetric::weighted;
};

// Eq.-style single-pair similarity: class probability times cosine.
// Throws if either representation has an exactly zero norm.
inline double similarity(int gt_class, int pred, const Tensor<double>& class_probs,
                         const Tensor<double>& r_vis, const Tensor<double>& r_txt) {
    double nv = 0, nt = 0, dot = 0;
    for (int d = 0; d < r_vis.cols(); ++d) {
        const double a = r_vis.at(pred, d), b = r_txt.at(gt_class, d);
        nv += a * a;
        nt += b * b;
        dot += a * b;
    }
    if (nv == 0.0 || nt == 0.0) throw ZeroVectorError("similarity: zero-norm representation");
    return class_probs.at(pred, gt_class) * dot / (std::sqrt(nv) * std::sqrt(nt));
}

// ------------------------------------------------------------ role inputs

template <class T>
struct RoleLossInputs {
    Var<T> probs;        // [N_pred, C+1]; last column is "nothing"
    Var<T> r_vis;        // [N_pred, d_txt]
    const Tensor<T>* text = nullptr;  // [C_real, d_txt], frozen, unit rows
    std::vector<int> gt_class;        // class per real ground truth
    int no_class_index = 0;
};

template <class T>
MatchAssignment match_role(const RoleLossInputs<T>& in, SimMetric metric) {
    const int n = in.probs->val.rows();
    const int n_real = static_cast<int>(in.gt_class.size());
    std::vector<double> sim(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n_real; ++i) {
        const int c = in.gt_class[static_cast<size_t>(i)];
        for (int k = 0; k < n; ++k) {
            const double y = static_cast<double>(in.probs->val.at(k, c));
            double dot = 0, nv = 0;
            for (int d = 0; d < in.r_vis->val.cols(); ++d) {
                const double a = static_cast<double>(in.r_vis->val.at(k, d));
                dot += a * static_cast<double>(in.text->at(c, d));
                nv += a * a;
            }
            const double cosine = dot / std::max(std::sqrt(nv), 1e-12);
            double s = 0;
            switch (metric) {
                case SimMetric::weighted: s = y * cosine; break;
                case SimMetric::ce: s = y; break;
                case SimMetric::cosine: s = cosine; break;
                case SimMetric::ce_plus_cos: s = y + cosine; break;
            }
            sim[static_cast<size_t>(i) * n + k] = s;
        }
    }
    return hungarian_match(sim, n, n_real);
}

// The two stop-gradient-weighted terms of the positive objective:
//   cos_term = sum_i sg(y_i) * (-cos_i)      (trains the representation)
//   ce_term  = sum_i sg(cos_i) * (-log y_i)  (trains the classifier)
template <class T>
struct PositiveTerms {
    Var<T> cos_term, ce_term;
};

// positive loss over real ground truths; sg weights read from / written to
// the snapshot vectors
template <class T>
Var<T> loss_t_positive(GraphCtx<T>& g, const RoleLossInputs<T>& in,
                       const std::vector<int>& sigma, const LossWeights& w,
                       const std::vector<double>* frozen_sg_y = nullptr,
                       const std::vector<double>* frozen_sg_cos = nullptr,
                       std::vector<double>* capture_sg_y = nullptr,
                       std::vector<double>* capture_sg_cos = nullptr,
                       PositiveTerms<T>* terms_out = nullptr) {
    const int m = static_cast<int>(in.gt_class.size());
    if (m == 0) return constant(Tensor<T>::scalar(T(0)));
    std::vector<int> pred_idx(static_cast<size_t>(m));
    std::vector<int> text_idx(static_cast<size_t>(m));
    std::vector<std::pair<int, int>> prob_rc(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        pred_idx[static_cast<size_t>(i)] = sigma[static_cast<size_t>(i)];
        text_idx[static_cast<size_t>(i)] = in.gt_class[static_cast<size_t>(i)];
        prob_rc[static_cast<size_t>(i)] = {sigma[static_cast<size_t>(i)],
                                           in.gt_class[static_cast<size_t>(i)]};
    }
    auto r = gather_rows(in.r_vis, pred_idx);  // [m, d]
    Tensor<T> tc({m, in.text->cols()});
    for (int i = 0; i < m; ++i)
        tc.mat().row(i) = in.text->mat().row(text_idx[static_cast<size_t>(i)]);
    auto text_rows = constant(std::move(tc));
    auto norms = clamp_min(sqrt_op(row_dot(r, r)), T(1e-12));  // text rows are unit
    auto cosine = div(row_dot(r, text_rows), norms);           // [m, 1]
    auto y = select_entries(in.probs, prob_rc);                // [m, 1]
    auto log_y = log_op(clamp_min(y, T(1e-12)));

    switch (w.metric) {
        case SimMetric::ce: return neg(sum_all(log_y));
        case SimMetric::cosine: return neg(sum_all(cosine));
        case SimMetric::ce_plus_cos: return neg(add(sum_all(cosine), sum_all(log_y)));
        case SimMetric::weighted: break;
    }
    Tensor<T> sg_y({m, 1}), sg_cos({m, 1});
    for (int i = 0; i < m; ++i) {
        const double yv = frozen_sg_y ? (*frozen_sg_y)[static_cast<size_t>(i)]
                                      : static_cast<double>(y->val.at(i, 0));
        double cv = frozen_sg_cos ? (*frozen_sg_cos)[static_cast<size_t>(i)]
                                  : static_cast<double>(cosine->val.at(i, 0));
        if (!frozen_sg_cos && w.clamp_cos_weight) cv = std::clamp(cv, 0.0, 1.0);
        sg_y.at(i, 0) = static_cast<T>(yv);
        sg_cos.at(i, 0) = static_cast<T>(cv);
        if (capture_sg_y) capture_sg_y->push_back(yv);
        if (capture_sg_cos) capture_sg_cos->push_back(cv);
    }
    auto term_cos = sum_all(mul(constant(std::move(sg_y)), neg(cosine)));
    auto term_ce = sum_all(mul(constant(std::move(sg_cos)), neg(log_y)));
    if (terms_out) *terms_out = {term_cos, term_ce};
    return add(term_cos, term_ce);
}

inline double weighted_total(const LossWeights& w, double l_a, double l_e, double l_t) {
    return w.alpha_a * l_a + w.alpha_e * l_e + w.alpha_t * l_t;
}

template <class T>
Var<T> loss_t_negative(GraphCtx<T>& g, const RoleLossInputs<T>& in,
                       const std::vector<int>& sigma) {
    (void)g;
    const int n = in.probs->val.rows();
    const int n_real = static_cast<int>(in.gt_class.size());
    if (n_real >= n) return constant(Tensor<T>::scalar(T(0)));
    std::vector<std::pair<int, int>> rc;
    for (int i = n_real; i < n; ++i)
        rc.push_back({sigma[static_cast<size_t>(i)], in.no_class_index});
    auto y = select_entries(in.probs, rc);
    return neg(sum_all(log_op(clamp_min(y, T(1e-12)))));
}

// L2 cue loss: mean squared error over matched boxes (both roles) plus
// matched human keypoints; invisible keypoints are masked out. Category
// recognition is optimized by the tokenization loss, not here.
template <class T>
Var<T> loss_cues(GraphCtx<T>& g, const CueBundle<T>& bundle, const std::vector<int>& sigma_h,
                 const std::vector<int>& sigma_o, const SceneSample& gt) {
    (void)g;
    const int n_h = static_cast<int>(gt.humans.size());
    const int n_o = static_cast<int>(gt.objects.size());
    std::vector<Var<T>> parts;
    // boxes, both roles
    {
        std::vector<Var<T>> preds;
        Tensor<T> target({n_h + n_o, 4});
        std::vector<int> idx_h, idx_o;
        for (int i = 0; i < n_h; ++i) {
            idx_h.push_back(sigma_h[static_cast<size_t>(i)]);
            const Box& b = gt.humans[static_cast<size_t>(i)].box;
            target.at(i, 0) = static_cast<T>(b.cx);
            target.at(i, 1) = static_cast<T>(b.cy);
            target.at(i, 2) = static_cast<T>(b.w);
            target.at(i, 3) = static_cast<T>(b.h);
        }
        for (int i = 0; i < n_o; ++i) {
            idx_o.push_back(sigma_o[static_cast<size_t>(i)]);
            const Box& b = gt.objects[static_cast<size_t>(i)].box;
            target.at(n_h + i, 0) = static_cast<T>(b.cx);
            target.at(n_h + i, 1) = static_cast<T>(b.cy);
            target.at(n_h + i, 2) = static_cast<T>(b.w);
            target.at(n_h + i, 3) = static_cast<T>(b.h);
        }
        if (n_h + n_o > 0) {
            if (!idx_h.empty()) preds.push_back(gather_rows(bundle.human_boxes, idx_h));
            if (!idx_o.empty()) preds.push_back(gather_rows(bundle.object_boxes, idx_o));
            auto diff = sub(preds.size() == 1 ? preds[0] : concat_rows<T>(preds),
                            constant(std::move(target)));
            parts.push_back(mean_all(mul(diff, diff)));
        }
    }
    // keypoints, matched humans only, visibility-masked
    if (n_h > 0) {
        std::vector<int> idx_h;
        Tensor<T> target({n_h, kNumKeypoints * 2});
        Tensor<T> mask({n_h, kNumKeypoints * 2});
        double mask_count = 0;
        for (int i = 0; i < n_h; ++i) {
            idx_h.push_back(sigma_h[static_cast<size_t>(i)]);
            const auto& hum = gt.humans[static_cast<size_t>(i)];
            for (int k = 0; k < kNumKeypoints; ++k) {
                const T vis = hum.visibility[static_cast<size_t>(k)] ? T(1) : T(0);
                target.at(i, 2 * k) = static_cast<T>(hum.keypoints[static_cast<size_t>(k)][0]);
                target.at(i, 2 * k + 1) = static_cast<T>(hum.keypoints[static_cast<size_t>(k)][1]);
                mask.at(i, 2 * k) = vis;
                mask.at(i, 2 * k + 1) = vis;
                mask_count += 2.0 * static_cast<double>(vis);
            }
        }
        auto diff = mul(sub(gather_rows(bundle.keypoints, idx_h), constant(std::move(target))),
                        constant(std::move(mask)));
        parts.push_back(scale(sum_all(mul(diff, diff)),
                              static_cast<T>(1.0 / std::max(1.0, mask_count))));
    }
    if (parts.empty()) return constant(Tensor<T>::scalar(T(0)));
    auto out = parts[0];
    for (size_t i = 1; i < parts.size(); ++i) out = add(out, parts[i]);
    return out;
}

// sigmoid focal loss, mean-normalized by the number of positive targets
// (floor 1). Positives weigh alpha*(1-p)^gamma, negatives p^gamma.
template <class T>
Var<T> loss_interactions(const Var<T>& logits, const Tensor<T>& targets, double alpha,
                         double gamma) {
    if (logits->val.shape != targets.shape)
        throw ShapeError("loss_interactions: target shape mismatch");
    double n_pos = 0;
    for (int64_t i = 0; i < targets.numel(); ++i) n_pos += static_cast<double>(targets[i]);
    auto t = constant(targets.clone());
    auto one = constant(Tensor<T>::full(targets.shape, T(1)));
    auto p = sigmoid(logits);
    auto omp = sub(one, p);
    auto log_p = log_op(clamp_min(p, T(1e-12)));
    auto log_omp = log_op(clamp_min(omp, T(1e-12)));
    auto pos = scale(mul(pow_const(omp, static_cast<T>(gamma)), neg(log_p)),
                     static_cast<T>(alpha));
    auto negv = mul(pow_const(p, static_cast<T>(gamma)), neg(log_omp));
    auto elem = add(mul(t, pos), mul(sub(one, t), negv));
    return scale(sum_all(elem), static_cast<T>(1.0 / std::max(1.0, n_pos)));
}

namespace detail {
inline double focal_row_cost(const double* logits, int n_verbs, int pos_verb, double alpha,
                             double gamma) {
    double cost = 0;
    for (int v = 0; v < n_verbs; ++v) {
        const double p = 1.0 / (1.0 + std::exp(-logits[v]));
        if (v == pos_verb)
            cost += alpha * std::pow(1.0 - p, gamma) * -std::log(std::max(p, 1e-12));
        else
            cost += std::pow(p, gamma) * -std::log(std::max(1.0 - p, 1e-12));
    }
    return cost;
}
}  // namespace detail

// Build per-query multi-hot verb targets. Each ground-truth interaction maps
// to the pattern queries of its matched (human, object) pair; verbs are
// spread over patterns by minimum focal cost. Excess verbs (|V| > patterns)
// fold into the last assigned pattern and bump the warning counter.
template <class T>
Tensor<T> assign_interaction_targets(const InteractionIndexMap& map,
                                     const std::vector<int>& sigma_h,
                                     const std::vector<int>& sigma_o,
                                     const std::vector<InteractionGt>& interactions,
                                     const Tensor<T>& logit_values, int n_verbs, double alpha,
                                     double gamma, int* capacity_warnings = nullptr) {
    Tensor<T> targets({map.size(), n_verbs});
    for (const auto& inter : interactions) {
        const int i = sigma_h[static_cast<size_t>(inter.human_idx)];
        const int j = sigma_o[static_cast<size_t>(inter.object_idx)];
        std::vector<int> verbs(inter.verbs.begin(), inter.verbs.end());
        std::vector<int> extra;
        if (static_cast<int>(verbs.size()) > map.n_pattern) {
            if (capacity_warnings) ++*capacity_warnings;
            extra.assign(verbs.begin() + map.n_pattern, verbs.end());
            verbs.resize(static_cast<size_t>(map.n_pattern));
        }
        const int np = map.n_pattern;
        // pattern <- verb assignment by minimum focal cost; pad rows are free
        std::vector<double> gain(static_cast<size_t>(np) * np, 0.0);
        for (int vi = 0; vi < static_cast<int>(verbs.size()); ++vi)
            for (int p = 0; p < np; ++p) {
                const int q = map.query_index(p, i, j);
                gain[static_cast<size_t>(vi) * np + p] = -detail::focal_row_cost(
                    logit_values.data() + static_cast<int64_t>(q) * n_verbs, n_verbs,
                    verbs[static_cast<size_t>(vi)], alpha, gamma);
            }
        auto sigma_p = hungarian_max(gain, np);
        int last_pattern = 0;
        for (int vi = 0; vi < static_cast<int>(verbs.size()); ++vi) {
            const int p = sigma_p[static_cast<size_t>(vi)];
            targets.at(map.query_index(p, i, j), verbs[static_cast<size_t>(vi)]) = T(1);
            last_pattern = p;
        }
        for (int v : extra) targets.at(map.query_index(last_pattern, i, j), v) = T(1);
    }
    return targets;
}

}  // namespace ager
