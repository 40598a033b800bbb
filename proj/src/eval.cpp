#include "ager/eval.hpp"

#include <algorithm>
#include <cmath>

namespace ager {

namespace {

// Shared AP machinery over generic matchable entries. A prediction is a
// true positive iff its IoU score against an unclaimed ground truth of the
// same class exceeds the threshold; among candidates it claims the one with
// the highest match quality (lowest index on ties).
struct RankedPred {
    double score;
    int scene;
    int order;  // original index, for deterministic tie-breaking
    size_t idx;
};

template <class MatchQuality>
double average_precision(std::vector<RankedPred>& preds, int n_gt, MatchQuality&& quality) {
    if (n_gt == 0) return 0.0;
    std::sort(preds.begin(), preds.end(), [](const RankedPred& a, const RankedPred& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.scene != b.scene) return a.scene < b.scene;
        return a.order < b.order;
    });
    std::vector<char> tp(preds.size(), 0);
    for (size_t i = 0; i < preds.size(); ++i) tp[i] = quality(preds[i].idx) ? 1 : 0;
    // precision envelope integration
    std::vector<double> prec(preds.size()), rec(preds.size());
    int tp_count = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        tp_count += tp[i];
        prec[i] = static_cast<double>(tp_count) / static_cast<double>(i + 1);
        rec[i] = static_cast<double>(tp_count) / n_gt;
    }
    double ap = 0.0, max_prec = 0.0, prev_rec = 0.0;
    // walk from the end keeping the running max precision
    std::vector<double> env(preds.size());
    for (size_t i = preds.size(); i-- > 0;) {
        max_prec = std::max(max_prec, prec[i]);
        env[i] = max_prec;
    }
    for (size_t i = 0; i < preds.size(); ++i) {
        if (tp[i]) {
            ap += (rec[i] - prev_rec) * env[i];
            prev_rec = rec[i];
        }
    }
    return ap;
}

}  // namespace

ApResult hoi_map(const std::vector<HoiPrediction>& predictions,
                 const std::vector<HoiGroundTruth>& ground_truth, double iou_threshold) {
    ApResult result;
    std::map<int, std::vector<size_t>> gt_by_verb, pred_by_verb;
    for (size_t i = 0; i < ground_truth.size(); ++i) gt_by_verb[ground_truth[i].verb].push_back(i);
    for (size_t i = 0; i < predictions.size(); ++i) pred_by_verb[predictions[i].verb].push_back(i);

    for (auto& [verb, pidx] : pred_by_verb)
        if (!gt_by_verb.count(verb)) result.skipped_classes.push_back(verb);

    double total = 0.0;
    for (auto& [verb, gidx] : gt_by_verb) {
        std::vector<RankedPred> preds;
        auto it = pred_by_verb.find(verb);
        if (it != pred_by_verb.end()) {
            preds.reserve(it->second.size());
            for (size_t i : it->second)
                preds.push_back({predictions[i].score, predictions[i].scene,
                                 static_cast<int>(i), i});
        }
        std::vector<char> claimed(gidx.size(), 0);
        auto match = [&](size_t pi) {
            const auto& p = predictions[pi];
            double best_q = 0.0;
            int best = -1;
            for (size_t g = 0; g < gidx.size(); ++g) {
                const auto& gt = ground_truth[gidx[g]];
                if (claimed[g] || gt.scene != p.scene) continue;
                const double ih = box_iou(p.human_box, gt.human_box);
                const double io = box_iou(p.object_box, gt.object_box);
                if (ih <= iou_threshold || io <= iou_threshold) continue;
                const double q = std::min(ih, io);
                if (q > best_q) {
                    best_q = q;
                    best = static_cast<int>(g);
                }
            }
            if (best < 0) return false;
            claimed[static_cast<size_t>(best)] = 1;
            return true;
        };
        const double ap = average_precision(preds, static_cast<int>(gidx.size()), match);
        result.per_class_ap[verb] = ap;
        total += ap;
    }
    result.mean_ap = gt_by_verb.empty() ? 0.0 : total / static_cast<double>(gt_by_verb.size());
    return result;
}

ApResult instance_ap50(const std::vector<DetectionPrediction>& predictions,
                       const std::vector<DetectionGroundTruth>& ground_truth,
                       double iou_threshold) {
    ApResult result;
    std::map<int, std::vector<size_t>> gt_by_class, pred_by_class;
    for (size_t i = 0; i < ground_truth.size(); ++i)
        gt_by_class[ground_truth[i].class_id].push_back(i);
    for (size_t i = 0; i < predictions.size(); ++i)
        pred_by_class[predictions[i].class_id].push_back(i);

    for (auto& [cls, pidx] : pred_by_class)
        if (!gt_by_class.count(cls)) result.skipped_classes.push_back(cls);

    double total = 0.0;
    for (auto& [cls, gidx] : gt_by_class) {
        std::vector<RankedPred> preds;
        auto it = pred_by_class.find(cls);
        if (it != pred_by_class.end()) {
            for (size_t i : it->second)
                preds.push_back({predictions[i].score, predictions[i].scene,
                                 static_cast<int>(i), i});
        }
        std::vector<char> claimed(gidx.size(), 0);
        auto match = [&](size_t pi) {
            const auto& p = predictions[pi];
            double best_q = 0.0;
            int best = -1;
            for (size_t g = 0; g < gidx.size(); ++g) {
                const auto& gt = ground_truth[gidx[g]];
                if (claimed[g] || gt.scene != p.scene) continue;
                const double iou = box_iou(p.box, gt.box);
                if (iou <= iou_threshold) continue;
                if (iou > best_q) {
                    best_q = iou;
                    best = static_cast<int>(g);
                }
            }
            if (best < 0) return false;
            claimed[static_cast<size_t>(best)] = 1;
            return true;
        };
        const double ap = average_precision(preds, static_cast<int>(gidx.size()), match);
        result.per_class_ap[cls] = ap;
        total += ap;
    }
    result.mean_ap = gt_by_class.empty() ? 0.0 : total / static_cast<double>(gt_by_class.size());
    return result;
}

std::vector<double> coverage_rate(const std::vector<int>& cell_to_center,
                                  const std::vector<std::vector<char>>& masks,
                                  const std::vector<int>& matched_center) {
    std::vector<double> coverage(masks.size(), 0.0);
    for (size_t i = 0; i < masks.size(); ++i) {
        int in_mask = 0, covered = 0;
        for (size_t c = 0; c < masks[i].size() && c < cell_to_center.size(); ++c) {
            if (!masks[i][c]) continue;
            ++in_mask;
            if (cell_to_center[c] == matched_center[i]) ++covered;
        }
        coverage[i] = in_mask == 0 ? 0.0 : static_cast<double>(covered) / in_mask;
    }
    return coverage;
}

}  // namespace ager
