#pragma once

// Detection / interaction metrics: HOI mAP (both boxes over the IoU
// threshold and the verb correct), instance AP at IoU 0.5, and the cluster
// coverage diagnostic. AP uses all-point precision-envelope integration.

#include "ager/scenes.hpp"

#include <map>
#include <string>
#include <vector>

namespace ager {

struct HoiPrediction {
    int scene = 0;
    int verb = 0;
    double score = 0.0;
    Box human_box, object_box;
};

struct HoiGroundTruth {  // one entry per (pair, verb)
    int scene = 0;
    int verb = 0;
    Box human_box, object_box;
};

struct ApResult {
    std::map<int, double> per_class_ap;  // only classes with ground truth
    double mean_ap = 0.0;
    std::vector<int> skipped_classes;  // predicted classes with no ground truth
};

ApResult hoi_map(const std::vector<HoiPrediction>& predictions,
                 const std::vector<HoiGroundTruth>& ground_truth, double iou_threshold = 0.5);

struct DetectionPrediction {
    int scene = 0;
    int class_id = 0;  // humans use a dedicated class id from the caller
    double score = 0.0;
    Box box;
};

struct DetectionGroundTruth {
    int scene = 0;
    int class_id = 0;
    Box box;
};

ApResult instance_ap50(const std::vector<DetectionPrediction>& predictions,
                       const std::vector<DetectionGroundTruth>& ground_truth,
                       double iou_threshold = 0.5);

// cell_to_center: argmax-assigned final center per token-grid cell.
// masks: per instance, which cells its ground-truth box covers.
// matched_center: the prediction slot matched to each instance.
// Returns the covered fraction per instance (0 if the mask is empty).
std::vector<double> coverage_rate(const std::vector<int>& cell_to_center,
                                  const std::vector<std::vector<char>>& masks,
                                  const std::vector<int>& matched_center);

}  // namespace ager
