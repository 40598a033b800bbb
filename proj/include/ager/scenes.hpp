#pragma once

// Parametric HOI scenes with exact ground truth. Humans are articulated
// stick figures (17 keypoints), objects are class-colored shapes, and every
// verb label is a deterministic function of the stored geometry, so labels
// can always be re-derived from the annotations.

#include "ager/tensor.hpp"

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace ager {

constexpr int kNumKeypoints = 17;

// COCO keypoint order
enum Keypoint {
    kNose = 0, kLEye, kREye, kLEar, kREar, kLShoulder, kRShoulder, kLElbow, kRElbow,
    kLWrist, kRWrist, kLHip, kRHip, kLKnee, kRKnee, kLAnkle, kRAnkle
};

struct Box {  // normalized (cx, cy, w, h), all in [0,1]
    double cx = 0, cy = 0, w = 0, h = 0;
};

double box_iou(const Box& a, const Box& b);

struct HumanGt {
    Box box;
    std::array<std::array<double, 2>, kNumKeypoints> keypoints{};  // normalized (x, y)
    std::array<uint8_t, kNumKeypoints> visibility{};
};

struct ObjectGt {
    Box box;
    int class_id = 0;
};

struct InteractionGt {
    int human_idx = 0;
    int object_idx = 0;
    std::set<int> verbs;  // nonempty
};

struct SceneSample {
    Tensor<float> raster;  // [3, S, S], values in [0,1]
    std::vector<HumanGt> humans;
    std::vector<ObjectGt> objects;
    std::vector<InteractionGt> interactions;
};

struct SceneConfig {
    int resolution = 128;
    int num_classes = 5;       // object classes
    int num_verbs = 4;         // hold, ride, next_to, touch
    int max_humans = 4;
    int max_objects = 8;
    int max_patterns = 3;      // cap on |verbs| per pair
    double rare_verb_skew = 1.0;  // >1 biases construction away from the last verb

    std::vector<std::string> class_names() const;
    std::vector<std::string> verb_names() const;
};

// Deterministic geometric verb rules shared by the generator and the
// label-consistency oracle.
std::set<int> derive_verbs(const HumanGt& human, const ObjectGt& object,
                           const SceneConfig& config);

SceneSample generate_scene(uint64_t seed, const SceneConfig& config);
void render_scene(SceneSample& scene, const SceneConfig& config);  // fills raster from geometry

// Dataset files: a JSON header line {version, config}, then one JSON record
// per scene; rasters live in <path>.rasters/ as raw little-endian float32
// sidecar files referenced by the records.
void save_dataset(const std::vector<SceneSample>& samples, const SceneConfig& config,
                  const std::string& path);
std::vector<SceneSample> load_dataset(const std::string& path, SceneConfig* config_out = nullptr);

}  // namespace ager
