#include "ager/scenes.hpp"

#include "ager/errors.hpp"
#include "ager/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace ager {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::vector<std::string> SceneConfig::class_names() const {
    static const std::vector<std::string> base = {"ball", "crate", "bicycle", "cup", "board"};
    std::vector<std::string> names;
    for (int i = 0; i < num_classes; ++i)
        names.push_back(i < static_cast<int>(base.size()) ? base[static_cast<size_t>(i)]
                                                          : "object" + std::to_string(i));
    return names;
}

std::vector<std::string> SceneConfig::verb_names() const {
    static const std::vector<std::string> base = {"hold", "ride", "next_to", "touch"};
    std::vector<std::string> names;
    for (int i = 0; i < num_verbs; ++i)
        names.push_back(i < static_cast<int>(base.size()) ? base[static_cast<size_t>(i)]
                                                          : "verb" + std::to_string(i));
    return names;
}

// ------------------------------------------------------------------ geometry

namespace {
double box_x1(const Box& b) { return b.cx - b.w / 2; }
double box_x2(const Box& b) { return b.cx + b.w / 2; }
double box_y1(const Box& b) { return b.cy - b.h / 2; }
double box_y2(const Box& b) { return b.cy + b.h / 2; }
}  // namespace

double box_iou(const Box& a, const Box& b) {
    const double ix = std::max(0.0, std::min(box_x2(a), box_x2(b)) - std::max(box_x1(a), box_x1(b)));
    const double iy = std::max(0.0, std::min(box_y2(a), box_y2(b)) - std::max(box_y1(a), box_y1(b)));
    const double inter = ix * iy;
    const double uni = a.w * a.h + b.w * b.h - inter;
    return uni <= 0 ? 0.0 : inter / uni;
}

std::set<int> derive_verbs(const HumanGt& human, const ObjectGt& object, const SceneConfig& cfg) {
    std::set<int> verbs;
    const Box& hb = human.box;
    const Box& ob = object.box;

    // hold: object center within reach of a visible wrist, at hand height
    if (cfg.num_verbs > 0) {
        const double reach = 0.02 + std::min(0.1, 0.5 * std::max(ob.w, ob.h));
        const bool hand_height = ob.cy < hb.cy + 0.15 * hb.h;
        for (int k : {kLWrist, kRWrist}) {
            if (!human.visibility[static_cast<size_t>(k)]) continue;
            const double dx = human.keypoints[static_cast<size_t>(k)][0] - ob.cx;
            const double dy = human.keypoints[static_cast<size_t>(k)][1] - ob.cy;
            if (hand_height && std::hypot(dx, dy) < reach) {
                verbs.insert(0);
                break;
            }
        }
    }
    // ride: human sits atop the object
    if (cfg.num_verbs > 1) {
        const double overlap_x =
            std::min(box_x2(hb), box_x2(ob)) - std::max(box_x1(hb), box_x1(ob));
        const double drop = box_y2(hb) - box_y1(ob);  // human bottom below object top
        if (overlap_x >= 0.5 * std::min(hb.w, ob.w) && hb.cy < ob.cy && drop >= -0.02 &&
            drop <= 0.5 * ob.h)
            verbs.insert(1);
    }
    // next_to: center distance band
    if (cfg.num_verbs > 2) {
        const double d = std::hypot(hb.cx - ob.cx, hb.cy - ob.cy);
        if (d >= 0.08 && d <= 0.28) verbs.insert(2);
    }
    // touch: boxes overlap
    if (cfg.num_verbs > 3 && box_iou(hb, ob) > 0.01) verbs.insert(3);
    return verbs;
}

// ------------------------------------------------------------------ skeleton

namespace {
struct SkeletonPose {
    double reach_x = 0, reach_y = 0;  // target for the right arm; 0,0 = arms down
    bool reaching = false;
};

HumanGt make_human(double cx, double cy, double height, const SkeletonPose& pose,
                   std::mt19937_64& rng) {
    std::uniform_real_distribution<double> jitter(-0.01, 0.01);
    HumanGt h;
    auto set = [&](int k, double x, double y) {
        h.keypoints[static_cast<size_t>(k)] = {x + jitter(rng), y + jitter(rng)};
    };
    const double s = height;
    set(kNose, cx, cy - 0.40 * s);
    set(kLEye, cx - 0.025 * s, cy - 0.42 * s);
    set(kREye, cx + 0.025 * s, cy - 0.42 * s);
    set(kLEar, cx - 0.045 * s, cy - 0.40 * s);
    set(kREar, cx + 0.045 * s, cy - 0.40 * s);
    const double shy = cy - 0.28 * s;
    set(kLShoulder, cx - 0.10 * s, shy);
    set(kRShoulder, cx + 0.10 * s, shy);
    set(kLHip, cx - 0.07 * s, cy + 0.05 * s);
    set(kRHip, cx + 0.07 * s, cy + 0.05 * s);
    set(kLKnee, cx - 0.08 * s, cy + 0.27 * s);
    set(kRKnee, cx + 0.08 * s, cy + 0.27 * s);
    set(kLAnkle, cx - 0.09 * s, cy + 0.48 * s);
    set(kRAnkle, cx + 0.09 * s, cy + 0.48 * s);
    const double seg = 0.16 * s;
    // left arm hangs down
    set(kLElbow, cx - 0.12 * s, shy + seg);
    set(kLWrist, cx - 0.13 * s, shy + 2 * seg);
    if (pose.reaching) {
        // straight right arm toward the target, wrist at full extension
        const double sx = h.keypoints[kRShoulder][0], sy = h.keypoints[kRShoulder][1];
        double dx = pose.reach_x - sx, dy = pose.reach_y - sy;
        const double n = std::max(1e-9, std::hypot(dx, dy));
        dx /= n;
        dy /= n;
        set(kRElbow, sx + dx * seg, sy + dy * seg);
        h.keypoints[kRWrist] = {sx + dx * 2 * seg, sy + dy * 2 * seg};  // exact, no jitter
    } else {
        set(kRElbow, cx + 0.12 * s, shy + seg);
        set(kRWrist, cx + 0.13 * s, shy + 2 * seg);
    }
    double x1 = 1, y1 = 1, x2 = 0, y2 = 0;
    for (int k = 0; k < kNumKeypoints; ++k) {
        auto& p = h.keypoints[static_cast<size_t>(k)];
        h.visibility[static_cast<size_t>(k)] =
            p[0] >= 0 && p[0] <= 1 && p[1] >= 0 && p[1] <= 1 ? 1 : 0;
        p[0] = std::clamp(p[0], 0.0, 1.0);
        p[1] = std::clamp(p[1], 0.0, 1.0);
        x1 = std::min(x1, p[0]);
        y1 = std::min(y1, p[1]);
        x2 = std::max(x2, p[0]);
        y2 = std::max(y2, p[1]);
    }
    const double pad = 0.05 * s;  // head radius and limb thickness
    x1 = std::max(0.0, x1 - pad);
    y1 = std::max(0.0, y1 - pad);
    x2 = std::min(1.0, x2 + pad);
    y2 = std::min(1.0, y2 + pad);
    h.box = {(x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1};
    return h;
}
}  // namespace

// ----------------------------------------------------------------- rendering

namespace {
struct Canvas {
    int size;
    Tensor<float>* raster;

    void blend(int x, int y, const std::array<float, 3>& c) {
        if (x < 0 || y < 0 || x >= size || y >= size) return;
        for (int ch = 0; ch < 3; ++ch)
            raster->data()[(static_cast<int64_t>(ch) * size + y) * size + x] = c[static_cast<size_t>(ch)];
    }

    void disk(double cx, double cy, double r, const std::array<float, 3>& c) {
        const int x0 = static_cast<int>(std::floor((cx - r) * size)),
                  x1 = static_cast<int>(std::ceil((cx + r) * size));
        const int y0 = static_cast<int>(std::floor((cy - r) * size)),
                  y1 = static_cast<int>(std::ceil((cy + r) * size));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double px = (x + 0.5) / size, py = (y + 0.5) / size;
                if (std::hypot(px - cx, py - cy) <= r) blend(x, y, c);
            }
    }

    void rect(const Box& b, const std::array<float, 3>& c) {
        const int x0 = static_cast<int>(std::floor(box_x1(b) * size)),
                  x1 = static_cast<int>(std::ceil(box_x2(b) * size));
        const int y0 = static_cast<int>(std::floor(box_y1(b) * size)),
                  y1 = static_cast<int>(std::ceil(box_y2(b) * size));
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) blend(x, y, c);
    }

    void triangle(const Box& b, const std::array<float, 3>& c) {
        // apex down
        const int y0 = static_cast<int>(std::floor(box_y1(b) * size)),
                  y1 = static_cast<int>(std::ceil(box_y2(b) * size));
        for (int y = y0; y < y1; ++y) {
            const double t = b.h <= 0 ? 0 : ((y + 0.5) / size - box_y1(b)) / b.h;
            const double half = std::max(0.0, (1.0 - t) * b.w / 2);
            const int x0 = static_cast<int>(std::floor((b.cx - half) * size));
            const int x1 = static_cast<int>(std::ceil((b.cx + half) * size));
            for (int x = x0; x < x1; ++x) blend(x, y, c);
        }
    }

    void line(double ax, double ay, double bx, double by, double thickness,
              const std::array<float, 3>& c) {
        const double len = std::hypot(bx - ax, by - ay);
        const int steps = std::max(2, static_cast<int>(len * size * 2));
        for (int i = 0; i <= steps; ++i) {
            const double t = static_cast<double>(i) / steps;
            disk(ax + (bx - ax) * t, ay + (by - ay) * t, thickness, c);
        }
    }
};

constexpr std::array<std::array<float, 3>, 5> kClassColors = {{
    {0.90f, 0.15f, 0.15f},  // ball
    {0.15f, 0.35f, 0.90f},  // crate
    {0.15f, 0.85f, 0.25f},  // bicycle
    {0.95f, 0.80f, 0.10f},  // cup
    {0.70f, 0.20f, 0.85f},  // board
}};
constexpr std::array<float, 3> kHumanColor = {0.95f, 0.95f, 0.90f};
constexpr std::array<float, 3> kBackground = {0.08f, 0.08f, 0.08f};

void draw_object(Canvas& cv, const ObjectGt& o) {
    const auto color = kClassColors[static_cast<size_t>(o.class_id % 5)];
    switch (o.class_id % 5) {
        case 0:
            cv.disk(o.box.cx, o.box.cy, std::min(o.box.w, o.box.h) / 2, color);
            break;
        case 1:
            cv.rect(o.box, color);
            break;
        case 2: {
            const double r = o.box.h / 4;
            const double wy = box_y2(o.box) - r;
            cv.disk(o.box.cx - o.box.w / 2 + r, wy, r, color);
            cv.disk(o.box.cx + o.box.w / 2 - r, wy, r, color);
            cv.line(o.box.cx - o.box.w / 2 + r, wy, o.box.cx + o.box.w / 2 - r, wy,
                    o.box.h / 10, color);
            cv.line(o.box.cx, box_y1(o.box), o.box.cx, wy, o.box.h / 10, color);
            break;
        }
        case 3:
            cv.triangle(o.box, color);
            break;
        default:
            cv.rect(o.box, color);
            break;
    }
}

void draw_human(Canvas& cv, const HumanGt& h) {
    const double th = std::max(1.0 / cv.size, 0.012);
    auto pt = [&](int k) { return h.keypoints[static_cast<size_t>(k)]; };
    auto seg = [&](int a, int b) {
        cv.line(pt(a)[0], pt(a)[1], pt(b)[0], pt(b)[1], th, kHumanColor);
    };
    seg(kLShoulder, kRShoulder);
    seg(kLHip, kRHip);
    seg(kLShoulder, kLElbow);
    seg(kLElbow, kLWrist);
    seg(kRShoulder, kRElbow);
    seg(kRElbow, kRWrist);
    seg(kLHip, kLKnee);
    seg(kLKnee, kLAnkle);
    seg(kRHip, kRKnee);
    seg(kRKnee, kRAnkle);
    // spine and neck
    const double msx = (pt(kLShoulder)[0] + pt(kRShoulder)[0]) / 2;
    const double msy = (pt(kLShoulder)[1] + pt(kRShoulder)[1]) / 2;
    const double mhx = (pt(kLHip)[0] + pt(kRHip)[0]) / 2;
    const double mhy = (pt(kLHip)[1] + pt(kRHip)[1]) / 2;
    cv.line(msx, msy, mhx, mhy, th, kHumanColor);
    cv.line(pt(kNose)[0], pt(kNose)[1], msx, msy, th, kHumanColor);
    cv.disk(pt(kNose)[0], pt(kNose)[1], 0.03, kHumanColor);
}
}  // namespace

void render_scene(SceneSample& scene, const SceneConfig& cfg) {
    scene.raster = Tensor<float>({3, cfg.resolution, cfg.resolution});
    Canvas cv{cfg.resolution, &scene.raster};
    for (int ch = 0; ch < 3; ++ch)
        for (int i = 0; i < cfg.resolution * cfg.resolution; ++i)
            scene.raster.data()[static_cast<int64_t>(ch) * cfg.resolution * cfg.resolution + i] =
                kBackground[static_cast<size_t>(ch)];
    for (const auto& o : scene.objects) draw_object(cv, o);
    for (const auto& h : scene.humans) draw_human(cv, h);
}

// ----------------------------------------------------------------- generator

SceneSample generate_scene(uint64_t seed, const SceneConfig& cfg) {
    if (cfg.num_classes < 1) throw ConfigError("generate_scene: need at least one object class");
    if (cfg.num_verbs < 1) throw ConfigError("generate_scene: need at least one verb");
    if (cfg.max_humans < 1 || cfg.max_objects < 1)
        throw ConfigError("generate_scene: instance caps must be positive");

    auto rng = derive_rng(seed, "scene");
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    auto in_range = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };

    SceneSample scene;
    const int n_humans = 1 + static_cast<int>(rng() % 2) % cfg.max_humans;
    const int n_objects = 1 + static_cast<int>(rng() % 3) % cfg.max_objects;

    std::vector<std::pair<double, double>> human_centers;
    for (int i = 0; i < n_humans; ++i) {
        double cx = 0, cy = 0;
        for (int tries = 0; tries < 32; ++tries) {
            cx = in_range(0.25, 0.75);
            cy = in_range(0.35, 0.6);
            bool ok = true;
            for (auto& [px, py] : human_centers)
                if (std::hypot(cx - px, cy - py) < 0.38) ok = false;
            if (ok) break;
        }
        human_centers.emplace_back(cx, cy);
    }

    // construction rules: 0..num_verbs-1 realize that verb, num_verbs = none.
    // rare_verb_skew > 1 downweights the ride rule; ride is the one verb
    // that practically never fires by accident, so construction frequency
    // controls its label frequency.
    std::vector<double> rule_w(static_cast<size_t>(cfg.num_verbs) + 1, 1.0);
    rule_w.back() = 0.5;  // "none"
    if (cfg.rare_verb_skew > 1.0 && cfg.num_verbs >= 2)
        rule_w[1] /= cfg.rare_verb_skew;
    std::discrete_distribution<int> pick_rule(rule_w.begin(), rule_w.end());

    struct Plan {
        int rule;
        int target_human;
        int class_id;
    };
    std::vector<Plan> plans;
    for (int i = 0; i < n_objects; ++i)
        plans.push_back({pick_rule(rng), static_cast<int>(rng() % static_cast<uint64_t>(n_humans)),
                         static_cast<int>(rng() % static_cast<uint64_t>(cfg.num_classes))});

    // humans first; a human reaches if some object plans to be held by them
    for (int i = 0; i < n_humans; ++i) {
        const double height = in_range(0.38, 0.55);
        SkeletonPose pose;
        for (const auto& p : plans)
            if (p.rule == 0 && p.target_human == i) {
                pose.reaching = true;
                const double ang = in_range(-0.6, 0.9);
                pose.reach_x = human_centers[static_cast<size_t>(i)].first +
                               std::cos(ang) * 0.32 * height;
                pose.reach_y = human_centers[static_cast<size_t>(i)].second - 0.28 * height +
                               std::sin(ang) * 0.32 * height;
            }
        scene.humans.push_back(make_human(human_centers[static_cast<size_t>(i)].first,
                                          human_centers[static_cast<size_t>(i)].second, height,
                                          pose, rng));
    }

    auto sample_size = [&](int class_id) -> std::pair<double, double> {
        switch (class_id % 5) {
            case 0: {
                double d = in_range(0.12, 0.2);
                return {d, d};
            }
            case 1: {
                double d = in_range(0.16, 0.26);
                return {d, d * in_range(0.8, 1.2)};
            }
            case 2: {
                double w = in_range(0.26, 0.38);
                return {w, w * 0.6};
            }
            case 3: {
                double d = in_range(0.09, 0.14);
                return {d, d * 1.2};
            }
            default: {
                double w = in_range(0.26, 0.42);
                return {w, w * 0.3};
            }
        }
    };

    for (const auto& plan : plans) {
        const HumanGt& h = scene.humans[static_cast<size_t>(plan.target_human)];
        auto [ow, oh] = sample_size(plan.class_id);
        Box b{0.5, 0.5, ow, oh};
        switch (plan.rule >= cfg.num_verbs ? 4 : plan.rule) {
            case 0: {  // hold: center on the reaching wrist
                b.cx = h.keypoints[kRWrist][0] + in_range(-0.01, 0.01);
                b.cy = h.keypoints[kRWrist][1] + in_range(-0.01, 0.01);
                // keep it hand-sized so the reach radius stays tight
                b.w = std::min(b.w, 0.16);
                b.h = std::min(b.h, 0.16);
                break;
            }
            case 1: {  // ride: under the human, top edge near human's bottom
                b.cx = h.box.cx + in_range(-0.2, 0.2) * std::min(h.box.w, b.w);
                b.cy = box_y2(h.box) + oh / 2 - in_range(0.05, 0.3) * oh;
                break;
            }
            case 2: {  // next_to: center-distance band, away from the body box
                const double ang = in_range(0, 2 * M_PI);
                const double d = in_range(0.16, 0.26);
                b.cx = h.box.cx + std::cos(ang) * d;
                b.cy = h.box.cy + std::sin(ang) * d;
                break;
            }
            case 3: {  // touch: small overlap with the side of the body box
                const double side = uni(rng) < 0.5 ? -1.0 : 1.0;
                b.cx = h.box.cx + side * (h.box.w / 2 + b.w / 2 - in_range(0.02, 0.05));
                b.cy = h.box.cy + in_range(-0.2, 0.2) * h.box.h;
                break;
            }
            default: {  // none: far away
                for (int tries = 0; tries < 64; ++tries) {
                    b.cx = in_range(0.08, 0.92);
                    b.cy = in_range(0.08, 0.92);
                    bool far = true;
                    for (const auto& hh : scene.humans)
                        if (std::hypot(b.cx - hh.box.cx, b.cy - hh.box.cy) < 0.42) far = false;
                    if (far) break;
                }
                break;
            }
        }
        b.cx = std::clamp(b.cx, b.w / 2 + 0.01, 1.0 - b.w / 2 - 0.01);
        b.cy = std::clamp(b.cy, b.h / 2 + 0.01, 1.0 - b.h / 2 - 0.01);
        scene.objects.push_back({b, plan.class_id});
    }

    // labels always come from the rule oracle on final geometry
    for (int hi = 0; hi < n_humans; ++hi)
        for (int oi = 0; oi < n_objects; ++oi) {
            auto verbs = derive_verbs(scene.humans[static_cast<size_t>(hi)],
                                      scene.objects[static_cast<size_t>(oi)], cfg);
            while (static_cast<int>(verbs.size()) > cfg.max_patterns)
                verbs.erase(std::prev(verbs.end()));
            if (!verbs.empty()) scene.interactions.push_back({hi, oi, verbs});
        }

    render_scene(scene, cfg);
    return scene;
}

// -------------------------------------------------------------------- files

namespace {
json box_to_json(const Box& b) { return json::array({b.cx, b.cy, b.w, b.h}); }
Box box_from_json(const json& j) { return {j.at(0), j.at(1), j.at(2), j.at(3)}; }
}  // namespace

void save_dataset(const std::vector<SceneSample>& samples, const SceneConfig& cfg,
                  const std::string& path) {
    const fs::path raster_dir = fs::path(path).string() + ".rasters";
    fs::create_directories(raster_dir);
    std::ofstream out(path);
    if (!out) throw DatasetError("save_dataset: cannot open " + path);
    json header = {{"format", 1},
                   {"config",
                    {{"resolution", cfg.resolution},
                     {"num_classes", cfg.num_classes},
                     {"num_verbs", cfg.num_verbs},
                     {"max_humans", cfg.max_humans},
                     {"max_objects", cfg.max_objects},
                     {"max_patterns", cfg.max_patterns},
                     {"rare_verb_skew", cfg.rare_verb_skew}}}};
    out << header.dump() << "\n";
    for (size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        char name[32];
        std::snprintf(name, sizeof(name), "scene_%05zu.bin", i);
        const fs::path rpath = raster_dir / name;
        std::ofstream rb(rpath, std::ios::binary);
        rb.write(reinterpret_cast<const char*>(s.raster.data()),
                 static_cast<std::streamsize>(s.raster.numel() * sizeof(float)));
        json rec;
        rec["raster"] = fs::path(raster_dir.filename() / name).string();
        rec["shape"] = s.raster.shape;
        rec["humans"] = json::array();
        for (const auto& h : s.humans) {
            json hj;
            hj["box"] = box_to_json(h.box);
            hj["keypoints"] = json::array();
            for (const auto& kp : h.keypoints) hj["keypoints"].push_back(json::array({kp[0], kp[1]}));
            hj["visibility"] = h.visibility;
            rec["humans"].push_back(hj);
        }
        rec["objects"] = json::array();
        for (const auto& o : s.objects)
            rec["objects"].push_back({{"box", box_to_json(o.box)}, {"class", o.class_id}});
        rec["interactions"] = json::array();
        for (const auto& it : s.interactions)
            rec["interactions"].push_back(
                {{"human", it.human_idx}, {"object", it.object_idx}, {"verbs", it.verbs}});
        out << rec.dump() << "\n";
    }
}

std::vector<SceneSample> load_dataset(const std::string& path, SceneConfig* config_out) {
    std::ifstream in(path);
    if (!in) throw DatasetError("load_dataset: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path + ": missing header line");
    SceneConfig cfg;
    try {
        json header = json::parse(line);
        const auto& jc = header.at("config");
        cfg.resolution = jc.at("resolution");
        cfg.num_classes = jc.at("num_classes");
        cfg.num_verbs = jc.at("num_verbs");
        cfg.max_humans = jc.at("max_humans");
        cfg.max_objects = jc.at("max_objects");
        cfg.max_patterns = jc.at("max_patterns");
        cfg.rare_verb_skew = jc.at("rare_verb_skew");
    } catch (const json::exception& e) {
        throw FormatError(path + " line 1: bad header: " + e.what());
    }
    if (config_out) *config_out = cfg;

    std::vector<SceneSample> samples;
    const fs::path base = fs::path(path).parent_path();
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        SceneSample s;
        try {
            json rec = json::parse(line);
            for (const auto& hj : rec.at("humans")) {
                HumanGt h;
                h.box = box_from_json(hj.at("box"));
                const auto& kps = hj.at("keypoints");
                if (kps.size() != kNumKeypoints)
                    throw FormatError("expected 17 keypoints");
                for (int k = 0; k < kNumKeypoints; ++k) {
                    h.keypoints[static_cast<size_t>(k)] = {kps.at(static_cast<size_t>(k)).at(0),
                                                           kps.at(static_cast<size_t>(k)).at(1)};
                    h.visibility[static_cast<size_t>(k)] =
                        hj.at("visibility").at(static_cast<size_t>(k));
                }
                s.humans.push_back(h);
            }
            for (const auto& oj : rec.at("objects"))
                s.objects.push_back({box_from_json(oj.at("box")), oj.at("class")});
            for (const auto& ij : rec.at("interactions")) {
                InteractionGt it;
                it.human_idx = ij.at("human");
                it.object_idx = ij.at("object");
                for (int v : ij.at("verbs")) it.verbs.insert(v);
                s.interactions.push_back(it);
            }
            std::vector<int> shape = rec.at("shape");
            s.raster = Tensor<float>(shape);
            const fs::path rpath = base / std::string(rec.at("raster"));
            std::ifstream rb(rpath, std::ios::binary);
            if (!rb)
                throw FormatError("missing raster file " + rpath.string());
            rb.read(reinterpret_cast<char*>(s.raster.data()),
                    static_cast<std::streamsize>(s.raster.numel() * sizeof(float)));
            if (rb.gcount() != static_cast<std::streamsize>(s.raster.numel() * sizeof(float)))
                throw FormatError("truncated raster file " + rpath.string());
        } catch (const std::exception& e) {
            throw FormatError(path + " line " + std::to_string(line_no) + ": " + e.what());
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace ager
