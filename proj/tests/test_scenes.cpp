#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ager/errors.hpp"
#include "ager/scenes.hpp"

#include <filesystem>
#include <fstream>

using namespace ager;

namespace {
SceneConfig test_config() {
    SceneConfig cfg;
    cfg.resolution = 64;
    return cfg;
}

bool scenes_equal(const SceneSample& a, const SceneSample& b) {
    if (a.humans.size() != b.humans.size() || a.objects.size() != b.objects.size() ||
        a.interactions.size() != b.interactions.size())
        return false;
    for (size_t i = 0; i < a.humans.size(); ++i) {
        if (a.humans[i].keypoints != b.humans[i].keypoints) return false;
        if (a.humans[i].visibility != b.humans[i].visibility) return false;
        const Box &x = a.humans[i].box, &y = b.humans[i].box;
        if (x.cx != y.cx || x.cy != y.cy || x.w != y.w || x.h != y.h) return false;
    }
    for (size_t i = 0; i < a.objects.size(); ++i) {
        if (a.objects[i].class_id != b.objects[i].class_id) return false;
        const Box &x = a.objects[i].box, &y = b.objects[i].box;
        if (x.cx != y.cx || x.cy != y.cy || x.w != y.w || x.h != y.h) return false;
    }
    for (size_t i = 0; i < a.interactions.size(); ++i) {
        if (a.interactions[i].human_idx != b.interactions[i].human_idx) return false;
        if (a.interactions[i].object_idx != b.interactions[i].object_idx) return false;
        if (a.interactions[i].verbs != b.interactions[i].verbs) return false;
    }
    if (a.raster.shape != b.raster.shape) return false;
    return *a.raster.buf == *b.raster.buf;
}
}  // namespace

TEST_CASE("generation is deterministic per seed") {
    const auto cfg = test_config();
    auto a = generate_scene(123, cfg);
    auto b = generate_scene(123, cfg);
    CHECK(scenes_equal(a, b));
    auto c = generate_scene(124, cfg);
    CHECK(!scenes_equal(a, c));
}

TEST_CASE("instance caps and interaction validity") {
    const auto cfg = test_config();
    for (uint64_t seed = 0; seed < 50; ++seed) {
        auto s = generate_scene(seed, cfg);
        CHECK(static_cast<int>(s.humans.size()) <= cfg.max_humans);
        CHECK(static_cast<int>(s.objects.size()) <= cfg.max_objects);
        CHECK(!s.humans.empty());
        CHECK(!s.objects.empty());
        for (const auto& it : s.interactions) {
            CHECK(it.human_idx < static_cast<int>(s.humans.size()));
            CHECK(it.object_idx < static_cast<int>(s.objects.size()));
            CHECK(!it.verbs.empty());
            CHECK(static_cast<int>(it.verbs.size()) <= cfg.max_patterns);
        }
        CHECK(s.raster.all_finite());
        for (float v : *s.raster.buf) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
}

TEST_CASE("labels re-derive from stored geometry") {
    const auto cfg = test_config();
    int checked = 0;
    for (uint64_t seed = 0; seed < 200; ++seed) {
        auto s = generate_scene(seed, cfg);
        size_t it_idx = 0;
        for (int hi = 0; hi < static_cast<int>(s.humans.size()); ++hi)
            for (int oi = 0; oi < static_cast<int>(s.objects.size()); ++oi) {
                auto verbs = derive_verbs(s.humans[static_cast<size_t>(hi)],
                                          s.objects[static_cast<size_t>(oi)], cfg);
                while (static_cast<int>(verbs.size()) > cfg.max_patterns)
                    verbs.erase(std::prev(verbs.end()));
                if (verbs.empty()) continue;
                REQUIRE(it_idx < s.interactions.size());
                const auto& it = s.interactions[it_idx++];
                CHECK(it.human_idx == hi);
                CHECK(it.object_idx == oi);
                CHECK(it.verbs == verbs);
                ++checked;
            }
        CHECK(it_idx == s.interactions.size());
    }
    CHECK(checked > 100);
}

TEST_CASE("every verb appears in a modest corpus") {
    const auto cfg = test_config();
    std::vector<int> counts(static_cast<size_t>(cfg.num_verbs), 0);
    for (uint64_t seed = 0; seed < 100; ++seed) {
        auto s = generate_scene(seed, cfg);
        for (const auto& it : s.interactions)
            for (int v : it.verbs) counts[static_cast<size_t>(v)]++;
    }
    for (int v = 0; v < cfg.num_verbs; ++v) {
        INFO("verb " << v << " count " << counts[static_cast<size_t>(v)]);
        CHECK(counts[static_cast<size_t>(v)] > 5);
    }
}

TEST_CASE("rare-verb skew shifts frequencies") {
    auto cfg = test_config();
    int base_rare = 0;
    for (uint64_t seed = 0; seed < 150; ++seed)
        for (const auto& it : generate_scene(seed, cfg).interactions)
            for (int v : it.verbs) base_rare += v == 1;
    cfg.rare_verb_skew = 10.0;
    int rare = 0, common = 0;
    for (uint64_t seed = 0; seed < 150; ++seed) {
        auto s = generate_scene(seed, cfg);
        for (const auto& it : s.interactions)
            for (int v : it.verbs) (v == 1 ? rare : common)++;
    }
    CHECK(rare * 4 < base_rare);
    CHECK(common > 8 * rare);
}

TEST_CASE("dataset round trip") {
    const auto cfg = test_config();
    std::vector<SceneSample> scenes;
    for (uint64_t seed = 0; seed < 5; ++seed) scenes.push_back(generate_scene(seed, cfg));
    const std::string path = "scene_roundtrip.jsonl";
    save_dataset(scenes, cfg, path);
    SceneConfig loaded_cfg;
    auto loaded = load_dataset(path, &loaded_cfg);
    REQUIRE(loaded.size() == scenes.size());
    CHECK(loaded_cfg.resolution == cfg.resolution);
    for (size_t i = 0; i < scenes.size(); ++i) CHECK(scenes_equal(scenes[i], loaded[i]));

    // empty dataset: header only
    save_dataset({}, cfg, path);
    CHECK(load_dataset(path).empty());

    std::filesystem::remove(path);
    std::filesystem::remove_all(path + ".rasters");
}

TEST_CASE("malformed files raise FormatError with the failing line") {
    const auto cfg = test_config();
    const std::string path = "scene_bad.jsonl";
    save_dataset({generate_scene(1, cfg), generate_scene(2, cfg)}, cfg, path);
    // truncate the second record
    {
        std::ifstream in(path);
        std::string header, rec1;
        std::getline(in, header);
        std::getline(in, rec1);
        in.close();
        std::ofstream out(path);
        out << header << "\n" << rec1 << "\n" << rec1.substr(0, rec1.size() / 2) << "\n";
    }
    try {
        load_dataset(path);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::filesystem::remove(path);
    std::filesystem::remove_all(path + ".rasters");
}

TEST_CASE("impossible configs are rejected") {
    auto cfg = test_config();
    cfg.num_classes = 0;
    CHECK_THROWS_AS(generate_scene(0, cfg), ConfigError);
}
