#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "testutil.hpp"

#include "ager/cues.hpp"

using namespace ager;
using agertest::randn;

namespace {

struct Fixture {
    ParamStore<double> store;
    CueHead<double> head;
    int dim, n_classes, d_pos, d_spa, d_cls, d_word;

    Fixture(int dim_ = 8, int n_classes_ = 3, int d_pos_ = 4, int d_spa_ = 2, int d_cls_ = 4,
            int d_word_ = 6, uint64_t seed = 11)
        : dim(dim_), n_classes(n_classes_), d_pos(d_pos_), d_spa(d_spa_), d_cls(d_cls_),
          d_word(d_word_) {
        Builder<double> bl(store, seed);
        Tensor<double> words = randn({n_classes, d_word}, 100);
        head = CueHead<double>(bl, "cue", dim, n_classes, d_pos, d_spa, d_cls,
                               std::move(words));
    }

    InstanceTokens<double> tokens(GraphCtx<double>& g, int n_h = 2, int n_o = 3,
                                  uint64_t seed = 7) {
        (void)g;
        return {constant(randn({n_h, dim}, seed)), constant(randn({n_o, dim}, seed + 1))};
    }

    void zero(const std::string& name) {
        auto& t = store.at(store.id_of(name)).value;
        std::fill(t.buf->begin(), t.buf->end(), 0.0);
    }
};

// build a bundle with hand-set class probabilities
CueBundle<double> bundle_with_probs(const std::vector<std::vector<double>>& human_probs,
                                    const std::vector<std::vector<double>>& object_probs,
                                    uint64_t seed = 3) {
    CueBundle<double> b;
    const int n_h = static_cast<int>(human_probs.size());
    const int n_o = static_cast<int>(object_probs.size());
    b.keypoints = constant(randn({n_h, kNumKeypoints * 2}, seed));
    b.human_boxes = constant(randn({n_h, 4}, seed + 1));
    b.object_boxes = constant(randn({n_o, 4}, seed + 2));
    Tensor<double> hp({n_h, static_cast<int>(human_probs[0].size())});
    for (int i = 0; i < n_h; ++i)
        for (size_t c = 0; c < human_probs[static_cast<size_t>(i)].size(); ++c)
            hp.at(i, static_cast<int>(c)) = human_probs[static_cast<size_t>(i)][c];
    Tensor<double> op({n_o, static_cast<int>(object_probs[0].size())});
    for (int i = 0; i < n_o; ++i)
        for (size_t c = 0; c < object_probs[static_cast<size_t>(i)].size(); ++c)
            op.at(i, static_cast<int>(c)) = object_probs[static_cast<size_t>(i)][c];
    b.human_class = constant(std::move(hp));
    b.object_class = constant(std::move(op));
    return b;
}

}  // namespace

TEST_CASE("cue shapes under the default-style layout") {
    Fixture f;
    GraphCtx<double> g(f.store);
    auto toks = f.tokens(g, 4, 8);
    auto b = f.head.extract_cues(g, toks);
    CHECK(b.keypoints->val.shape == std::vector<int>{4, 34});
    CHECK(b.human_boxes->val.shape == std::vector<int>{4, 4});
    CHECK(b.object_boxes->val.shape == std::vector<int>{8, 4});
    CHECK(b.human_class->val.shape == std::vector<int>{4, 2});
    CHECK(b.object_class->val.shape == std::vector<int>{8, 4});
    // probabilities normalized, outputs in [0,1]
    for (int i = 0; i < 8; ++i)
        CHECK(b.object_class->val.mat().row(i).sum() == doctest::Approx(1.0).epsilon(1e-5));
    for (double v : *b.keypoints->val.buf) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("zero-weight heads give centered boxes and uniform classes") {
    Fixture f;
    for (const char* name :
         {"cue.box.l0.w", "cue.box.l0.b", "cue.box.l1.w", "cue.box.l1.b", "cue.box.l2.w",
          "cue.box.l2.b", "cue.cls_o.w", "cue.cls_o.b", "cue.cls_h.w", "cue.cls_h.b"})
        f.zero(name);
    GraphCtx<double> g(f.store);
    auto b = f.head.extract_cues(g, f.tokens(g));
    for (double v : *b.human_boxes->val.buf) CHECK(v == 0.5);
    for (double v : *b.object_boxes->val.buf) CHECK(v == 0.5);
    for (double v : *b.object_class->val.buf) CHECK(v == doctest::Approx(0.25));
    for (double v : *b.human_class->val.buf) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("gate zeroes low-confidence instances exactly") {
    Fixture f;
    GraphCtx<double> g(f.store);
    // object 0: no-object 0.95 (max real 0.05 < 0.7) -> gated out
    // object 1: class 1 at 0.9 -> kept
    auto b = bundle_with_probs({{0.9, 0.1}, {0.2, 0.8}},
                               {{0.05, 0.0, 0.0, 0.95}, {0.05, 0.9, 0.0, 0.05}});
    auto e = f.head.gate_and_embed(g, b, 0.7);
    CHECK(e.gate_o == std::vector<char>{0, 1});
    CHECK(e.gate_h == std::vector<char>{1, 0});
    CHECK(e.chosen_class == std::vector<int>{0, 1});
    for (int d = 0; d < f.d_cls; ++d) CHECK(e.e_cls->val.at(0, d) == 0.0);
    for (int d = 0; d < f.d_spa; ++d) CHECK(e.e_o_spa->val.at(0, d) == 0.0);
    for (int d = 0; d < f.d_pos; ++d) CHECK(e.e_pos->val.at(1, d) == 0.0);
    // kept rows are generically nonzero
    double mag = 0;
    for (int d = 0; d < f.d_cls; ++d) mag += std::abs(e.e_cls->val.at(1, d));
    CHECK(mag > 0);
}

TEST_CASE("threshold zero keeps everything; cue switch off ignores confidence") {
    Fixture f;
    GraphCtx<double> g(f.store);
    auto b = bundle_with_probs({{0.4, 0.6}}, {{0.1, 0.1, 0.1, 0.7}});
    auto e0 = f.head.gate_and_embed(g, b, 0.0);
    CHECK(e0.gate_h == std::vector<char>{1});
    CHECK(e0.gate_o == std::vector<char>{1});
    auto eoff = f.head.gate_and_embed(g, b, 0.7, /*cue_switch=*/false);
    CHECK(eoff.gate_o == std::vector<char>{1});
    CHECK_THROWS_AS(f.head.gate_and_embed(g, b, 1.0), ValueError);
}

TEST_CASE("gate monotonicity and idempotence") {
    Fixture f;
    auto rng = make_rng(17);
    std::uniform_real_distribution<double> uni(0, 1);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::vector<double>> hp, op;
        for (int i = 0; i < 3; ++i) {
            double a = uni(rng);
            hp.push_back({a, 1 - a});
        }
        for (int i = 0; i < 4; ++i) {
            double a = uni(rng), b = uni(rng), c = uni(rng), d = uni(rng);
            double z = a + b + c + d;
            op.push_back({a / z, b / z, c / z, d / z});
        }
        auto b = bundle_with_probs(hp, op, 100 + static_cast<uint64_t>(trial));
        GraphCtx<double> g(f.store);
        auto lo = f.head.gate_and_embed(g, b, 0.3);
        auto hi = f.head.gate_and_embed(g, b, 0.6);
        for (size_t i = 0; i < lo.gate_o.size(); ++i)
            if (hi.gate_o[i]) CHECK(lo.gate_o[i]);  // raising threshold never un-zeroes
        // masking again with the same gates changes nothing
        Tensor<double> mask({static_cast<int>(lo.gate_o.size()), 1});
        for (size_t i = 0; i < lo.gate_o.size(); ++i)
            mask.at(static_cast<int>(i), 0) = lo.gate_o[i] ? 1.0 : 0.0;
        auto again = mul_cols(lo.e_cls, constant(mask));
        CHECK(*again->val.buf == *lo.e_cls->val.buf);
    }
}

TEST_CASE("pose pathway never touches object tokens") {
    Fixture f;
    GraphCtx<double> g(f.store);
    auto human = leaf(randn({2, f.dim}, 300), true);
    auto object = leaf(randn({3, f.dim}, 301), true);
    InstanceTokens<double> toks{human, object};
    auto b = f.head.extract_cues(g, toks);
    auto pose_loss = sum_all(mul(b.keypoints, b.keypoints));
    backward(pose_loss);
    CHECK(human->grad.numel() > 0);
    CHECK(object->grad.empty());  // nothing flowed into the object pathway
}

TEST_CASE("aggregate with identity-block weights passes tokens through") {
    Fixture f;
    // W_h = [I | 0]: output equals the token part when embeddings are zero
    auto& wh = f.store.at(f.store.id_of("cue.agg_h.w")).value;
    std::fill(wh.buf->begin(), wh.buf->end(), 0.0);
    for (int i = 0; i < f.dim; ++i) wh.at(i, i) = 1.0;
    auto& wo = f.store.at(f.store.id_of("cue.agg_o.w")).value;
    std::fill(wo.buf->begin(), wo.buf->end(), 0.0);
    for (int i = 0; i < f.dim; ++i) wo.at(i, i) = 1.0;

    GraphCtx<double> g(f.store);
    auto toks = f.tokens(g);
    CueEmbeddings<double> e;
    e.e_pos = constant(Tensor<double>::zeros({2, f.d_pos}));
    e.e_h_spa = constant(Tensor<double>::zeros({2, f.d_spa}));
    e.e_o_spa = constant(Tensor<double>::zeros({3, f.d_spa}));
    e.e_cls = constant(Tensor<double>::zeros({3, f.d_cls}));
    auto out = f.head.aggregate(g, toks, e);
    CHECK(out.human->val.mat() == toks.human->val.mat());
    CHECK(out.object->val.mat() == toks.object->val.mat());
    CHECK(f.head.agg_h.in == f.dim + f.d_pos + f.d_spa);
}

TEST_CASE("aggregate matches an explicit concat-then-matmul oracle") {
    Fixture f;
    GraphCtx<double> g(f.store);
    auto toks = f.tokens(g, 2, 2, 500);
    CueEmbeddings<double> e;
    e.e_pos = constant(randn({2, f.d_pos}, 501));
    e.e_h_spa = constant(randn({2, f.d_spa}, 502));
    e.e_o_spa = constant(randn({2, f.d_spa}, 503));
    e.e_cls = constant(randn({2, f.d_cls}, 504));
    auto out = f.head.aggregate(g, toks, e);

    const auto& w = f.store.at(f.store.id_of("cue.agg_h.w")).value;
    const auto& bias = f.store.at(f.store.id_of("cue.agg_h.b")).value;
    for (int i = 0; i < 2; ++i) {
        std::vector<double> cat;
        for (int d = 0; d < f.dim; ++d) cat.push_back(toks.human->val.at(i, d));
        for (int d = 0; d < f.d_pos; ++d) cat.push_back(e.e_pos->val.at(i, d));
        for (int d = 0; d < f.d_spa; ++d) cat.push_back(e.e_h_spa->val.at(i, d));
        for (int r = 0; r < f.dim; ++r) {
            double acc = bias.at(0, r);
            for (size_t cidx = 0; cidx < cat.size(); ++cidx)
                acc += w.at(r, static_cast<int>(cidx)) * cat[cidx];
            CHECK(std::abs(out.human->val.at(i, r) - acc) < 1e-6);
        }
    }
}

TEST_CASE("frozen gate override is honored") {
    Fixture f;
    GraphCtx<double> g(f.store);
    auto b = bundle_with_probs({{0.9, 0.1}}, {{0.05, 0.0, 0.0, 0.95}});
    GateOverride frozen;
    frozen.gate_h = {0};
    frozen.gate_o = {1};
    frozen.chosen_class = {2};
    auto e = f.head.gate_and_embed(g, b, 0.7, true, &frozen);
    CHECK(e.gate_h == std::vector<char>{0});
    CHECK(e.gate_o == std::vector<char>{1});
    CHECK(e.chosen_class == std::vector<int>{2});
    for (int d = 0; d < f.d_pos; ++d) CHECK(e.e_pos->val.at(0, d) == 0.0);
}
