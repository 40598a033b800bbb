#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "testutil.hpp"

#include "ager/backbone.hpp"

using namespace ager;
using agertest::randn;

TEST_CASE("cosine position embedding basics") {
    // position (0,0): sine channels 0, cosine channels 1
    auto pe = cosine_position_embedding<double>(3, 3, 8);
    for (int i = 0; i < 4; ++i) {
        const double v = pe.at(0, i);
        const double vx = pe.at(0, 4 + i);
        if (i % 2 == 0) {
            CHECK(v == 0.0);
            CHECK(vx == 0.0);
        } else {
            CHECK(v == 1.0);
            CHECK(vx == 1.0);
        }
    }
    // 2x2 grid, dim 4: pairwise distinct rows
    auto small = cosine_position_embedding<double>(2, 2, 4);
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b) {
            bool differ = false;
            for (int d = 0; d < 4; ++d)
                if (small.at(a, d) != small.at(b, d)) differ = true;
            CHECK(differ);
        }
    // 20x20, dim 256: all entries in [-1, 1]
    auto big = cosine_position_embedding<double>(20, 20, 256);
    for (double v : *big.buf) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
    CHECK_THROWS_AS(cosine_position_embedding<double>(2, 2, 5), DimensionError);
    // odd half-dim also works (dim even is the only requirement)
    auto odd_half = cosine_position_embedding<double>(2, 2, 6);
    CHECK(odd_half.shape == std::vector<int>{4, 6});
}

namespace {
struct StemFixture {
    ParamStore<double> store;
    BackboneStem<double> stem;
    explicit StemFixture(int dim = 8, uint64_t seed = 5) {
        Builder<double> bl(store, seed);
        stem = BackboneStem<double>(bl, "stem", dim);
    }
};
}  // namespace

TEST_CASE("token counts follow the grid arithmetic") {
    StemFixture f;
    GraphCtx<double> g(f.store);
    auto p64 = f.stem.tokenize(g, constant(randn({3, 64, 64}, 1, 0.5)));
    CHECK(p64.tokens->val.shape == std::vector<int>{4, 8});
    CHECK(p64.grid_h * p64.grid_w == 4);

    auto p640 = f.stem.tokenize(g, constant(randn({3, 640, 640}, 2, 0.5)));
    CHECK(p640.tokens->val.rows() == 400);

    CHECK_THROWS_AS(f.stem.tokenize(g, constant(randn({3, 65, 64}, 3))), DimensionError);
    CHECK_THROWS_AS(f.stem.tokenize(g, constant(Tensor<double>({2, 64, 64}))), DimensionError);
}

TEST_CASE("zero input yields the positional embedding alone") {
    StemFixture f;
    GraphCtx<double> g(f.store);
    auto p = f.stem.tokenize(g, constant(Tensor<double>({3, 64, 64})));
    auto pe = cosine_position_embedding<double>(2, 2, 8);
    CHECK(p.tokens->val.mat() == pe.mat());
}

TEST_CASE("bitwise determinism for fixed parameters and input") {
    StemFixture f;
    auto raster = randn({3, 64, 64}, 9, 0.5);
    GraphCtx<double> g1(f.store), g2(f.store);
    auto a = f.stem.tokenize(g1, constant(raster.clone()));
    auto b = f.stem.tokenize(g2, constant(raster.clone()));
    CHECK(*a.tokens->val.buf == *b.tokens->val.buf);
}

TEST_CASE("full-stride translation permutes pre-embedding features") {
    StemFixture f;
    auto raster = randn({3, 96, 96}, 11, 0.5);
    // cyclic shift right by one stride cell (32 px)
    Tensor<double> shifted({3, 96, 96});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 96; ++y)
            for (int x = 0; x < 96; ++x)
                shifted.data()[(c * 96 + y) * 96 + (x + 32) % 96] =
                    raster.data()[(c * 96 + y) * 96 + x];
    GraphCtx<double> g(f.store);
    auto base = f.stem.features(g, constant(raster.clone()));
    auto moved = f.stem.features(g, constant(shifted));
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x)
            for (int d = 0; d < 8; ++d)
                CHECK(moved->val.at(y * 3 + (x + 1) % 3, d) ==
                      doctest::Approx(base->val.at(y * 3 + x, d)).epsilon(1e-12));
}
