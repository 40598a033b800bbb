#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "testutil.hpp"

#include "ager/autodiff.hpp"

using namespace ager;
using agertest::grad_check;
using agertest::randn;

namespace {

// readout that turns any tensor into a scalar with fixed random weights
Var<double> readout(const Var<double>& x, uint64_t seed) {
    auto w = constant(randn(x->val.shape, seed));
    return sum_all(mul(x, w));
}

ParamStore<double> store_with(const std::vector<std::pair<std::string, Tensor<double>>>& params) {
    ParamStore<double> s;
    for (auto& [name, value] : params) s.add(name, value.clone());
    return s;
}

}  // namespace

TEST_CASE("elementwise and broadcast op gradients") {
    auto s = store_with({{"a", randn({3, 4}, 1)},
                         {"b", randn({3, 4}, 2)},
                         {"v", randn({1, 4}, 3)},
                         {"c", randn({3, 1}, 4, 0.3)}});
    const int a = 0, b = 1, v = 2, c = 3;

    auto check = [&](const char* tag,
                     std::function<Var<double>(GraphCtx<double>&)> fn) {
        auto rep = grad_check(s, fn);
        INFO(tag << " worst=" << rep.worst_param << " ad=" << rep.ad_at_worst
                 << " fd=" << rep.fd_at_worst);
        CHECK(rep.max_rel < 1e-4);
    };

    check("add", [&](GraphCtx<double>& g) { return readout(add(g.p(a), g.p(b)), 10); });
    check("sub", [&](GraphCtx<double>& g) { return readout(sub(g.p(a), g.p(b)), 11); });
    check("mul", [&](GraphCtx<double>& g) { return readout(mul(g.p(a), g.p(b)), 12); });
    check("neg", [&](GraphCtx<double>& g) { return readout(neg(g.p(a)), 13); });
    check("scale", [&](GraphCtx<double>& g) { return readout(scale(g.p(a), 1.7), 14); });
    check("add_rowvec",
          [&](GraphCtx<double>& g) { return readout(add_rowvec(g.p(a), g.p(v)), 15); });
    check("mul_cols", [&](GraphCtx<double>& g) { return readout(mul_cols(g.p(a), g.p(c)), 16); });
    check("div_cols", [&](GraphCtx<double>& g) {
        auto den = add(mul(g.p(c), g.p(c)), constant(Tensor<double>::full({3, 1}, 0.5)));
        return readout(div_cols(g.p(a), den), 17);
    });
    check("div", [&](GraphCtx<double>& g) {
        auto den = add(mul(g.p(b), g.p(b)), constant(Tensor<double>::full({3, 4}, 0.5)));
        return readout(div(g.p(a), den), 18);
    });
}

TEST_CASE("matmul gradients in all transpose modes") {
    auto s = store_with({{"a", randn({3, 5}, 21)}, {"b", randn({5, 4}, 22)}});
    auto rep = grad_check(s, [](GraphCtx<double>& g) {
        return readout(matmul(g.p(0), g.p(1)), 30);
    });
    CHECK(rep.max_rel < 1e-4);

    auto s2 = store_with({{"a", randn({5, 3}, 23)}, {"b", randn({5, 4}, 24)}});
    rep = grad_check(s2, [](GraphCtx<double>& g) {
        return readout(matmul(g.p(0), g.p(1), true, false), 31);
    });
    CHECK(rep.max_rel < 1e-4);

    auto s3 = store_with({{"a", randn({3, 5}, 25)}, {"b", randn({4, 5}, 26)}});
    rep = grad_check(s3, [](GraphCtx<double>& g) {
        return readout(matmul(g.p(0), g.p(1), false, true), 32);
    });
    CHECK(rep.max_rel < 1e-4);

    auto s4 = store_with({{"a", randn({5, 3}, 27)}, {"b", randn({4, 5}, 28)}});
    rep = grad_check(s4, [](GraphCtx<double>& g) {
        return readout(matmul(g.p(0), g.p(1), true, true), 33);
    });
    CHECK(rep.max_rel < 1e-4);

    CHECK_THROWS_AS(([&] {
                        GraphCtx<double> g(s4);
                        matmul(g.p(0), g.p(1));
                    }()),
                    ShapeError);
}

TEST_CASE("softmax, layernorm and activations") {
    auto s = store_with({{"x", randn({4, 6}, 41)},
                         {"gamma", randn({1, 6}, 42, 0.2)},
                         {"beta", randn({1, 6}, 43, 0.2)}});

    auto rep = grad_check(
        s, [](GraphCtx<double>& g) { return readout(softmax_rows(g.p(0)), 50); });
    CHECK(rep.max_rel < 1e-4);

    rep = grad_check(s, [](GraphCtx<double>& g) { return readout(softmax_cols(g.p(0)), 51); });
    CHECK(rep.max_rel < 1e-4);

    rep = grad_check(s, [](GraphCtx<double>& g) {
        return readout(layer_norm_rows(g.p(0), g.p(1), g.p(2)), 52);
    });
    CHECK(rep.max_rel < 1e-4);

    rep = grad_check(s, [](GraphCtx<double>& g) { return readout(gelu(g.p(0)), 53); });
    CHECK(rep.max_rel < 1e-4);

    rep = grad_check(s, [](GraphCtx<double>& g) { return readout(sigmoid(g.p(0)), 54); });
    CHECK(rep.max_rel < 1e-4);

    rep = grad_check(s, [](GraphCtx<double>& g) {
        return readout(log_op(clamp_min(sigmoid(g.p(0)), 1e-12)), 55);
    });
    CHECK(rep.max_rel < 1e-4);

    rep = grad_check(s, [](GraphCtx<double>& g) {
        return readout(sqrt_op(add(mul(g.p(0), g.p(0)),
                                   constant(Tensor<double>::full({4, 6}, 0.1)))),
                       56);
    });
    CHECK(rep.max_rel < 1e-4);

    rep = grad_check(s, [](GraphCtx<double>& g) {
        return readout(pow_const(sigmoid(g.p(0)), 2.0), 57);
    });
    CHECK(rep.max_rel < 1e-4);

    // softmax rows sum to one
    GraphCtx<double> g(s);
    auto sm = softmax_rows(g.p(0));
    for (int i = 0; i < 4; ++i) CHECK(sm->val.mat().row(i).sum() == doctest::Approx(1.0));
}

TEST_CASE("shape ops, reductions and gathers") {
    auto s = store_with({{"a", randn({4, 3}, 61)}, {"b", randn({2, 3}, 62)}});

    auto rep = grad_check(s, [](GraphCtx<double>& g) {
        return readout(concat_rows<double>({g.p(0), g.p(1)}), 70);
    });
    CHECK(rep.max_rel < 1e-4);

    rep = grad_check(s, [](GraphCtx<double>& g) {
        return readout(concat_cols<double>({g.p(0), slice_rows(g.p(0), 0, 4)}), 71);
    });
    CHECK(rep.max_rel < 1e-4);

    rep = grad_check(s, [](GraphCtx<double>& g) {
        return readout(slice_cols(slice_rows(g.p(0), 1, 2), 1, 2), 72);
    });
    CHECK(rep.max_rel < 1e-4);

    rep = grad_check(s, [](GraphCtx<double>& g) {
        return readout(gather_rows(g.p(0), {2, 0, 2}), 73);
    });
    CHECK(rep.max_rel < 1e-4);

    rep = grad_check(s, [](GraphCtx<double>& g) {
        return readout(select_entries(g.p(0), {{0, 1}, {3, 2}, {0, 1}}), 74);
    });
    CHECK(rep.max_rel < 1e-4);

    rep = grad_check(s, [](GraphCtx<double>& g) { return readout(transpose(g.p(0)), 75); });
    CHECK(rep.max_rel < 1e-4);

    rep = grad_check(s, [](GraphCtx<double>& g) {
        return readout(reshape(g.p(0), {2, 6}), 76);
    });
    CHECK(rep.max_rel < 1e-4);

    rep = grad_check(s, [](GraphCtx<double>& g) { return readout(row_sum(g.p(0)), 77); });
    CHECK(rep.max_rel < 1e-4);

    rep = grad_check(s, [](GraphCtx<double>& g) {
        return readout(row_dot(g.p(0), slice_rows(concat_rows<double>({g.p(0), g.p(0)}), 2, 4)),
                       78);
    });
    CHECK(rep.max_rel < 1e-4);

    rep = grad_check(s, [](GraphCtx<double>& g) { return mean_all(mul(g.p(0), g.p(0))); });
    CHECK(rep.max_rel < 1e-4);
}

TEST_CASE("patchify and to_chw round a conv stem") {
    auto s = store_with({{"img", randn({3, 8, 8}, 81)}, {"w", randn({5, 3 * 4 * 4}, 82, 0.2)}});
    auto rep = grad_check(s, [](GraphCtx<double>& g) {
        auto cols = patchify(g.p(0), 4);           // [4, 48]
        auto feat = matmul(cols, g.p(1), false, true);  // [4, 5]
        auto chw = to_chw(feat, 2, 2);             // [5, 2, 2]
        return readout(reshape(chw, {5, 4}), 90);
    });
    CHECK(rep.max_rel < 1e-4);
}

TEST_CASE("detach blocks gradient flow") {
    auto s = store_with({{"x", randn({3, 3}, 91)}});
    GraphCtx<double> g(s);
    auto x = g.p(0);
    auto loss = sum_all(mul(detach(x), x));
    backward(loss);
    // d/dx [sg(x) * x] = sg(x): gradient equals the values, not 2x
    CHECK(g.grad_of(0) != nullptr);
    for (int64_t k = 0; k < 9; ++k)
        CHECK(g.grad_of(0)->operator[](k) == doctest::Approx(x->val[k]));
}

TEST_CASE("diamond graphs accumulate correctly") {
    auto s = store_with({{"x", randn({2, 2}, 95)}});
    auto rep = grad_check(s, [](GraphCtx<double>& g) {
        auto x = g.p(0);
        auto y = add(x, x);
        return sum_all(mul(y, mul(x, x)));
    });
    CHECK(rep.max_rel < 1e-4);
}
