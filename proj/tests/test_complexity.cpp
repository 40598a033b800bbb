#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ager/complexity.hpp"

#include <cmath>

using namespace ager;

namespace {

// independent term-by-term evaluation, written out longhand
double oracle_baseline(double n, double c, double nq) {
    const double enc = 6 * (4 * n * c * c + 2 * n * n * c);
    const double dec_sa = 6 * (4 * nq * c * c + 2 * nq * nq * c);
    const double dec_ca = 6 * (2 * nq * c * c + 2 * n * c * c + n * nq * c + n * n * c);
    return enc + dec_sa + dec_ca;
}

double oracle_agglomerative(double n, double c, double nq) {
    const double s1 = 4 * (4 * (n + 64 + 16) * c * c + 2 * (n + 80) * (n + 80) * c);
    const double s2 = 2 * (4 * (80 + 8 + 4) * c * c + 2 * 92 * 92 * c);
    const double dec_sa = 3 * (4 * nq * c * c + 2 * nq * nq * c);
    const double dec_ca = 3 * (2 * nq * c * c + 2 * 12 * c * c + 12 * nq * c + 12 * 12 * c);
    return s1 + s2 + dec_sa + dec_ca;
}

}  // namespace

TEST_CASE("hand-evaluated unit points") {
    CHECK(omega_baseline(1, 1, 1).total == 108.0);  // 36 + 36 + 36
    const auto ag = omega_agglomerative(1, 1, 36);
    CHECK(ag.terms[0].flops == 53784.0);
    CHECK(ag.terms[1].flops == 34592.0);
    CHECK(ag.terms[2].flops == 8208.0);
    CHECK(ag.terms[3].flops == 2016.0);
    CHECK(ag.total == 98600.0);
}

TEST_CASE("totals equal the sum of terms and match the oracle exactly") {
    for (auto [n, c] : {std::pair<double, double>{1, 1}, {400, 256}, {1600, 256}, {25, 64}}) {
        const auto b = omega_baseline(n, c, 100);
        double sum = 0;
        for (const auto& t : b.terms) sum += t.flops;
        CHECK(b.total == sum);
        CHECK(b.total == oracle_baseline(n, c, 100));
        const auto a = omega_agglomerative(n, c, 36);
        sum = 0;
        for (const auto& t : a.terms) sum += t.flops;
        CHECK(a.total == sum);
        CHECK(a.total == oracle_agglomerative(n, c, 36));
    }
}

TEST_CASE("scaling behavior") {
    // doubling C multiplies the 4NC^2 encoder term by 4
    const auto b1 = omega_baseline(50, 100, 100);
    const auto b2 = omega_baseline(50, 200, 100);
    const double t1 = 6 * 4 * 50 * 100.0 * 100.0;
    const double t2 = 6 * 4 * 50 * 200.0 * 200.0;
    CHECK(t2 == 4 * t1);
    CHECK(b2.total > b1.total);

    // only the first agglomerative term depends on N
    const auto a1 = omega_agglomerative(100, 256, 36);
    const auto a2 = omega_agglomerative(1000, 256, 36);
    CHECK(a1.terms[0].flops != a2.terms[0].flops);
    for (size_t i = 1; i < a1.terms.size(); ++i) CHECK(a1.terms[i].flops == a2.terms[i].flops);

    // monotone in each argument
    CHECK(omega_baseline(101, 256, 100).total > omega_baseline(100, 256, 100).total);
    CHECK(omega_baseline(100, 257, 100).total > omega_baseline(100, 256, 100).total);
    CHECK(omega_baseline(100, 256, 101).total > omega_baseline(100, 256, 100).total);
    CHECK(omega_agglomerative(101, 256, 36).total > omega_agglomerative(100, 256, 36).total);
    CHECK(omega_agglomerative(100, 257, 36).total > omega_agglomerative(100, 256, 36).total);
    CHECK(omega_agglomerative(100, 256, 37).total > omega_agglomerative(100, 256, 36).total);
}

TEST_CASE("difference quadratic: coefficients and roots") {
    const auto cr = crossover(256);
    // leading coefficient is (18 - 8) C = 10 C > 0
    CHECK(cr.quad_coeff == doctest::Approx(10.0 * 256));
    CHECK(cr.lin_coeff == doctest::Approx(20.0 * 256 * 256 - 680 * 256));
    CHECK(cr.const_coeff == doctest::Approx(864.0 * 256 * 256 + 25440 * 256));
    // both roots are negative: the difference is positive for every N >= 1.
    // Note: evaluating the paper's printed formulas puts the larger root
    // near -65, not the -71 the paper reports; see the acceptance suite.
    CHECK(cr.root < 0);
    CHECK(cr.other_root < cr.root);
    CHECK(cr.positive_for_all_n);
    CHECK(cr.root == doctest::Approx(-65.087).epsilon(0.01));

    // difference positive at the probe points
    CHECK(omega_baseline(1, 256, 100).total > omega_agglomerative(1, 256, 36).total);
    CHECK(omega_baseline(1e6, 256, 100).total > omega_agglomerative(1e6, 256, 36).total);
}

TEST_CASE("difference positive across the whole integer range") {
    for (int64_t n = 1; n <= 1000000; n = n < 100 ? n + 1 : n * 2) {
        CHECK(omega_baseline(static_cast<double>(n), 256, 100).total >
              omega_agglomerative(static_cast<double>(n), 256, 36).total);
    }
}
