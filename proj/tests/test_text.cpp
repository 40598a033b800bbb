#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ager/errors.hpp"
#include "ager/scenes.hpp"
#include "ager/text_provider.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

using namespace ager;

namespace {
double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
}  // namespace

TEST_CASE("prompt template") {
    CHECK(TextProvider::prompt("bicycle") == "A photo of a bicycle");
    CHECK(TextProvider::prompt("human") == "A photo of a human");
    CHECK_THROWS_AS(TextProvider::prompt(""), EmptyNameError);
}

TEST_CASE("deterministic unit-norm embeddings") {
    SceneConfig sc;
    auto vocab = sc.class_names();
    vocab.push_back("human");
    TextProvider p1(42, 512, 64, vocab);
    TextProvider p2(42, 512, 64, vocab);

    auto a = p1.embed("A photo of a ball");
    auto b = p2.embed("A photo of a ball");
    CHECK(a.vector == b.vector);
    CHECK(std::abs(std::sqrt(dot(a.vector, a.vector)) - 1.0) < 1e-12);
    CHECK(a.source_prompt == "A photo of a ball");

    auto w1 = p1.word_vector("crate");
    auto w2 = p2.word_vector("crate");
    CHECK(w1 == w2);
    CHECK(std::abs(std::sqrt(dot(w1, w1)) - 1.0) < 1e-12);

    // arbitrary prompts are deterministic too
    CHECK(p1.embed("anything else").vector == p2.embed("anything else").vector);
}

TEST_CASE("vocabulary gram matrix is near-orthogonal") {
    SceneConfig sc;
    auto vocab = sc.class_names();
    vocab.push_back("human");
    TextProvider p(0, 512, 64, vocab);
    for (size_t i = 0; i < vocab.size(); ++i) {
        for (size_t j = i + 1; j < vocab.size(); ++j) {
            const double ct = dot(p.embed(TextProvider::prompt(vocab[i])).vector,
                                  p.embed(TextProvider::prompt(vocab[j])).vector);
            CHECK(std::abs(ct) < 0.3);
            const double cw = dot(p.word_vector(vocab[i]), p.word_vector(vocab[j]));
            CHECK(std::abs(cw) < 0.3);
            CHECK(p.word_vector(vocab[i]) != p.word_vector(vocab[j]));
        }
    }
}

TEST_CASE("near-orthogonality holds even in low dimension") {
    SceneConfig sc;
    TextProvider p(3, 8, 8, sc.class_names());
    auto names = sc.class_names();
    for (size_t i = 0; i < names.size(); ++i)
        for (size_t j = i + 1; j < names.size(); ++j)
            CHECK(std::abs(dot(p.embed(TextProvider::prompt(names[i])).vector,
                               p.embed(TextProvider::prompt(names[j])).vector)) < 0.3);
}

TEST_CASE("external table loading") {
    const char* path = "text_table_test.tsv";
    {
        std::ofstream out(path);
        out << "ball\t1.0,0.0,0.0,0.0\n";
        out << "crate\t0.0,2.0,0.0,0.0\n";
    }
    TextProvider p(0, 4, 4, {});
    p.load_table(path, "txt");
    auto e = p.embed("A photo of a ball");
    CHECK(e.vector == std::vector<double>{1.0, 0.0, 0.0, 0.0});
    // normalized on load
    auto c = p.embed("crate");
    CHECK(c.vector == std::vector<double>{0.0, 1.0, 0.0, 0.0});

    {
        std::ofstream out(path);
        out << "ball\t1.0,0.0\n";  // wrong dimensionality
    }
    TextProvider q(0, 4, 4, {});
    CHECK_THROWS_AS(q.load_table(path, "txt"), FormatError);

    {
        std::ofstream out(path);
        out << "ball 1.0,0.0,0.0,0.0\n";  // missing tab
    }
    CHECK_THROWS_AS(q.load_table(path, "txt"), FormatError);
    std::remove(path);
}
