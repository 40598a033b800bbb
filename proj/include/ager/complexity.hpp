#pragma once

// Closed-form attention-FLOP models for the baseline DETR-like HOI pipeline
// (6-layer encoder, 6-layer decoder, N_q queries) and the agglomerative
// pipeline (4+2 stage encoder with fixed center counts, 3-layer decoder).
// These count attention-dominated FLOPs only; whole-model GFLOPs (backbone,
// heads) are deliberately not modeled.

#include <string>
#include <vector>

namespace ager {

struct ComplexityReport {
    struct Term {
        std::string label;
        double flops = 0.0;
    };
    std::vector<Term> terms;
    double total = 0.0;
    double n_tokens = 0.0, dim = 0.0, n_queries = 0.0;
};

// 6(4NC^2 + 2N^2C) + 6(4NqC^2 + 2Nq^2C) + 6(2NqC^2 + 2NC^2 + N*Nq*C + N^2C)
ComplexityReport omega_baseline(double n_tokens, double dim, double n_queries = 100.0);

// 4[4(N+64+16)C^2 + 2(N+80)^2 C] + 2[4(80+8+4)C^2 + 2*92^2 C]
//   + 3(4NqC^2 + 2Nq^2C) + 3(2NqC^2 + 2*12C^2 + 12NqC + 12^2 C)
ComplexityReport omega_agglomerative(double n_tokens, double dim, double n_queries = 36.0);

struct CrossoverResult {
    double root = 0.0;            // larger real root of baseline(N) - agglomerative(N)
    double other_root = 0.0;
    bool positive_for_all_n = false;  // difference > 0 for every N >= 1
    double quad_coeff = 0.0, lin_coeff = 0.0, const_coeff = 0.0;
};

// Solves the quadratic difference in N (baseline N_q = 100, agglomerative
// N_q = 36). Throws DegenerateError if the difference is not quadratic.
CrossoverResult crossover(double dim = 256.0);

}  // namespace ager
