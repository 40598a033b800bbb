#include "ager/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ager {

// Jonker-Volgenant style shortest augmenting path, O(n^3), exact.
// Solves the minimization problem; callers negate for maximization.
namespace {
std::vector<int> assign_min(const std::vector<double>& cost, int n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<size_t>(n) + 1, 0.0), v(static_cast<size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<size_t>(n) + 1, 0), way(static_cast<size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<size_t>(n) + 1, 0);
        do {
            used[static_cast<size_t>(j0)] = 1;
            const int i0 = p[static_cast<size_t>(j0)];
            double delta = inf;
            int j1 = -1;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                const double cur = cost[static_cast<size_t>(i0 - 1) * n + (j - 1)] -
                                   u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<size_t>(j0)];
            p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> sigma(static_cast<size_t>(n), -1);
    for (int j = 1; j <= n; ++j)
        if (p[static_cast<size_t>(j)] > 0) sigma[static_cast<size_t>(p[static_cast<size_t>(j)]) - 1] = j - 1;
    return sigma;
}
}  // namespace

std::vector<int> hungarian_max(const std::vector<double>& sim, int n) {
    std::vector<double> cost(sim.size());
    for (size_t i = 0; i < sim.size(); ++i) cost[i] = -sim[i];
    return assign_min(cost, n);
}

MatchAssignment hungarian_match(const std::vector<double>& sim, int n, int n_real) {
    MatchAssignment m;
    m.sigma = hungarian_max(sim, n);
    m.matched_gt_count = n_real;
    // pads are interchangeable (all-zero similarity rows): keep them in
    // index order against ascending prediction indices
    std::vector<int> pad_preds(m.sigma.begin() + n_real, m.sigma.end());
    std::sort(pad_preds.begin(), pad_preds.end());
    for (int i = n_real; i < n; ++i) m.sigma[static_cast<size_t>(i)] = pad_preds[static_cast<size_t>(i - n_real)];
    return m;
}

}  // namespace ager
