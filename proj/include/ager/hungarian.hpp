#pragma once

// Optimal bipartite assignment on square similarity matrices (maximization),
// plus the match bookkeeping used by the instance-matching losses.

#include <vector>

namespace ager {

// sim is row-major [n, n]; entry (i, k) scores ground truth i against
// prediction k. Returns sigma with sigma[i] = matched prediction index;
// sigma is a permutation maximizing the total similarity.
std::vector<int> hungarian_max(const std::vector<double>& sim, int n);

struct MatchAssignment {
    std::vector<int> sigma;   // gt slot (padded) -> prediction index
    int matched_gt_count = 0; // number of real (non-"nothing") ground truths
};

// Rows beyond n_real are "nothing" pads (similarity 0 against everything by
// contract). Pad rows are canonicalized so that increasing pad index maps to
// increasing prediction index.
MatchAssignment hungarian_match(const std::vector<double>& sim, int n, int n_real);

}  // namespace ager
