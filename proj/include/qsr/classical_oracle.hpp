#pragma once

#include <cstddef>
#include <vector>

#include "qsr/errors.hpp"

namespace qsr {

// One-shot quantities for commuting (diagonal) states, by likelihood-ratio
// sorting and water-filling. Inputs are probability vectors over a common
// alphabet; sub-cells with identical (p, q) may be merged with counts.

struct WeightedCell {
    double log_p;      // natural log of the per-cell p value (-inf for 0)
    double log_q;
    double log_count;  // natural log of the cell multiplicity
};

double classical_d_hyp(const std::vector<double>& p, const std::vector<double>& q, double eps);
double classical_d_max(const std::vector<double>& p, const std::vector<double>& q);
// min over distributions within fidelity sqrt(1-eps^2) of max_i p'_i/q_i, bits
double classical_d_max_smooth(const std::vector<double>& p, const std::vector<double>& q,
                              double eps);

double cells_d_hyp(std::vector<WeightedCell> cells, double eps);
double cells_d_max_smooth(std::vector<WeightedCell> cells, double eps);

// Type-class expansion of the n-fold product of a merged alphabet.
struct MergedAlphabet {
    std::vector<double> p, q;          // per-cell values
    std::vector<std::size_t> count;    // multiplicities
};
MergedAlphabet merge_cells(const std::vector<double>& p, const std::vector<double>& q,
                           double tol = 1e-12);
std::vector<WeightedCell> nfold_cells(const MergedAlphabet& alpha, std::size_t n,
                                      std::size_t max_types = 2000000);

}  // namespace qsr
