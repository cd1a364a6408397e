#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsr/entropies.hpp"
#include "qsr/states.hpp"

namespace qsr {

// One block of the direct-sum structure H^B = (+)_j H^{B_j^R} x H^{B_j^C}:
// within the block the state factorizes as rho_j^{R B_j^R} x rho_j^{B_j^C C}.
struct MarkovBlock {
    double p = 0.0;
    DensityOperator rho_r_br;  // on (R, BR), dims (dim_r, dim_br)
    DensityOperator rho_bc_c;  // on (BC, C), dims (dim_bc, dim_c)
    std::size_t dim_br = 1;
    std::size_t dim_bc = 1;
};

struct MarkovDecomposition {
    std::size_t dim_r = 1;
    std::size_t dim_c = 1;
    std::vector<MarkovBlock> blocks;

    std::size_t dim_b() const;
    std::size_t block_offset(std::size_t j) const;  // start index of block j inside B
    void validate() const;
    // projector onto block j's subspace of B
    ComplexMatrix block_projector(std::size_t j) const;
};

// (+)_j p_j rho_j^{R B_j^R} x rho_j^{B_j^C C} on registers (R, B, C);
// zero-probability blocks are dropped.
DensityOperator assemble(const MarkovDecomposition& decomp);

bool is_markov(const DensityOperator& sigma, const std::vector<std::string>& r_labels,
               const std::vector<std::string>& b_labels, const std::vector<std::string>& c_labels,
               double tol = 1e-8);

struct MarkovIdentityReport {
    double cmi = 0.0;       // I(R:C|B) of psi
    ExtReal difference;     // D(psi || sigma) - D(psi^BC || sigma^BC)
    bool support_violation = false;
};

// Both sides of I(R:C|B)_psi = D(psi||sigma) - D(psi^BC||sigma^BC) for a
// Markov extension sigma of psi^RB.
MarkovIdentityReport markov_identity_check(const DensityOperator& psi,
                                           const MarkovDecomposition& decomp);

// sigma := psi^RB x psi^C as a single-block decomposition
MarkovDecomposition product_extension(const DensityOperator& psi);

// Every block state on (B_j^C, C) within purified distance eps of the
// renormalized projected marginal of psi^BC. Blocks with negligible weight
// are skipped (and counted).
struct MeMembershipReport {
    bool member = true;
    std::vector<double> block_distances;
    std::size_t skipped_blocks = 0;
};
MeMembershipReport me_membership(const DensityOperator& psi, const MarkovDecomposition& decomp,
                                 double eps);

struct HjpwIsometries {
    ComplexMatrix v_b;  // basis isometry B -> (BR, J, BC), zero-padded block dims
    ComplexMatrix v_a;  // isometry A -> (AR, Jp, AC)
    std::size_t dim_br_max = 1;
    std::size_t dim_bc_max = 1;
    std::size_t dim_ar = 1;
    std::size_t dim_ac = 1;
    std::size_t num_blocks = 1;
    PureState canonical;  // sum_j sqrt(p_j)|phi_j>^{R AR BR}|jj>^{Jp J}|chi_j>^{AC BC C}
};

// Local isometries carrying a purification of assemble(decomp) into the
// canonical block form. psi must be a purification of the assembled state on
// registers (R, A, B, C).
HjpwIsometries hjpw_isometries(const MarkovDecomposition& decomp, const PureState& psi);

}  // namespace qsr
