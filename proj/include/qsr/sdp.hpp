#pragma once

#include <vector>

#include "qsr/linalg.hpp"

namespace qsr {

// min <C, X>  s.t.  <A_i, X> = b_i,  X >= 0
// X is a direct sum of Hermitian blocks; inner product is Re Tr(A B).
struct SdpProblem {
    std::vector<std::size_t> block_dims;
    std::vector<ComplexMatrix> objective;  // one per block
    struct Constraint {
        std::vector<ComplexMatrix> blocks;  // one per block (zero matrices allowed)
        double rhs = 0.0;
    };
    std::vector<Constraint> constraints;

    std::size_t add_block(std::size_t dim);
    void set_objective(std::size_t block, const ComplexMatrix& c);
    Constraint& new_constraint(double rhs);
    std::size_t total_dim() const;
};

struct SdpSolution {
    std::vector<ComplexMatrix> x;
    std::vector<double> y;
    double primal_obj = 0.0;
    double dual_obj = 0.0;
    double gap = 0.0;
    int iterations = 0;
};

struct SdpOptions {
    double gap_tol = 1e-7;
    double feas_tol = 1e-8;
    int max_iterations = 200;
};

// Infeasible-start primal-dual path following (HKM direction with a Mehrotra
// predictor-corrector). Throws SolverStatus when it cannot reach the target
// duality gap.
SdpSolution sdp_min(const SdpProblem& prob, const SdpOptions& opts = {});

// Appends the d x d real-basis equality constraints <H_k, expr> = <H_k, rhs>
// for every Hermitian basis element H_k; `expr` is given per constraint by a
// callback that fills the per-block coefficient matrices.
std::vector<ComplexMatrix> hermitian_basis(std::size_t dim);

}  // namespace qsr
