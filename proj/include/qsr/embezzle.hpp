#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsr/states.hpp"

namespace qsr {

struct EmbezzleSpec {
    std::size_t a = 1;
    std::size_t b = 1;
    std::size_t n = 1;
    double delta = 0.1;   // lemma regime is (0, 1/15); checks accept any (0,1)
    double gamma = 0.5;   // in (0,1)
    std::size_t dim_d = 1, dim_dp = 1, dim_e = 1;

    void validate() const;  // a >= b >= 1, n >= a^(1/delta), |E| >= b, |D| >= n
};

// S(a, n) = sum_{i=a}^n 1/i
double harmonic_range(std::size_t a, std::size_t n);

// (1/sqrt(S(a,n))) sum_{i=a}^n |i>|i>/sqrt(i) on registers of dimension n;
// the ket |i> is stored at index i-1.
PureState xi_state(std::size_t a, std::size_t n, const std::string& label_d = "D",
                   const std::string& label_dp = "Dp");
// Value-indexed variant on registers of dimension n+1 (ket |i> at index i),
// matching the 0-based convention of the W_b gadget.
PureState xi_state_value_indexed(std::size_t a, std::size_t n, const std::string& label_d,
                                 const std::string& label_dp);
// Diagonal of the single-sided marginal, value-indexed (length n+1).
std::vector<double> xi_marginal_value_indexed(std::size_t a, std::size_t n);

// W_b as a permutation of the (D, E) product space (index d * dim_e + e):
// the e = 0 slice maps |i>|0> -> ||i/b|>|i mod b>, the rest is filled along
// the remaining cells in order.
std::vector<std::size_t> w_b_permutation(std::size_t b, std::size_t dim_d, std::size_t dim_e);
ComplexMatrix w_b_unitary(std::size_t b, std::size_t dim_d, std::size_t dim_e);

struct UnifEmbezzleReport {
    double slack1 = 0.0;  // min cell of (1+15d) xi_1n x mu_b - W(xi_an x |0><0|)W^dag
    double slack2 = 0.0;  // min cell of 2 W(...)W^dag - Pi(xi_1n x mu_b)Pi
    double s_ratio = 0.0;
    double trace = 0.0;
};
// Both operator inequalities of the uniform-embezzlement lemma, evaluated by
// direct diagonal arithmetic.
UnifEmbezzleReport unif_embezzle_check(std::size_t a, std::size_t b, std::size_t n, double delta);

struct FlattenResult {
    std::size_t a = 1;               // |C|/gamma
    std::size_t n = 1;               // catalyst size
    std::vector<std::size_t> b_of_c;  // per eigenvalue, q(c) * a
    ComplexMatrix eigvecs;            // columns |v_c>
    DensityOperator flat_extension;   // on (C, E), all nonzero eigenvalues = 1/a
    double slack1 = 0.0, slack2 = 0.0;
    std::vector<std::vector<std::size_t>> perm_w;  // per c, permutation of (D, E) values
};
// Coherent flattening: W = sum_c |v_c><v_c| x W_{b(c)}. Eigenvalues must be
// integer multiples of gamma/|C| (use spectrum_rationalize first).
FlattenResult flatten_unitary(const DensityOperator& rho_c, double gamma, double delta,
                              std::size_t n_cap = 4096);

// A classical-quantum state as explicit blocks (all on the same C shape).
struct CqState {
    std::vector<double> p;
    std::vector<DensityOperator> rho_j;
};
CqState split_cq(const DensityOperator& rho, const std::string& j_label);

struct DecoupleResult {
    std::size_t a = 1, n = 1;
    double gamma = 0.0, delta = 0.0;
    // U = U2 U1 applied per block j of the control register:
    //   rot_j: C-basis change, canonical <- eigenbasis of rho_j (apply dagger first)
    //   perm_w_j: c-controlled W_{b_j(c)} as a permutation of (C, E, D) values
    //   perm_v_j: support-cell relabeling of (C, E) onto the first a cells
    std::vector<ComplexMatrix> rot_j;
    std::vector<std::vector<std::size_t>> perm_w_j;
    std::vector<std::vector<std::size_t>> perm_v_j;
    std::vector<std::vector<std::size_t>> b_of_c_j;
    DensityOperator nu_ce;  // (1/a) sum_{s<a} |s><s| on (C, E)
    double slack1 = 0.0;    // decoupling upper operator inequality
    double slack2 = 0.0;    // projected lower operator inequality
    double trace_check = 0.0;  // support projector catches all the mass
};
// Unitary, read-only on J, flattening every rho_j and rotating the flat
// supports onto a common subspace so that J decouples from (C, E).
// n_override pins the catalyst size (>= a) instead of a^(1/delta); the
// operator inequalities are still checked at the actual parameters.
DecoupleResult decouple_cq(const CqState& cq, double gamma, double delta, std::size_t n_cap = 4096,
                           std::size_t n_override = 0);

struct RationalizeResult {
    DensityOperator state;
    double residual = 0.0;  // purified distance to the input
};
// Eigenvalues rounded to multiples of gamma/|C|, renormalized by
// largest-remainder apportionment.
RationalizeResult spectrum_rationalize(const DensityOperator& rho, double gamma, std::size_t dim_c);

// van Dam-Hayden embezzlement of a bipartite pure state from xi_{1:n}.
struct VdhEmbezzle {
    std::size_t n = 1;
    std::size_t schmidt_rank = 1;
    double achieved_p = 0.0;   // exact, from the sorted coefficient overlap
    double fidelity = 1.0;
    // U_A = (1 x R_A) P_A on (D, A'), U_B likewise on (D', B'); P is a
    // permutation of the (D x side) index space (D of dimension n, |i> at
    // index i-1), R rotates the canonical basis into the Schmidt basis.
    std::vector<std::size_t> perm_a, perm_b;
    ComplexMatrix rot_a, rot_b;
    std::size_t dim_a_side = 1, dim_b_side = 1;
};
VdhEmbezzle vdh_embezzle(const PureState& phi, const std::vector<std::string>& alice_labels,
                         std::size_t n);

// Applies the embezzlement unitary pair to a state holding the catalyst
// registers (label_d with Alice, label_dp with Bob) and the target registers.
// direction=false embezzles in (|xi>|0...0> -> ~ |xi>|phi>), true reverses.
void apply_vdh(PureState& s, const VdhEmbezzle& emb, const std::string& label_d,
               const std::vector<std::string>& alice_regs, const std::string& label_dp,
               const std::vector<std::string>& bob_regs, bool out_direction);

// Controlled variant: one embezzlement per value of the (equal-valued)
// control registers held by the two parties.
void apply_vdh_controlled(PureState& s, const std::vector<VdhEmbezzle>& embs,
                          const std::string& ctrl_alice, const std::string& ctrl_bob,
                          const std::string& label_d, const std::vector<std::string>& alice_regs,
                          const std::string& label_dp, const std::vector<std::string>& bob_regs,
                          bool out_direction);

}  // namespace qsr
