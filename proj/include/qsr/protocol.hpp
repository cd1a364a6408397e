#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsr/embezzle.hpp"
#include "qsr/entropies.hpp"
#include "qsr/markov.hpp"

namespace qsr {

struct CostLedger {
    double qubits_sent = 0.0;        // quantum communication (superdense-coded moves included)
    double sd_classical_bits = 0.0;  // classical bits carried by superdense coding
    double ebits_consumed = 0.0;     // informational: shared entanglement used up
};

struct TranscriptStep {
    std::string name;
    std::string owner;  // alice | bob | both | resource
    std::vector<std::string> registers;
};

struct ProtocolTranscript {
    std::vector<TranscriptStep> steps;
    CostLedger cost;
    std::string message_register;
    double achieved_p = 0.0;   // certified distance of the output to the target
    double measured_p = 0.0;   // directly simulated component
    double prep_bound = 0.0;   // convex-split preparation bound (when not simulated exactly)
    double full_state_p = 0.0; // includes catalyst restoration
    double error_budget = 0.0;
    double bound_bits = 0.0;   // evaluated cost bound for this run
    std::size_t m = 0;         // decoy copies
    std::size_t b = 0;         // decoding window
    double beta_bits = 0.0;
    double dh_bits = 0.0;
    double delta1 = 0.0;       // achieved conditional-embezzlement error
    double pbd_success = 0.0;
    double rationalize_residual = 0.0;
    std::string notes;
};

struct RedistributionInstance {
    PureState psi;  // on (R, A, B, C)
    double eps1 = 0.0;
    double eps2 = 0.5;
    std::optional<DensityOperator> psi_prime;      // on (R, B, C)
    std::optional<MarkovDecomposition> sigma;

    void validate() const;
};

// ---------------------------------------------------------------------------
// building blocks

// P_{a,b} = sum_f exp(2 pi i f b / dim) |f+a><f|
ComplexMatrix heisenberg_weyl(std::size_t a, std::size_t b, std::size_t dim);

// (1/n) sum_j rho^{A B_j} x sigma^{x(n-1)} on (A..., B1..Bn)
DensityOperator convex_split_state(const DensityOperator& rho_ab, const std::string& b_label,
                                   const DensityOperator& sigma_b, std::size_t n,
                                   std::size_t dim_cap = kDefaultDimCap);

struct ConvexSplitReport {
    double k_bits = 0.0;    // D_max(rho^AB || rho^A x sigma)
    std::size_t n = 0;      // ceil(2^k / delta)
    double achieved_p = 0.0;
    double bound = 0.0;     // sqrt(delta)
};
ConvexSplitReport convex_split_check(const DensityOperator& rho_ab, const std::string& b_label,
                                     const DensityOperator& sigma_b, double delta,
                                     std::size_t dim_cap = kDefaultDimCap);

struct PbdResult {
    std::vector<ComplexMatrix> povm;  // n+1 operators on (A..., B1..Bn)
    std::vector<double> success;      // Tr(Lambda_j tau_j), j = 1..n
    double dh_bits = 0.0;
    std::size_t n = 0;
    RegisterShape shape;
};
// Square-root measurement over per-position hypothesis tests; n = 0 selects
// ceil(eps 2^{D_H^eps}).
PbdResult pbd_povm(const DensityOperator& rho_ab, const std::string& b_label,
                   const DensityOperator& sigma_b, double eps, std::size_t n = 0,
                   std::size_t dim_cap = kDefaultDimCap);

struct CoherentMeasureReport {
    PureState post;                    // U1 (psi x Phi^{FF'})
    double decoherence_residual = 0.0; // off-diagonal J weight left in the marginal
    double invariance_residual = 0.0;  // || U1 (sigma1 x 1/F) U1^dag - sigma1 x 1/F ||_max
};
// U1 = sum_j |j><j|^J x P_{j,0}^F applied after adjoining a maximally
// entangled (F, F') pair; measures J coherently while fixing block-diagonal
// references.
CoherentMeasureReport coherent_measure_j(const PureState& psi, const std::string& j_label,
                                         const DensityOperator& sigma1_reference);

// ---------------------------------------------------------------------------
// protocol runners

struct SplitRunOutcome {
    ProtocolTranscript transcript;
    PureState state;  // live registers after the run (pointer register "PTR" appended)
};

// Convex-split + position-based-decoding redistribution of the `transfer`
// group from Alice to Bob. The decoy state sigma_ct lives on the transfer
// registers (same order). Decoy slots outside the decoding window are
// untouched by every later operation and trace out exactly; with a window of
// one the branches are orthogonal in the position label, so the live factor
// evolves exactly (decoys enter the ledger and the preparation bound).
struct SplitRunInputs {
    PureState state;
    std::vector<std::string> referee;
    std::vector<std::string> bob;
    std::vector<std::string> transfer;
    DensityOperator sigma_ct;
    std::optional<DensityOperator> psi_prime;  // on (referee..., bob..., transfer...)
    double eps = 0.5;
    std::size_t dim_cap = kDefaultDimCap;
};
SplitRunOutcome run_convex_split_protocol(const SplitRunInputs& in);

// Plain one-shot redistribution of C via the convex-split protocol.
ProtocolTranscript redistribute_convex_split(const RedistributionInstance& inst,
                                    const DensityOperator& sigma_c,
                                    std::size_t dim_cap = kDefaultDimCap);

// Zero-communication redistribution of Markov states by conditional
// embezzlement.
ProtocolTranscript run_zero_cost_markov(const RedistributionInstance& inst, std::size_t n_embezzle,
                                        std::size_t dim_cap = kDefaultDimCap);

struct MainRunOptions {
    double delta2 = 0.5;         // catalyst exponent: n2 = a2^(1/delta2)
    std::size_t a2_max = 64;     // search cap for |B^C C| / gamma2
    std::size_t n2_cap = 64;     // decoupling catalyst cap
    std::size_t n1_embezzle = 64;  // step-ii catalyst
    std::size_t dim_cap = kDefaultDimCap;
    bool check_claims = true;
};

struct ClaimSlacks {
    double dmax_slack = 0.0;  // D_max(psi'||sigma) + 5 delta2 - D_max(kappa2 || product)
    double dh_slack = 0.0;    // D_H^{e2^2}(kappa2||product) - D_H^{e2^4/4}(psi'||sigma) + 1
    double dmax_kappa = 0.0, dmax_psi = 0.0, dh_kappa = 0.0, dh_psi = 0.0;
};

struct MainRunResult {
    ProtocolTranscript transcript;
    std::optional<ClaimSlacks> claims;
};

// Full redistribution protocol: block-structure isometry, conditional
// transfer of B^C, coherent measurement of J, classical-quantum decoupling,
// convex-split subroutine against the decoupled product reference, inverses.
MainRunResult run_redistribution(const RedistributionInstance& inst,
                                 const MainRunOptions& opts = {});

// ---------------------------------------------------------------------------
// cost bounds

struct BoundCandidate {
    DensityOperator psi_prime;  // on (R, B, C)
    MarkovDecomposition sigma;
};

struct BoundReport {
    double new_bound = 0.0;          // 1/2 min bracket + log(1/e2^2) + 1
    double product_bound = 0.0;          // 1/2 run bracket + log(1/e2^2)
    double new_bracket_half = 0.0;   // comparable at equal overheads
    double product_bracket_half = 0.0;
    std::size_t best_candidate = 0;
    std::vector<double> candidate_brackets;
};

// Evaluates the Markov-extension cost bound over the supplied candidates and
// the product-reference bound with sigma^C = psi'^C.
BoundReport evaluate_cost_bounds(const DensityOperator& psi_rbc, double eps2,
                                 const std::vector<BoundCandidate>& candidates);

}  // namespace qsr
