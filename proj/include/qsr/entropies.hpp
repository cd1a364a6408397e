#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsr/sdp.hpp"
#include "qsr/states.hpp"

namespace qsr {

// Extended real line; +infinity is a tagged value, never a float infinity.
struct ExtReal {
    double value = 0.0;
    bool finite = true;

    static ExtReal infinity() { return {0.0, false}; }
    static ExtReal of(double v) { return {v, true}; }
    bool operator<(const ExtReal& o) const {
        if (!finite) return false;
        if (!o.finite) return true;
        return value < o.value;
    }
};

struct EntropyReport {
    std::string quantity;
    ExtReal value;  // bits
    std::optional<ComplexMatrix> witness;
    int iterations = 0;
    double duality_gap = 0.0;
};

// S(rho) = -Tr(rho log rho), base 2
double von_neumann(const DensityOperator& rho);

// D(rho || sigma); infinite when rho has weight outside supp(sigma)
ExtReal rel_entropy(const DensityOperator& rho, const DensityOperator& sigma);

// V(rho || sigma) = Tr(rho (log rho - log sigma)^2) - D^2
double rel_entropy_variance(const DensityOperator& rho, const DensityOperator& sigma);

// D_max(rho || sigma) = log2 lambda_max(sigma^-1/2 rho sigma^-1/2)
ExtReal d_max(const DensityOperator& rho, const DensityOperator& sigma);

struct HypTestResult {
    ExtReal value;          // bits
    ComplexMatrix test_op;  // 0 <= Pi <= 1, Tr(Pi rho) = 1 - eps
    double pass_prob;       // Tr(Pi rho)
    double sigma_weight;    // Tr(Pi sigma)
};

// Quantum Neyman-Pearson optimum of sup log 1/Tr(Pi sigma) over tests with
// Tr(Pi rho) >= 1 - eps. Fractional weight on degenerate threshold
// eigenspaces is spread uniformly.
HypTestResult d_hyp(const DensityOperator& rho, const DensityOperator& sigma, double eps);

// Same optimum through the semidefinite program (cross-validation route).
// The default tolerances are tighter than the generic solver's so the value
// is comparable against the exact test at the 1e-5 level and better.
double d_hyp_sdp(const DensityOperator& rho, const DensityOperator& sigma, double eps,
                 const SdpOptions& opts = {1e-10, 1e-9, 300});

struct SmoothResult {
    double value = 0.0;  // bits
    std::optional<DensityOperator> witness;
    int iterations = 0;
    double duality_gap = 0.0;
};

// D_max^eps via SDP over normalized states within fidelity sqrt(1-eps^2).
SmoothResult d_max_smooth(const DensityOperator& rho, const DensityOperator& sigma, double eps);

// I(R:C|B) = S(RB) + S(BC) - S(B) - S(RBC)
double cond_mutual_info(const DensityOperator& rho, const std::vector<std::string>& r_labels,
                        const std::vector<std::string>& b_labels,
                        const std::vector<std::string>& c_labels);

// I_max(A:B) = min_sigma D_max(rho^AB || rho^A x sigma^B), as min Tr Y over
// rho^AB <= rho^A x Y.
SmoothResult i_max(const DensityOperator& rho, const std::vector<std::string>& a_labels,
                   const std::vector<std::string>& b_labels);
// Smoothed variant over the purified-distance ball (reference marginal kept
// at rho^A).
SmoothResult i_max_smooth(const DensityOperator& rho, const std::vector<std::string>& a_labels,
                          const std::vector<std::string>& b_labels, double eps);

enum class SecondOrderKind { dmax, dhyp };

// Leading two terms n D +- sqrt(n V) InvPhi(.) of the finite-n expansions.
double second_order_estimate(const DensityOperator& rho, const DensityOperator& sigma, std::size_t n,
                             double eps, SecondOrderKind kind);

struct PartialSmoothingReport {
    double lhs = 0.0;  // constrained-marginal smoothing of D_max
    double rhs = 0.0;  // D_max^eps + log (8+delta^2)/delta^2
    bool holds = false;
};

// inf over states in B^{2eps+delta} with fixed A-marginal of
// D_max(. || rho^A x sigma^B)  <=  D_max^eps(rho || rho^A x sigma^B) + log (8+d^2)/d^2
PartialSmoothingReport partial_smoothing_check(const DensityOperator& rho_ab,
                                               const std::vector<std::string>& a_labels,
                                               const DensityOperator& sigma_b, double eps,
                                               double delta);

// Inverse standard normal CDF, |error| < 1e-10 (rational seed + Newton).
double inverse_normal_cdf(double p);

}  // namespace qsr
