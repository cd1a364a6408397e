#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsr/linalg.hpp"

namespace qsr {

struct DensityOperator {
    ComplexMatrix matrix;
    RegisterShape shape;
    bool subnormalized = false;

    DensityOperator() = default;
    DensityOperator(ComplexMatrix m, RegisterShape s, bool subnorm = false)
        : matrix(std::move(m)), shape(std::move(s)), subnormalized(subnorm) {}

    // Validating factory: Hermitian, eigenvalues >= -1e-9, trace 1 (or <= 1
    // when flagged sub-normalized).
    static DensityOperator checked(ComplexMatrix m, RegisterShape s, bool subnorm = false);

    std::size_t dim() const { return matrix.rows(); }
    double trace_real() const { return matrix.trace().real(); }

    DensityOperator reduced(const std::vector<std::string>& keep) const;
};

struct PureState {
    std::vector<cx> amplitudes;
    RegisterShape shape;

    PureState() = default;
    PureState(std::vector<cx> a, RegisterShape s) : amplitudes(std::move(a)), shape(std::move(s)) {}

    static PureState checked(std::vector<cx> a, RegisterShape s);
    static PureState basis(const RegisterShape& s, std::size_t index);

    std::size_t dim() const { return amplitudes.size(); }
    double norm() const;
    void normalize();

    DensityOperator density() const;
    DensityOperator reduced(const std::vector<std::string>& keep) const;
};

// ---------------------------------------------------------------------------
// register-level operator application (shared by the protocol simulators)

// Dense operator on the product of `regs` (in the order given).
void apply_dense(PureState& s, const std::vector<std::string>& regs, const ComplexMatrix& op);
// Basis relabeling |i> -> |map[i]> on the product of `regs`; map must be a bijection.
void apply_basis_map(PureState& s, const std::vector<std::string>& regs,
                     const std::vector<std::size_t>& map);
// Controlled dense: one operator per classical value of the control product space.
void apply_ctrl_dense(PureState& s, const std::vector<std::string>& ctrl,
                      const std::vector<std::string>& targets,
                      const std::vector<ComplexMatrix>& per_value);
void apply_ctrl_basis_map(PureState& s, const std::vector<std::string>& ctrl,
                          const std::vector<std::string>& targets,
                          const std::vector<std::vector<std::size_t>>& per_value);
// Replaces register `label` with `new_regs` through the isometry V
// (rows indexed by the new product space, columns by the old register).
void apply_isometry(PureState& s, const std::string& label,
                    const std::vector<RegisterShape::Reg>& new_regs, const ComplexMatrix& V);
// Group variant: replaces the product of `labels` (in the order given) with
// `new_regs`, which end up trailing in the new shape. Labels may be reused.
void apply_isometry_group(PureState& s, const std::vector<std::string>& labels,
                          const std::vector<RegisterShape::Reg>& new_regs, const ComplexMatrix& V);
// Marginal with registers in exactly the order listed.
DensityOperator ordered_marginal(const PureState& s, const std::vector<std::string>& order);
void rename_register(PureState& s, const std::string& old_label, const std::string& new_label);
// Adjoins a maximally entangled pair of fresh registers.
void add_entangled_pair(PureState& s, const std::string& label_a, const std::string& label_b,
                        std::size_t dim);
// Appends a fresh register in the given state (defaults to |0>).
void add_register(PureState& s, const RegisterShape::Reg& reg, const std::vector<cx>* init = nullptr);
// Removes a register that is exactly in a product |value> state.
void remove_classical_register(PureState& s, const std::string& label, std::size_t value,
                               double tol = 1e-9);
PureState tensor(const PureState& a, const PureState& b, std::size_t dim_cap = kDefaultDimCap);

// rho -> (U x 1) rho (U x 1)^dag on the named registers
void apply_dense(DensityOperator& r, const std::vector<std::string>& regs, const ComplexMatrix& op);

cx overlap(const PureState& a, const PureState& b);

// ---------------------------------------------------------------------------
// metrics

// Spectral purification; environment dimension equals the rank.
PureState purify(const DensityOperator& rho, const std::string& env_label);

// Uhlmann fidelity with the sub-normalized correction term
// sqrt((1-Tr rho)(1-Tr sigma)).
double fidelity(const DensityOperator& rho, const DensityOperator& sigma);
double fidelity(const PureState& a, const PureState& b);
double fidelity(const PureState& a, const DensityOperator& b);

double purified_distance(const DensityOperator& rho, const DensityOperator& sigma);
double purified_distance(const PureState& a, const PureState& b);
double purified_distance(const PureState& a, const DensityOperator& b);

// Schatten-1 distance ||rho - sigma||_1 (no 1/2 factor; the Fuchs-van de Graaf
// check applies the 1/2 explicitly).
double trace_distance(const DensityOperator& rho, const DensityOperator& sigma);

struct HelstromResult {
    ComplexMatrix projector;  // optimal discrimination test
    double gap;               // Tr(Pi rho) - Tr(Pi sigma)
};
HelstromResult helstrom_test(const DensityOperator& rho, const DensityOperator& sigma);

// Checks ||Pi rho Pi / Tr(Pi rho) - rho||_1 <= 2 sqrt(eps) for a measurement
// operator with Tr(Pi rho) >= 1 - eps.
bool gentle_measurement_bound_check(const DensityOperator& rho, const ComplexMatrix& pi, double eps);

// 1 - sqrt(1 - P^2) <= ||rho-sigma||_1 / 2 <= P
bool fuchs_vdg_check(const DensityOperator& rho, const DensityOperator& sigma);

// Unitary V on `act_on` with P(|xi>, (1 x V)|theta>) = P of the two reduced
// states on the complement; built from the SVD of the overlap operator.
ComplexMatrix uhlmann_unitary(const PureState& xi, const PureState& theta,
                              const std::vector<std::string>& act_on);
// Isometry variant mapping theta's environment into xi's (possibly larger)
// environment; used where purifying registers differ in size.
ComplexMatrix uhlmann_isometry(const PureState& xi, const std::vector<std::string>& act_on_xi,
                               const PureState& theta, const std::vector<std::string>& act_on_theta);

struct Svd {
    ComplexMatrix u;               // m x m unitary (thin: m x min(m,n))
    std::vector<double> singular;  // min(m,n), descending
    ComplexMatrix v;               // n x n unitary, M = U S V^dag
};
Svd svd(const ComplexMatrix& m);
// Only min(m,n) columns of U; avoids the full unitary completion.
Svd svd_thin(const ComplexMatrix& m);

}  // namespace qsr
