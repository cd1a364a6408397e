#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "qsr/errors.hpp"

namespace qsr {

using cx = std::complex<double>;

// Tolerances shared by the numeric kernel. Degenerate-support handling is
// centralized here so the entropy layer never divides by ~0.
inline constexpr double kHermTol = 1e-10;     // max-abs Hermiticity tolerance
inline constexpr double kEigenFloor = 1e-12;  // eigenvalues below this count as 0
inline constexpr std::size_t kDefaultDimCap = std::size_t(1) << 22;

// Dense row-major complex matrix.
class ComplexMatrix {
public:
    ComplexMatrix() : rows_(0), cols_(0) {}
    ComplexMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), a_(rows * cols, cx(0.0, 0.0)) {}

    static ComplexMatrix identity(std::size_t n);
    static ComplexMatrix zero(std::size_t rows, std::size_t cols) { return ComplexMatrix(rows, cols); }
    // |i><j| on an n-dimensional space
    static ComplexMatrix basis_op(std::size_t n, std::size_t i, std::size_t j);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    cx& at(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    const cx& at(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    std::vector<cx>& data() { return a_; }
    const std::vector<cx>& data() const { return a_; }

    ComplexMatrix dagger() const;
    ComplexMatrix transpose() const;
    ComplexMatrix conj() const;

    cx trace() const;
    double max_abs() const;
    double frobenius() const;

    bool is_hermitian(double tol = kHermTol) const;
    bool is_identity(double tol = kHermTol) const;
    // max-abs of off-diagonal entries; 0 for diagonal matrices
    double off_diagonal_max() const;

    ComplexMatrix& operator+=(const ComplexMatrix& o);
    ComplexMatrix& operator-=(const ComplexMatrix& o);
    ComplexMatrix& operator*=(cx s);

    friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
    friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
    friend ComplexMatrix operator*(ComplexMatrix a, cx s) { return a *= s; }
    friend ComplexMatrix operator*(cx s, ComplexMatrix a) { return a *= s; }
    friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);

private:
    std::size_t rows_, cols_;
    std::vector<cx> a_;
};

std::vector<cx> operator*(const ComplexMatrix& m, const std::vector<cx>& v);

// Ordered list of named tensor factors. The first register is the most
// significant index (row-major composite indexing).
struct RegisterShape {
    struct Reg {
        std::string label;
        std::size_t dim;
    };
    std::vector<Reg> regs;

    RegisterShape() = default;
    RegisterShape(std::initializer_list<Reg> init);

    std::size_t total_dim() const;
    std::size_t size() const { return regs.size(); }
    bool has(const std::string& label) const;
    std::size_t index_of(const std::string& label) const;  // LabelError if absent
    std::size_t dim_of(const std::string& label) const;

    void validate() const;  // unique labels, dims >= 1

    // shape restricted to `keep`, preserving register order
    RegisterShape restricted(const std::vector<std::string>& keep) const;
    std::vector<std::string> labels() const;

    // splits a composite basis index into per-register digits
    std::vector<std::size_t> unpack(std::size_t index) const;
    std::size_t pack(const std::vector<std::size_t>& digits) const;
};

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b,
                   std::size_t dim_cap = kDefaultDimCap);

// Partial trace over the complement of `keep`; output indexed by the kept
// registers in their original order.
ComplexMatrix partial_trace(const ComplexMatrix& m, const RegisterShape& shape,
                            const std::vector<std::string>& keep);

// Re-indexes a square operator (or a column vector) so its registers appear in
// `new_order`, which must be a permutation of the shape's labels.
ComplexMatrix permute_systems(const ComplexMatrix& m, const RegisterShape& shape,
                              const std::vector<std::string>& new_order);
std::vector<cx> permute_systems(const std::vector<cx>& v, const RegisterShape& shape,
                                const std::vector<std::string>& new_order);

struct HermEig {
    std::vector<double> eigenvalues;  // ascending
    ComplexMatrix vectors;            // unitary, eigenvectors as columns
};

// Cyclic Jacobi diagonalization of a Hermitian matrix. Ties in the eigenvalue
// order are broken by lexicographic comparison of the (phase-fixed)
// eigenvector entries so results are reproducible.
HermEig herm_eig(const ComplexMatrix& m);

// U f(lambda) U^dag. For functions undefined at 0 (log, inverse powers) the
// eigenvalue floor maps near-zero eigenvalues to exactly 0 (support
// restriction, 0*log 0 := 0).
ComplexMatrix mat_fn(const ComplexMatrix& m, const std::function<double(double)>& f);
ComplexMatrix mat_sqrt(const ComplexMatrix& m);
ComplexMatrix mat_log2_on_support(const ComplexMatrix& m);
ComplexMatrix mat_inv_sqrt_on_support(const ComplexMatrix& m);

// Orthogonal projector onto the strictly positive eigenspace.
ComplexMatrix positive_part_projector(const ComplexMatrix& m);
// Projector onto the support (eigenvalues with |lambda| > floor are included
// only when positive; callers pass PSD matrices).
ComplexMatrix support_projector(const ComplexMatrix& m);

double log2_safe(double x);

}  // namespace qsr
