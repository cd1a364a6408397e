#include "qsr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace qsr {

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

ComplexMatrix ComplexMatrix::basis_op(std::size_t n, std::size_t i, std::size_t j) {
    ComplexMatrix m(n, n);
    m.at(i, j) = 1.0;
    return m;
}

ComplexMatrix ComplexMatrix::dagger() const {
    ComplexMatrix r(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) r.at(j, i) = std::conj(at(i, j));
    return r;
}

ComplexMatrix ComplexMatrix::transpose() const {
    ComplexMatrix r(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) r.at(j, i) = at(i, j);
    return r;
}

ComplexMatrix ComplexMatrix::conj() const {
    ComplexMatrix r(rows_, cols_);
    for (std::size_t i = 0; i < rows_ * cols_; ++i) r.a_[i] = std::conj(a_[i]);
    return r;
}

cx ComplexMatrix::trace() const {
    cx t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += at(i, i);
    return t;
}

double ComplexMatrix::max_abs() const {
    double m = 0.0;
    for (const cx& v : a_) m = std::max(m, std::abs(v));
    return m;
}

double ComplexMatrix::frobenius() const {
    double s = 0.0;
    for (const cx& v : a_) s += std::norm(v);
    return std::sqrt(s);
}

bool ComplexMatrix::is_hermitian(double tol) const {
    if (!square()) return false;
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = i; j < cols_; ++j)
            if (std::abs(at(i, j) - std::conj(at(j, i))) > tol) return false;
    return true;
}

bool ComplexMatrix::is_identity(double tol) const {
    if (!square()) return false;
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) {
            cx want = (i == j) ? cx(1.0) : cx(0.0);
            if (std::abs(at(i, j) - want) > tol) return false;
        }
    return true;
}

double ComplexMatrix::off_diagonal_max() const {
    double m = 0.0;
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j)
            if (i != j) m = std::max(m, std::abs(at(i, j)));
    return m;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw ShapeError("matrix addition shape mismatch");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw ShapeError("matrix subtraction shape mismatch");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cx s) {
    for (cx& v : a_) v *= s;
    return *this;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) throw ShapeError("matrix product shape mismatch");
    ComplexMatrix r(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            cx aik = a.at(i, k);
            if (aik == cx(0.0)) continue;
            const cx* brow = &b.data()[k * b.cols()];
            cx* rrow = &r.data()[i * r.cols()];
            for (std::size_t j = 0; j < b.cols(); ++j) rrow[j] += aik * brow[j];
        }
    }
    return r;
}

std::vector<cx> operator*(const ComplexMatrix& m, const std::vector<cx>& v) {
    if (m.cols() != v.size()) throw ShapeError("matrix-vector shape mismatch");
    std::vector<cx> r(m.rows(), cx(0.0));
    for (std::size_t i = 0; i < m.rows(); ++i) {
        cx s = 0.0;
        const cx* row = &m.data()[i * m.cols()];
        for (std::size_t j = 0; j < m.cols(); ++j) s += row[j] * v[j];
        r[i] = s;
    }
    return r;
}

RegisterShape::RegisterShape(std::initializer_list<Reg> init) : regs(init) { validate(); }

std::size_t RegisterShape::total_dim() const {
    std::size_t d = 1;
    for (const Reg& r : regs) d *= r.dim;
    return d;
}

bool RegisterShape::has(const std::string& label) const {
    for (const Reg& r : regs)
        if (r.label == label) return true;
    return false;
}

std::size_t RegisterShape::index_of(const std::string& label) const {
    for (std::size_t i = 0; i < regs.size(); ++i)
        if (regs[i].label == label) return i;
    throw LabelError("unknown register label: " + label);
}

std::size_t RegisterShape::dim_of(const std::string& label) const { return regs[index_of(label)].dim; }

void RegisterShape::validate() const {
    for (std::size_t i = 0; i < regs.size(); ++i) {
        if (regs[i].dim < 1) throw ShapeError("register dimension must be >= 1: " + regs[i].label);
        for (std::size_t j = i + 1; j < regs.size(); ++j)
            if (regs[i].label == regs[j].label) throw LabelError("duplicate register label: " + regs[i].label);
    }
}

RegisterShape RegisterShape::restricted(const std::vector<std::string>& keep) const {
    for (const std::string& k : keep) (void)index_of(k);
    RegisterShape out;
    for (const Reg& r : regs)
        if (std::find(keep.begin(), keep.end(), r.label) != keep.end()) out.regs.push_back(r);
    return out;
}

std::vector<std::string> RegisterShape::labels() const {
    std::vector<std::string> l;
    l.reserve(regs.size());
    for (const Reg& r : regs) l.push_back(r.label);
    return l;
}

std::vector<std::size_t> RegisterShape::unpack(std::size_t index) const {
    std::vector<std::size_t> digits(regs.size(), 0);
    for (std::size_t k = regs.size(); k-- > 0;) {
        digits[k] = index % regs[k].dim;
        index /= regs[k].dim;
    }
    return digits;
}

std::size_t RegisterShape::pack(const std::vector<std::size_t>& digits) const {
    std::size_t index = 0;
    for (std::size_t k = 0; k < regs.size(); ++k) index = index * regs[k].dim + digits[k];
    return index;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b, std::size_t dim_cap) {
    std::size_t rr = a.rows() * b.rows(), cc = a.cols() * b.cols();
    if (rr > dim_cap || cc > dim_cap) {
        std::ostringstream os;
        os << "kron result dimension " << rr << "x" << cc << " exceeds cap " << dim_cap;
        throw DimensionCap(os.str());
    }
    ComplexMatrix r(rr, cc);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            cx aij = a.at(i, j);
            if (aij == cx(0.0)) continue;
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t l = 0; l < b.cols(); ++l)
                    r.at(i * b.rows() + k, j * b.cols() + l) = aij * b.at(k, l);
        }
    return r;
}

ComplexMatrix partial_trace(const ComplexMatrix& m, const RegisterShape& shape,
                            const std::vector<std::string>& keep) {
    if (!m.square() || m.rows() != shape.total_dim())
        throw ShapeError("partial_trace: matrix dimension does not match register shape");
    for (const std::string& k : keep) (void)shape.index_of(k);

    std::size_t keep_dim = 1, env_dim = 1;
    std::vector<int> kept(shape.size(), 0);
    for (std::size_t i = 0; i < shape.size(); ++i) {
        bool k = std::find(keep.begin(), keep.end(), shape.regs[i].label) != keep.end();
        kept[i] = k;
        (k ? keep_dim : env_dim) *= shape.regs[i].dim;
    }

    // strides of each register in the composite index
    std::vector<std::size_t> stride(shape.size(), 1);
    for (std::size_t i = shape.size(); i-- > 1;) stride[i - 1] = stride[i] * shape.regs[i].dim;

    // map (keep_index, env_index) -> composite index
    auto composite = [&](std::size_t ki, std::size_t ei) {
        std::size_t idx = 0;
        for (std::size_t r = shape.size(); r-- > 0;) {
            std::size_t d = shape.regs[r].dim;
            std::size_t digit;
            if (kept[r]) {
                digit = ki % d;
                ki /= d;
            } else {
                digit = ei % d;
                ei /= d;
            }
            idx += digit * stride[r];
        }
        return idx;
    };

    ComplexMatrix out(keep_dim, keep_dim);
    for (std::size_t ki = 0; ki < keep_dim; ++ki)
        for (std::size_t kj = 0; kj < keep_dim; ++kj) {
            cx s = 0.0;
            for (std::size_t e = 0; e < env_dim; ++e) s += m.at(composite(ki, e), composite(kj, e));
            out.at(ki, kj) = s;
        }
    return out;
}

namespace {

std::vector<std::size_t> permutation_index_map(const RegisterShape& shape,
                                               const std::vector<std::string>& new_order) {
    if (new_order.size() != shape.size()) throw LabelError("permute_systems: wrong number of labels");
    std::vector<std::size_t> src(shape.size());
    std::vector<int> seen(shape.size(), 0);
    for (std::size_t k = 0; k < new_order.size(); ++k) {
        std::size_t i = shape.index_of(new_order[k]);
        if (seen[i]) throw LabelError("permute_systems: label repeated: " + new_order[k]);
        seen[i] = 1;
        src[k] = i;
    }
    std::size_t dim = shape.total_dim();
    std::vector<std::size_t> map(dim);
    for (std::size_t idx = 0; idx < dim; ++idx) {
        std::vector<std::size_t> digits = shape.unpack(idx);
        std::size_t nidx = 0;
        for (std::size_t k = 0; k < src.size(); ++k) nidx = nidx * shape.regs[src[k]].dim + digits[src[k]];
        map[idx] = nidx;  // old composite index -> new composite index
    }
    return map;
}

}  // namespace

ComplexMatrix permute_systems(const ComplexMatrix& m, const RegisterShape& shape,
                              const std::vector<std::string>& new_order) {
    if (!m.square() || m.rows() != shape.total_dim())
        throw ShapeError("permute_systems: matrix dimension does not match register shape");
    std::vector<std::size_t> map = permutation_index_map(shape, new_order);
    ComplexMatrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out.at(map[i], map[j]) = m.at(i, j);
    return out;
}

std::vector<cx> permute_systems(const std::vector<cx>& v, const RegisterShape& shape,
                                const std::vector<std::string>& new_order) {
    if (v.size() != shape.total_dim())
        throw ShapeError("permute_systems: vector dimension does not match register shape");
    std::vector<std::size_t> map = permutation_index_map(shape, new_order);
    std::vector<cx> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[map[i]] = v[i];
    return out;
}

namespace {

// One cyclic Jacobi sweep; returns remaining off-diagonal Frobenius mass.
double jacobi_sweep(ComplexMatrix& a, ComplexMatrix& v) {
    std::size_t n = a.rows();
    for (std::size_t p = 0; p + 1 < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            cx apq = a.at(p, q);
            double m = std::abs(apq);
            if (m < 1e-300) continue;
            double app = a.at(p, p).real();
            double aqq = a.at(q, q).real();
            // phase that makes the pivot real, then a real rotation
            cx phase = std::conj(apq) / m;  // e^{-i arg(apq)}
            double tau = (aqq - app) / (2.0 * m);
            double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
            double c = 1.0 / std::sqrt(1.0 + t * t);
            double s = t * c;
            // columns of the combined unitary: |p> -> c|p> - s*phase|q>,
            // |q> -> s|p> + c*phase|q>, with phase = e^{-i arg(apq)}
            cx up_p = c, up_q = -s * phase;
            cx uq_p = s, uq_q = c * phase;
            // A <- U^dag A U, applied as row then column updates
            for (std::size_t k = 0; k < n; ++k) {
                cx akp = a.at(k, p), akq = a.at(k, q);
                a.at(k, p) = akp * up_p + akq * up_q;
                a.at(k, q) = akp * uq_p + akq * uq_q;
            }
            for (std::size_t k = 0; k < n; ++k) {
                cx apk = a.at(p, k), aqk = a.at(q, k);
                a.at(p, k) = std::conj(up_p) * apk + std::conj(up_q) * aqk;
                a.at(q, k) = std::conj(uq_p) * apk + std::conj(uq_q) * aqk;
            }
            for (std::size_t k = 0; k < n; ++k) {
                cx vkp = v.at(k, p), vkq = v.at(k, q);
                v.at(k, p) = vkp * up_p + vkq * up_q;
                v.at(k, q) = vkp * uq_p + vkq * uq_q;
            }
            a.at(p, q) = cx(0.0);
            a.at(q, p) = cx(0.0);
        }
    }
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) off += std::norm(a.at(i, j));
    return std::sqrt(off);
}

// Fixes the global phase of each eigenvector (largest-magnitude entry made
// real positive) so ties can be broken deterministically.
void fix_column_phase(ComplexMatrix& v, std::size_t col) {
    std::size_t n = v.rows();
    std::size_t imax = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        double m = std::abs(v.at(i, col));
        if (m > best + 1e-15) {
            best = m;
            imax = i;
        }
    }
    if (best < 1e-300) return;
    cx ph = std::conj(v.at(imax, col)) / best;
    for (std::size_t i = 0; i < n; ++i) v.at(i, col) *= ph;
}

bool column_less(const ComplexMatrix& v, std::size_t a, std::size_t b) {
    for (std::size_t i = 0; i < v.rows(); ++i) {
        const cx &x = v.at(i, a), &y = v.at(i, b);
        if (x.real() != y.real()) return x.real() < y.real();
        if (x.imag() != y.imag()) return x.imag() < y.imag();
    }
    return false;
}

}  // namespace

namespace {

// Connected components of the sparsity graph; the matrix is block-diagonal
// with respect to this partition up to entries below the link tolerance.
std::vector<std::vector<std::size_t>> sparsity_components(const ComplexMatrix& m, double tol) {
    std::size_t n = m.rows();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(m.at(i, j)) > tol || std::abs(m.at(j, i)) > tol) parent[find(i)] = find(j);
    std::vector<std::vector<std::size_t>> comps;
    std::vector<std::size_t> comp_of(n, std::size_t(-1));
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = find(i);
        if (comp_of[r] == std::size_t(-1)) {
            comp_of[r] = comps.size();
            comps.emplace_back();
        }
        comps[comp_of[r]].push_back(i);
    }
    return comps;
}

void jacobi_diagonalize(ComplexMatrix& a, ComplexMatrix& v) {
    std::size_t n = a.rows();
    // symmetrize away the sub-tolerance asymmetry
    for (std::size_t i = 0; i < n; ++i) {
        a.at(i, i) = cx(a.at(i, i).real(), 0.0);
        for (std::size_t j = i + 1; j < n; ++j) {
            cx w = 0.5 * (a.at(i, j) + std::conj(a.at(j, i)));
            a.at(i, j) = w;
            a.at(j, i) = std::conj(w);
        }
    }
    double scale = std::max(1.0, a.frobenius());
    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = jacobi_sweep(a, v);
        if (off < 1e-14 * scale) break;
    }
}

}  // namespace

HermEig herm_eig(const ComplexMatrix& m) {
    if (!m.square()) throw HermitianError("herm_eig: matrix not square");
    if (!m.is_hermitian(kHermTol * std::max(1.0, m.max_abs())))
        throw HermitianError("herm_eig: matrix not Hermitian within tolerance");
    std::size_t n = m.rows();

    std::vector<double> eig(n, 0.0);
    ComplexMatrix v(n, n);
    std::vector<std::vector<std::size_t>> comps =
        sparsity_components(m, 1e-14 * std::max(1.0, m.max_abs()));
    for (const auto& comp : comps) {
        std::size_t k = comp.size();
        ComplexMatrix a(k, k);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) a.at(i, j) = m.at(comp[i], comp[j]);
        ComplexMatrix vc = ComplexMatrix::identity(k);
        jacobi_diagonalize(a, vc);
        for (std::size_t c = 0; c < k; ++c) {
            eig[comp[c]] = a.at(c, c).real();
            for (std::size_t r = 0; r < k; ++r) v.at(comp[r], comp[c]) = vc.at(r, c);
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t c = 0; c < n; ++c) fix_column_phase(v, c);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (eig[x] != eig[y]) return eig[x] < eig[y];
        return column_less(v, x, y);
    });

    HermEig out;
    out.eigenvalues.resize(n);
    out.vectors = ComplexMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.eigenvalues[k] = eig[order[k]];
        for (std::size_t i = 0; i < n; ++i) out.vectors.at(i, k) = v.at(i, order[k]);
    }
    return out;
}

ComplexMatrix mat_fn(const ComplexMatrix& m, const std::function<double(double)>& f) {
    HermEig e = herm_eig(m);
    std::size_t n = m.rows();
    ComplexMatrix out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        double fv = f(e.eigenvalues[k]);
        if (!std::isfinite(fv))
            throw DomainError("mat_fn: function undefined on eigenvalue " + std::to_string(e.eigenvalues[k]));
        if (fv == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) {
            cx vi = e.vectors.at(i, k) * fv;
            for (std::size_t j = 0; j < n; ++j) out.at(i, j) += vi * std::conj(e.vectors.at(j, k));
        }
    }
    return out;
}

ComplexMatrix mat_sqrt(const ComplexMatrix& m) {
    return mat_fn(m, [](double x) { return x <= kEigenFloor ? 0.0 : std::sqrt(x); });
}

ComplexMatrix mat_log2_on_support(const ComplexMatrix& m) {
    return mat_fn(m, [](double x) { return x <= kEigenFloor ? 0.0 : std::log2(x); });
}

ComplexMatrix mat_inv_sqrt_on_support(const ComplexMatrix& m) {
    return mat_fn(m, [](double x) { return x <= kEigenFloor ? 0.0 : 1.0 / std::sqrt(x); });
}

ComplexMatrix positive_part_projector(const ComplexMatrix& m) {
    return mat_fn(m, [](double x) { return x > kEigenFloor ? 1.0 : 0.0; });
}

ComplexMatrix support_projector(const ComplexMatrix& m) {
    return positive_part_projector(m);
}

double log2_safe(double x) { return x <= 0.0 ? -std::numeric_limits<double>::infinity() : std::log2(x); }

}  // namespace qsr
