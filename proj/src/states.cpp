#include "qsr/states.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qsr {

namespace {

std::vector<std::size_t> global_strides(const RegisterShape& shape) {
    std::vector<std::size_t> stride(shape.size(), 1);
    for (std::size_t i = shape.size(); i-- > 1;) stride[i - 1] = stride[i] * shape.regs[i].dim;
    return stride;
}

// Offsets of every sub-index of the given registers (in the order given).
std::vector<std::size_t> subspace_offsets(const RegisterShape& shape,
                                          const std::vector<std::string>& labels) {
    std::vector<std::size_t> stride = global_strides(shape);
    std::vector<std::size_t> dims, strides;
    for (const std::string& l : labels) {
        std::size_t p = shape.index_of(l);
        dims.push_back(shape.regs[p].dim);
        strides.push_back(stride[p]);
    }
    std::size_t count = 1;
    for (std::size_t d : dims) count *= d;
    std::vector<std::size_t> off(count, 0);
    for (std::size_t t = 0; t < count; ++t) {
        std::size_t rem = t, o = 0;
        for (std::size_t k = dims.size(); k-- > 0;) {
            o += (rem % dims[k]) * strides[k];
            rem /= dims[k];
        }
        off[t] = o;
    }
    return off;
}

template <class F>
void for_each_offset(const std::vector<std::size_t>& dims, const std::vector<std::size_t>& strides,
                     F&& f) {
    if (dims.empty()) {
        f(std::size_t(0));
        return;
    }
    std::vector<std::size_t> digit(dims.size(), 0);
    std::size_t offset = 0;
    for (;;) {
        f(offset);
        std::size_t k = dims.size();
        bool done = true;
        while (k-- > 0) {
            ++digit[k];
            offset += strides[k];
            if (digit[k] < dims[k]) {
                done = false;
                break;
            }
            offset -= dims[k] * strides[k];
            digit[k] = 0;
        }
        if (done) return;
    }
}

void rest_dims_strides(const RegisterShape& shape, const std::vector<std::string>& used,
                       std::vector<std::size_t>& dims, std::vector<std::size_t>& strides) {
    std::vector<std::size_t> stride = global_strides(shape);
    dims.clear();
    strides.clear();
    for (std::size_t p = 0; p < shape.size(); ++p) {
        if (std::find(used.begin(), used.end(), shape.regs[p].label) == used.end()) {
            dims.push_back(shape.regs[p].dim);
            strides.push_back(stride[p]);
        }
    }
}

void check_bijection(const std::vector<std::size_t>& map) {
    std::vector<char> seen(map.size(), 0);
    for (std::size_t v : map) {
        if (v >= map.size() || seen[v]) throw LabelError("basis map is not a permutation");
        seen[v] = 1;
    }
}

}  // namespace

DensityOperator DensityOperator::checked(ComplexMatrix m, RegisterShape s, bool subnorm) {
    s.validate();
    if (!m.square() || m.rows() != s.total_dim())
        throw ShapeError("density operator dimension does not match register shape");
    double scale = std::max(1.0, m.max_abs());
    if (!m.is_hermitian(kHermTol * scale)) throw HermitianError("density operator not Hermitian");
    double tr = m.trace().real();
    if (subnorm) {
        if (tr > 1.0 + 1e-9 || tr < -1e-9) throw PreconditionError("sub-normalized state with trace > 1");
    } else if (std::abs(tr - 1.0) > 1e-9) {
        throw PreconditionError("density operator trace != 1: " + std::to_string(tr));
    }
    if (m.rows() <= 512) {
        HermEig e = herm_eig(m);
        if (e.eigenvalues.front() < -1e-9)
            throw PreconditionError("density operator has eigenvalue " +
                                    std::to_string(e.eigenvalues.front()));
    }
    return DensityOperator(std::move(m), std::move(s), subnorm);
}

DensityOperator DensityOperator::reduced(const std::vector<std::string>& keep) const {
    return DensityOperator(partial_trace(matrix, shape, keep), shape.restricted(keep), subnormalized);
}

PureState PureState::checked(std::vector<cx> a, RegisterShape s) {
    s.validate();
    if (a.size() != s.total_dim()) throw ShapeError("pure state dimension does not match register shape");
    PureState p(std::move(a), std::move(s));
    if (std::abs(p.norm() - 1.0) > 1e-10)
        throw PreconditionError("pure state norm != 1: " + std::to_string(p.norm()));
    return p;
}

PureState PureState::basis(const RegisterShape& s, std::size_t index) {
    std::vector<cx> a(s.total_dim(), cx(0.0));
    a[index] = 1.0;
    return PureState(std::move(a), s);
}

double PureState::norm() const {
    double s = 0.0;
    for (const cx& v : amplitudes) s += std::norm(v);
    return std::sqrt(s);
}

void PureState::normalize() {
    double n = norm();
    if (n < 1e-300) throw PreconditionError("cannot normalize zero vector");
    for (cx& v : amplitudes) v /= n;
}

DensityOperator PureState::density() const {
    ComplexMatrix m(dim(), dim());
    for (std::size_t i = 0; i < dim(); ++i)
        for (std::size_t j = 0; j < dim(); ++j) m.at(i, j) = amplitudes[i] * std::conj(amplitudes[j]);
    return DensityOperator(std::move(m), shape);
}

DensityOperator PureState::reduced(const std::vector<std::string>& keep) const {
    for (const std::string& k : keep) (void)shape.index_of(k);
    // canonicalize to register order so the output matches restricted(keep)
    std::vector<std::string> keep_ord;
    for (const auto& r : shape.regs)
        if (std::find(keep.begin(), keep.end(), r.label) != keep.end()) keep_ord.push_back(r.label);
    std::vector<std::size_t> keep_off = subspace_offsets(shape, keep_ord);
    std::vector<std::size_t> rdims, rstrides;
    rest_dims_strides(shape, keep, rdims, rstrides);
    std::size_t kd = keep_off.size();
    ComplexMatrix rho(kd, kd);
    std::vector<cx> col(kd);
    for_each_offset(rdims, rstrides, [&](std::size_t e) {
        for (std::size_t k = 0; k < kd; ++k) col[k] = amplitudes[e + keep_off[k]];
        for (std::size_t i = 0; i < kd; ++i) {
            if (col[i] == cx(0.0)) continue;
            for (std::size_t j = 0; j < kd; ++j) rho.at(i, j) += col[i] * std::conj(col[j]);
        }
    });
    return DensityOperator(std::move(rho), shape.restricted(keep));
}

void apply_dense(PureState& s, const std::vector<std::string>& regs, const ComplexMatrix& op) {
    std::vector<std::size_t> toff = subspace_offsets(s.shape, regs);
    std::size_t T = toff.size();
    if (op.rows() != T || op.cols() != T) throw ShapeError("apply_dense: operator dimension mismatch");
    std::vector<std::size_t> rdims, rstrides;
    rest_dims_strides(s.shape, regs, rdims, rstrides);
    std::vector<cx> buf(T), out(T);
    for_each_offset(rdims, rstrides, [&](std::size_t r) {
        for (std::size_t t = 0; t < T; ++t) buf[t] = s.amplitudes[r + toff[t]];
        for (std::size_t i = 0; i < T; ++i) {
            cx acc = 0.0;
            const cx* row = &op.data()[i * T];
            for (std::size_t j = 0; j < T; ++j) acc += row[j] * buf[j];
            out[i] = acc;
        }
        for (std::size_t t = 0; t < T; ++t) s.amplitudes[r + toff[t]] = out[t];
    });
}

void apply_basis_map(PureState& s, const std::vector<std::string>& regs,
                     const std::vector<std::size_t>& map) {
    std::vector<std::size_t> toff = subspace_offsets(s.shape, regs);
    if (map.size() != toff.size()) throw ShapeError("apply_basis_map: map size mismatch");
    check_bijection(map);
    std::vector<std::size_t> rdims, rstrides;
    rest_dims_strides(s.shape, regs, rdims, rstrides);
    std::size_t T = toff.size();
    std::vector<cx> buf(T);
    for_each_offset(rdims, rstrides, [&](std::size_t r) {
        for (std::size_t t = 0; t < T; ++t) buf[t] = s.amplitudes[r + toff[t]];
        for (std::size_t t = 0; t < T; ++t) s.amplitudes[r + toff[map[t]]] = buf[t];
    });
}

void apply_ctrl_dense(PureState& s, const std::vector<std::string>& ctrl,
                      const std::vector<std::string>& targets,
                      const std::vector<ComplexMatrix>& per_value) {
    std::vector<std::size_t> coff = subspace_offsets(s.shape, ctrl);
    std::vector<std::size_t> toff = subspace_offsets(s.shape, targets);
    if (per_value.size() != coff.size())
        throw ShapeError("apply_ctrl_dense: need one operator per control value");
    std::size_t T = toff.size();
    std::vector<std::string> used = ctrl;
    used.insert(used.end(), targets.begin(), targets.end());
    std::vector<std::size_t> rdims, rstrides;
    rest_dims_strides(s.shape, used, rdims, rstrides);
    std::vector<cx> buf(T), out(T);
    for_each_offset(rdims, rstrides, [&](std::size_t r) {
        for (std::size_t c = 0; c < coff.size(); ++c) {
            const ComplexMatrix& op = per_value[c];
            if (op.rows() != T || op.cols() != T)
                throw ShapeError("apply_ctrl_dense: operator dimension mismatch");
            std::size_t base = r + coff[c];
            for (std::size_t t = 0; t < T; ++t) buf[t] = s.amplitudes[base + toff[t]];
            for (std::size_t i = 0; i < T; ++i) {
                cx acc = 0.0;
                const cx* row = &op.data()[i * T];
                for (std::size_t j = 0; j < T; ++j) acc += row[j] * buf[j];
                out[i] = acc;
            }
            for (std::size_t t = 0; t < T; ++t) s.amplitudes[base + toff[t]] = out[t];
        }
    });
}

void apply_ctrl_basis_map(PureState& s, const std::vector<std::string>& ctrl,
                          const std::vector<std::string>& targets,
                          const std::vector<std::vector<std::size_t>>& per_value) {
    std::vector<std::size_t> coff = subspace_offsets(s.shape, ctrl);
    std::vector<std::size_t> toff = subspace_offsets(s.shape, targets);
    if (per_value.size() != coff.size())
        throw ShapeError("apply_ctrl_basis_map: need one map per control value");
    std::size_t T = toff.size();
    for (const auto& m : per_value) {
        if (m.size() != T) throw ShapeError("apply_ctrl_basis_map: map size mismatch");
        check_bijection(m);
    }
    std::vector<std::string> used = ctrl;
    used.insert(used.end(), targets.begin(), targets.end());
    std::vector<std::size_t> rdims, rstrides;
    rest_dims_strides(s.shape, used, rdims, rstrides);
    std::vector<cx> buf(T);
    for_each_offset(rdims, rstrides, [&](std::size_t r) {
        for (std::size_t c = 0; c < coff.size(); ++c) {
            std::size_t base = r + coff[c];
            const std::vector<std::size_t>& map = per_value[c];
            for (std::size_t t = 0; t < T; ++t) buf[t] = s.amplitudes[base + toff[t]];
            for (std::size_t t = 0; t < T; ++t) s.amplitudes[base + toff[map[t]]] = buf[t];
        }
    });
}

void apply_isometry(PureState& s, const std::string& label,
                    const std::vector<RegisterShape::Reg>& new_regs, const ComplexMatrix& V) {
    std::size_t p = s.shape.index_of(label);
    std::size_t d = s.shape.regs[p].dim;
    std::size_t N = 1;
    for (const auto& r : new_regs) N *= r.dim;
    if (V.rows() != N || V.cols() != d) throw ShapeError("apply_isometry: isometry dimension mismatch");

    RegisterShape new_shape;
    for (std::size_t i = 0; i < p; ++i) new_shape.regs.push_back(s.shape.regs[i]);
    for (const auto& r : new_regs) new_shape.regs.push_back(r);
    for (std::size_t i = p + 1; i < s.shape.size(); ++i) new_shape.regs.push_back(s.shape.regs[i]);
    new_shape.validate();

    std::size_t trail = 1;
    for (std::size_t i = p + 1; i < s.shape.size(); ++i) trail *= s.shape.regs[i].dim;

    // rest registers (everything except `label`), with strides in both layouts
    std::vector<std::size_t> old_stride = global_strides(s.shape);
    std::vector<std::size_t> new_stride = global_strides(new_shape);
    std::vector<std::size_t> rdims, rold, rnew;
    for (std::size_t i = 0; i < s.shape.size(); ++i) {
        if (i == p) continue;
        rdims.push_back(s.shape.regs[i].dim);
        rold.push_back(old_stride[i]);
        rnew.push_back(new_stride[i < p ? i : i + new_regs.size() - 1]);
    }

    std::vector<cx> out(new_shape.total_dim(), cx(0.0));
    std::vector<cx> buf(d);
    // dual odometer over the rest registers
    if (rdims.empty()) {
        for (std::size_t i = 0; i < d; ++i) buf[i] = s.amplitudes[i * trail];
        for (std::size_t n = 0; n < N; ++n) {
            cx acc = 0.0;
            for (std::size_t i = 0; i < d; ++i) acc += V.at(n, i) * buf[i];
            out[n * trail] = acc;
        }
    } else {
        std::vector<std::size_t> digit(rdims.size(), 0);
        std::size_t ro = 0, rn = 0;
        for (;;) {
            for (std::size_t i = 0; i < d; ++i) buf[i] = s.amplitudes[ro + i * trail];
            for (std::size_t n = 0; n < N; ++n) {
                cx acc = 0.0;
                for (std::size_t i = 0; i < d; ++i) acc += V.at(n, i) * buf[i];
                out[rn + n * trail] = acc;
            }
            std::size_t k = rdims.size();
            bool done = true;
            while (k-- > 0) {
                ++digit[k];
                ro += rold[k];
                rn += rnew[k];
                if (digit[k] < rdims[k]) {
                    done = false;
                    break;
                }
                ro -= rdims[k] * rold[k];
                rn -= rdims[k] * rnew[k];
                digit[k] = 0;
            }
            if (done) break;
        }
    }
    s.amplitudes = std::move(out);
    s.shape = std::move(new_shape);
}

void apply_isometry_group(PureState& s, const std::vector<std::string>& labels,
                          const std::vector<RegisterShape::Reg>& new_regs, const ComplexMatrix& V) {
    std::vector<std::string> rest;
    for (const auto& r : s.shape.regs)
        if (std::find(labels.begin(), labels.end(), r.label) == labels.end()) rest.push_back(r.label);
    std::vector<std::string> order = rest;
    order.insert(order.end(), labels.begin(), labels.end());
    std::vector<cx> perm = permute_systems(s.amplitudes, s.shape, order);

    std::size_t t = 1;
    for (const auto& l : labels) t *= s.shape.dim_of(l);
    std::size_t big_n = 1;
    for (const auto& r : new_regs) big_n *= r.dim;
    if (V.rows() != big_n || V.cols() != t)
        throw ShapeError("apply_isometry_group: isometry dimension mismatch");
    std::size_t rdim = s.dim() / t;

    RegisterShape new_shape;
    for (const auto& l : rest) new_shape.regs.push_back({l, s.shape.dim_of(l)});
    for (const auto& r : new_regs) new_shape.regs.push_back(r);
    new_shape.validate();

    std::vector<cx> out(rdim * big_n, cx(0.0));
    for (std::size_t r = 0; r < rdim; ++r) {
        const cx* src = &perm[r * t];
        for (std::size_t n = 0; n < big_n; ++n) {
            cx acc = 0.0;
            const cx* row = &V.data()[n * t];
            for (std::size_t k = 0; k < t; ++k) acc += row[k] * src[k];
            out[r * big_n + n] = acc;
        }
    }
    s.amplitudes = std::move(out);
    s.shape = std::move(new_shape);
}

DensityOperator ordered_marginal(const PureState& s, const std::vector<std::string>& order) {
    DensityOperator red = s.reduced(order);
    ComplexMatrix m = permute_systems(red.matrix, red.shape, order);
    RegisterShape shape;
    for (const auto& l : order) shape.regs.push_back({l, red.shape.dim_of(l)});
    return DensityOperator(std::move(m), std::move(shape));
}

void rename_register(PureState& s, const std::string& old_label, const std::string& new_label) {
    std::size_t p = s.shape.index_of(old_label);
    s.shape.regs[p].label = new_label;
    s.shape.validate();
}

void add_entangled_pair(PureState& s, const std::string& label_a, const std::string& label_b,
                        std::size_t dim) {
    std::vector<cx> pair(dim * dim, cx(0.0));
    double w = 1.0 / std::sqrt(static_cast<double>(dim));
    for (std::size_t f = 0; f < dim; ++f) pair[f * dim + f] = w;
    std::size_t total = s.dim() * dim * dim;
    std::vector<cx> out(total);
    for (std::size_t i = 0; i < s.dim(); ++i)
        for (std::size_t p = 0; p < dim * dim; ++p) out[i * dim * dim + p] = s.amplitudes[i] * pair[p];
    s.amplitudes = std::move(out);
    s.shape.regs.push_back({label_a, dim});
    s.shape.regs.push_back({label_b, dim});
    s.shape.validate();
}

void add_register(PureState& s, const RegisterShape::Reg& reg, const std::vector<cx>* init) {
    std::vector<cx> v;
    if (init) {
        if (init->size() != reg.dim) throw ShapeError("add_register: init vector dimension mismatch");
        v = *init;
    } else {
        v.assign(reg.dim, cx(0.0));
        v[0] = 1.0;
    }
    std::vector<cx> out(s.amplitudes.size() * reg.dim);
    for (std::size_t i = 0; i < s.amplitudes.size(); ++i)
        for (std::size_t k = 0; k < reg.dim; ++k) out[i * reg.dim + k] = s.amplitudes[i] * v[k];
    s.amplitudes = std::move(out);
    s.shape.regs.push_back(reg);
    s.shape.validate();
}

void remove_classical_register(PureState& s, const std::string& label, std::size_t value, double tol) {
    std::size_t p = s.shape.index_of(label);
    std::size_t d = s.shape.regs[p].dim;
    std::vector<std::size_t> stride = global_strides(s.shape);
    std::size_t lstride = stride[p];

    RegisterShape new_shape;
    for (std::size_t i = 0; i < s.shape.size(); ++i)
        if (i != p) new_shape.regs.push_back(s.shape.regs[i]);

    std::vector<std::size_t> rdims, rold, rnew;
    std::vector<std::size_t> new_stride = global_strides(new_shape);
    std::size_t nidx = 0;
    for (std::size_t i = 0; i < s.shape.size(); ++i) {
        if (i == p) continue;
        rdims.push_back(s.shape.regs[i].dim);
        rold.push_back(stride[i]);
        rnew.push_back(new_stride[nidx++]);
    }

    std::vector<cx> out(new_shape.total_dim(), cx(0.0));
    double off_mass = 0.0;
    if (rdims.empty()) {
        for (std::size_t k = 0; k < d; ++k)
            if (k != value) off_mass += std::norm(s.amplitudes[k * lstride]);
        out[0] = s.amplitudes[value * lstride];
    } else {
        std::vector<std::size_t> digit(rdims.size(), 0);
        std::size_t ro = 0, rn = 0;
        for (;;) {
            for (std::size_t k = 0; k < d; ++k)
                if (k != value) off_mass += std::norm(s.amplitudes[ro + k * lstride]);
            out[rn] = s.amplitudes[ro + value * lstride];
            std::size_t k = rdims.size();
            bool done = true;
            while (k-- > 0) {
                ++digit[k];
                ro += rold[k];
                rn += rnew[k];
                if (digit[k] < rdims[k]) {
                    done = false;
                    break;
                }
                ro -= rdims[k] * rold[k];
                rn -= rdims[k] * rnew[k];
                digit[k] = 0;
            }
            if (done) break;
        }
    }
    if (std::sqrt(off_mass) > tol)
        throw PreconditionError("remove_classical_register: register " + label +
                                " is not in the fixed classical state");
    s.amplitudes = std::move(out);
    s.shape = std::move(new_shape);
}

PureState tensor(const PureState& a, const PureState& b, std::size_t dim_cap) {
    std::size_t d = a.dim() * b.dim();
    if (d > dim_cap) {
        std::ostringstream os;
        os << "tensor state dimension " << d << " exceeds cap " << dim_cap;
        throw DimensionCap(os.str());
    }
    RegisterShape shape = a.shape;
    for (const auto& r : b.shape.regs) shape.regs.push_back(r);
    shape.validate();
    std::vector<cx> amp(d);
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < b.dim(); ++j) amp[i * b.dim() + j] = a.amplitudes[i] * b.amplitudes[j];
    return PureState(std::move(amp), std::move(shape));
}

void apply_dense(DensityOperator& r, const std::vector<std::string>& regs, const ComplexMatrix& op) {
    std::vector<std::size_t> toff = subspace_offsets(r.shape, regs);
    std::size_t T = toff.size();
    if (op.rows() != T || op.cols() != T) throw ShapeError("apply_dense: operator dimension mismatch");
    std::vector<std::size_t> rdims, rstrides;
    rest_dims_strides(r.shape, regs, rdims, rstrides);
    std::size_t dim = r.matrix.rows();

    // rows: rho <- (op x 1) rho
    ComplexMatrix tmp(dim, dim);
    std::vector<cx> buf(T);
    for (std::size_t col = 0; col < dim; ++col) {
        for_each_offset(rdims, rstrides, [&](std::size_t rr) {
            for (std::size_t t = 0; t < T; ++t) buf[t] = r.matrix.at(rr + toff[t], col);
            for (std::size_t i = 0; i < T; ++i) {
                cx acc = 0.0;
                const cx* row = &op.data()[i * T];
                for (std::size_t j = 0; j < T; ++j) acc += row[j] * buf[j];
                tmp.at(rr + toff[i], col) = acc;
            }
        });
    }
    // columns: rho <- rho (op x 1)^dag
    for (std::size_t row = 0; row < dim; ++row) {
        for_each_offset(rdims, rstrides, [&](std::size_t rr) {
            for (std::size_t t = 0; t < T; ++t) buf[t] = tmp.at(row, rr + toff[t]);
            for (std::size_t i = 0; i < T; ++i) {
                cx acc = 0.0;
                for (std::size_t j = 0; j < T; ++j) acc += buf[j] * std::conj(op.at(i, j));
                r.matrix.at(row, rr + toff[i]) = acc;
            }
        });
    }
}

cx overlap(const PureState& a, const PureState& b) {
    if (a.dim() != b.dim()) throw ShapeError("overlap: dimension mismatch");
    cx s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a.amplitudes[i]) * b.amplitudes[i];
    return s;
}

PureState purify(const DensityOperator& rho, const std::string& env_label) {
    HermEig e = herm_eig(rho.matrix);
    std::size_t n = rho.dim();
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < n; ++k)
        if (e.eigenvalues[k] > kEigenFloor) keep.push_back(k);
    if (keep.empty()) throw PreconditionError("purify: zero state");
    std::size_t rank = keep.size();
    RegisterShape shape = rho.shape;
    shape.regs.push_back({env_label, rank});
    shape.validate();
    std::vector<cx> amp(n * rank, cx(0.0));
    for (std::size_t kk = 0; kk < rank; ++kk) {
        double w = std::sqrt(e.eigenvalues[keep[kk]]);
        for (std::size_t i = 0; i < n; ++i) amp[i * rank + kk] = w * e.vectors.at(i, keep[kk]);
    }
    PureState p(std::move(amp), std::move(shape));
    p.normalize();
    return p;
}

namespace {

double subnorm_correction(double tr_rho, double tr_sigma) {
    double a = std::max(0.0, 1.0 - tr_rho);
    double b = std::max(0.0, 1.0 - tr_sigma);
    return std::sqrt(a * b);
}

bool diagonal_pair(const ComplexMatrix& a, const ComplexMatrix& b) {
    return a.off_diagonal_max() < 1e-13 && b.off_diagonal_max() < 1e-13;
}

}  // namespace

double fidelity(const DensityOperator& rho, const DensityOperator& sigma) {
    if (rho.dim() != sigma.dim()) throw ShapeError("fidelity: dimension mismatch");
    double corr = subnorm_correction(rho.trace_real(), sigma.trace_real());
    double f;
    if (diagonal_pair(rho.matrix, sigma.matrix)) {
        f = 0.0;
        for (std::size_t i = 0; i < rho.dim(); ++i) {
            double p = std::max(0.0, rho.matrix.at(i, i).real());
            double q = std::max(0.0, sigma.matrix.at(i, i).real());
            f += std::sqrt(p * q);
        }
    } else {
        ComplexMatrix s = mat_sqrt(rho.matrix);
        HermEig e = herm_eig(s * sigma.matrix * s);
        f = 0.0;
        for (double lam : e.eigenvalues) f += std::sqrt(std::max(0.0, lam));
    }
    return std::max(0.0, f + corr);
}

double fidelity(const PureState& a, const PureState& b) { return std::abs(overlap(a, b)); }

double fidelity(const PureState& a, const DensityOperator& b) {
    if (a.dim() != b.dim()) throw ShapeError("fidelity: dimension mismatch");
    std::vector<cx> v = b.matrix * a.amplitudes;
    cx s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += std::conj(a.amplitudes[i]) * v[i];
    return std::sqrt(std::max(0.0, s.real())) + subnorm_correction(1.0, b.trace_real());
}

namespace {
double p_from_f(double f) {
    f = std::min(f, 1.0);
    return std::sqrt(std::max(0.0, 1.0 - f * f));
}
}  // namespace

double purified_distance(const DensityOperator& rho, const DensityOperator& sigma) {
    return p_from_f(fidelity(rho, sigma));
}
double purified_distance(const PureState& a, const PureState& b) { return p_from_f(fidelity(a, b)); }
double purified_distance(const PureState& a, const DensityOperator& b) { return p_from_f(fidelity(a, b)); }

double trace_distance(const DensityOperator& rho, const DensityOperator& sigma) {
    if (rho.dim() != sigma.dim()) throw ShapeError("trace_distance: dimension mismatch");
    ComplexMatrix diff = rho.matrix - sigma.matrix;
    if (diff.off_diagonal_max() < 1e-13) {
        double s = 0.0;
        for (std::size_t i = 0; i < diff.rows(); ++i) s += std::abs(diff.at(i, i).real());
        return s;
    }
    HermEig e = herm_eig(diff);
    double s = 0.0;
    for (double lam : e.eigenvalues) s += std::abs(lam);
    return s;
}

HelstromResult helstrom_test(const DensityOperator& rho, const DensityOperator& sigma) {
    ComplexMatrix diff = rho.matrix - sigma.matrix;
    ComplexMatrix pi = positive_part_projector(diff);
    double gap = (pi * diff).trace().real();
    return {std::move(pi), gap};
}

bool gentle_measurement_bound_check(const DensityOperator& rho, const ComplexMatrix& pi, double eps) {
    if (!pi.square() || pi.rows() != rho.dim())
        throw PreconditionError("gentle measurement: operator dimension mismatch");
    if (!pi.is_hermitian(1e-9)) throw PreconditionError("gentle measurement: operator not Hermitian");
    HermEig e = herm_eig(pi);
    if (e.eigenvalues.front() < -1e-9 || e.eigenvalues.back() > 1.0 + 1e-9)
        throw PreconditionError("gentle measurement: operator not a measurement operator");
    double p = (pi * rho.matrix).trace().real();
    if (p < 1.0 - eps - 1e-9)
        throw PreconditionError("gentle measurement: Tr(Pi rho) < 1 - eps");
    if (p < 1e-12) return false;
    ComplexMatrix post = pi * rho.matrix * pi;
    post *= cx(1.0 / p);
    DensityOperator post_state(std::move(post), rho.shape);
    double lhs = trace_distance(post_state, rho);
    return lhs <= 2.0 * std::sqrt(eps) + 1e-9;
}

bool fuchs_vdg_check(const DensityOperator& rho, const DensityOperator& sigma) {
    double p = purified_distance(rho, sigma);
    double half_td = 0.5 * trace_distance(rho, sigma);
    double lower = 1.0 - std::sqrt(std::max(0.0, 1.0 - p * p));
    return lower <= half_td + 1e-9 && half_td <= p + 1e-9;
}

namespace {

Svd svd_impl(const ComplexMatrix& m, bool thin) {
    std::size_t rows = m.rows(), cols = m.cols();
    if (rows < cols) {
        Svd s = svd_impl(m.dagger(), thin);
        return {std::move(s.v), std::move(s.singular), std::move(s.u)};
    }
    // rows >= cols: eigen-decompose M^dag M
    ComplexMatrix g = m.dagger() * m;
    HermEig e = herm_eig(g);
    std::size_t k = cols;
    Svd out;
    out.singular.resize(k);
    out.v = ComplexMatrix(cols, cols);
    // descending order
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t src = k - 1 - i;
        out.singular[i] = std::sqrt(std::max(0.0, e.eigenvalues[src]));
        for (std::size_t r = 0; r < cols; ++r) out.v.at(r, i) = e.vectors.at(r, src);
    }
    double tol = 1e-12 * std::max(1.0, out.singular.empty() ? 0.0 : out.singular[0]);
    std::size_t ucols = thin ? k : rows;
    out.u = ComplexMatrix(rows, ucols);
    std::vector<std::size_t> filled;
    for (std::size_t i = 0; i < k; ++i) {
        if (out.singular[i] <= tol) continue;
        for (std::size_t r = 0; r < rows; ++r) {
            cx acc = 0.0;
            for (std::size_t c = 0; c < cols; ++c) acc += m.at(r, c) * out.v.at(c, i);
            out.u.at(r, i) = acc / out.singular[i];
        }
        filled.push_back(i);
    }
    // complete remaining columns with a deterministic Gram-Schmidt sweep
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < ucols; ++i)
        if (std::find(filled.begin(), filled.end(), i) == filled.end()) missing.push_back(i);
    std::size_t cand = 0;
    for (std::size_t slot : missing) {
        for (; cand < rows; ++cand) {
            std::vector<cx> w(rows, cx(0.0));
            w[cand] = 1.0;
            for (std::size_t c : filled) {
                cx proj = 0.0;
                for (std::size_t r = 0; r < rows; ++r) proj += std::conj(out.u.at(r, c)) * w[r];
                for (std::size_t r = 0; r < rows; ++r) w[r] -= proj * out.u.at(r, c);
            }
            double nw = 0.0;
            for (const cx& x : w) nw += std::norm(x);
            nw = std::sqrt(nw);
            if (nw > 1e-6) {
                for (std::size_t r = 0; r < rows; ++r) out.u.at(r, slot) = w[r] / nw;
                filled.push_back(slot);
                ++cand;
                break;
            }
        }
    }
    return out;
}

}  // namespace

Svd svd(const ComplexMatrix& m) { return svd_impl(m, false); }
Svd svd_thin(const ComplexMatrix& m) { return svd_impl(m, true); }

namespace {

// Reshapes a pure state into an (anchor x act) coefficient matrix, anchor
// registers being the complement of act_on in shape order.
ComplexMatrix coefficient_matrix(const PureState& s, const std::vector<std::string>& act_on,
                                 std::vector<std::string>* anchor_out) {
    std::vector<std::string> anchor;
    for (const auto& r : s.shape.regs)
        if (std::find(act_on.begin(), act_on.end(), r.label) == act_on.end()) anchor.push_back(r.label);
    std::vector<std::string> order = anchor;
    order.insert(order.end(), act_on.begin(), act_on.end());
    std::vector<cx> perm = permute_systems(s.amplitudes, s.shape, order);
    std::size_t bdim = 1;
    for (const std::string& l : act_on) bdim *= s.shape.dim_of(l);
    std::size_t adim = s.dim() / bdim;
    ComplexMatrix x(adim, bdim);
    for (std::size_t a = 0; a < adim; ++a)
        for (std::size_t b = 0; b < bdim; ++b) x.at(a, b) = perm[a * bdim + b];
    if (anchor_out) *anchor_out = anchor;
    return x;
}

}  // namespace

ComplexMatrix uhlmann_isometry(const PureState& xi, const std::vector<std::string>& act_on_xi,
                               const PureState& theta, const std::vector<std::string>& act_on_theta) {
    std::vector<std::string> anchor_xi, anchor_theta;
    ComplexMatrix x = coefficient_matrix(xi, act_on_xi, &anchor_xi);
    ComplexMatrix y = coefficient_matrix(theta, act_on_theta, &anchor_theta);
    if (x.rows() != y.rows())
        throw ShapeError("uhlmann: anchor dimensions differ between the two states");
    if (x.cols() < y.cols())
        throw ShapeError("uhlmann: target environment smaller than source environment");
    ComplexMatrix m = x.dagger() * y;  // B_xi x B_theta
    Svd s = svd_thin(m);
    // W = conj(U_thin) V^T maximizes Re<xi|(1 x W)|theta>
    std::size_t bx = x.cols(), bt = y.cols();
    ComplexMatrix w(bx, bt);
    for (std::size_t i = 0; i < bx; ++i)
        for (std::size_t j = 0; j < bt; ++j) {
            cx acc = 0.0;
            for (std::size_t k = 0; k < bt; ++k) acc += std::conj(s.u.at(i, k)) * s.v.at(j, k);
            w.at(i, j) = acc;
        }
    return w;
}

ComplexMatrix uhlmann_unitary(const PureState& xi, const PureState& theta,
                              const std::vector<std::string>& act_on) {
    std::size_t bx = 1, bt = 1;
    for (const std::string& l : act_on) {
        bx *= xi.shape.dim_of(l);
        bt *= theta.shape.dim_of(l);
    }
    if (bx != bt) throw ShapeError("uhlmann_unitary: acted registers differ in dimension");
    return uhlmann_isometry(xi, act_on, theta, act_on);
}

}  // namespace qsr
