#include "qsr/embezzle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace qsr {

void EmbezzleSpec::validate() const {
    if (a < b || b < 1) throw PreconditionError("embezzle spec: need a >= b >= 1");
    if (delta <= 0.0 || delta >= 1.0) throw PreconditionError("embezzle spec: delta outside (0,1)");
    if (gamma <= 0.0 || gamma >= 1.0) throw PreconditionError("embezzle spec: gamma outside (0,1)");
    if (static_cast<double>(n) < std::pow(static_cast<double>(a), 1.0 / delta) * (1.0 - 1e-6))
        throw PreconditionError("embezzle spec: n < a^(1/delta)");
    if (dim_e < b) throw ShapeError("embezzle spec: |E| < b");
    if (dim_d < n) throw ShapeError("embezzle spec: |D| < n");
}

double harmonic_range(std::size_t a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = n; i >= a && i > 0; --i) s += 1.0 / static_cast<double>(i);
    return s;
}

PureState xi_state(std::size_t a, std::size_t n, const std::string& label_d,
                   const std::string& label_dp) {
    if (a < 1 || a > n) throw DomainError("xi_state: need 1 <= a <= n");
    double s = harmonic_range(a, n);
    RegisterShape shape{{label_d, n}, {label_dp, n}};
    std::vector<cx> amp(n * n, cx(0.0));
    for (std::size_t i = a; i <= n; ++i)
        amp[(i - 1) * n + (i - 1)] = 1.0 / std::sqrt(s * static_cast<double>(i));
    return PureState(std::move(amp), std::move(shape));
}

PureState xi_state_value_indexed(std::size_t a, std::size_t n, const std::string& label_d,
                                 const std::string& label_dp) {
    if (a < 1 || a > n) throw DomainError("xi_state: need 1 <= a <= n");
    double s = harmonic_range(a, n);
    std::size_t d = n + 1;
    RegisterShape shape{{label_d, d}, {label_dp, d}};
    std::vector<cx> amp(d * d, cx(0.0));
    for (std::size_t i = a; i <= n; ++i) amp[i * d + i] = 1.0 / std::sqrt(s * static_cast<double>(i));
    return PureState(std::move(amp), std::move(shape));
}

std::vector<double> xi_marginal_value_indexed(std::size_t a, std::size_t n) {
    double s = harmonic_range(a, n);
    std::vector<double> diag(n + 1, 0.0);
    for (std::size_t i = a; i <= n; ++i) diag[i] = 1.0 / (s * static_cast<double>(i));
    return diag;
}

std::vector<std::size_t> w_b_permutation(std::size_t b, std::size_t dim_d, std::size_t dim_e) {
    if (b < 1) throw DomainError("w_b_permutation: b >= 1 required");
    if (dim_e < b) throw ShapeError("w_b_permutation: |E| < b");
    std::size_t total = dim_d * dim_e;
    std::vector<std::size_t> perm(total, total);
    std::vector<char> used(total, 0);
    // constrained slice: (i, 0) -> (i/b, i mod b)
    for (std::size_t i = 0; i < dim_d; ++i) {
        std::size_t dp = i / b, e = i % b;
        if (dp >= dim_d) throw ShapeError("w_b_permutation: |D| too small for the slice image");
        std::size_t dst = dp * dim_e + e;
        perm[i * dim_e + 0] = dst;
        used[dst] = 1;
    }
    // remaining sources filled along the free cells in order
    std::size_t next = 0;
    for (std::size_t e0 = 1; e0 < dim_e; ++e0)
        for (std::size_t i = 0; i < dim_d; ++i) {
            while (next < total && used[next]) ++next;
            perm[i * dim_e + e0] = next;
            used[next] = 1;
        }
    return perm;
}

ComplexMatrix w_b_unitary(std::size_t b, std::size_t dim_d, std::size_t dim_e) {
    std::vector<std::size_t> perm = w_b_permutation(b, dim_d, dim_e);
    ComplexMatrix u(perm.size(), perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) u.at(perm[i], i) = 1.0;
    return u;
}

UnifEmbezzleReport unif_embezzle_check(std::size_t a, std::size_t b, std::size_t n, double delta) {
    if (a < b || b < 1) throw PreconditionError("unif_embezzle_check: need a >= b >= 1");
    if (delta <= 0.0 || delta >= 1.0)
        throw PreconditionError("unif_embezzle_check: delta outside (0,1)");
    if (static_cast<double>(n) < std::pow(static_cast<double>(a), 1.0 / delta) * (1.0 - 1e-6))
        throw PreconditionError("unif_embezzle_check: n < a^(1/delta)");
    double s_an = harmonic_range(a, n), s_1n = harmonic_range(1, n);
    double factor = 1.0 + 15.0 * delta;
    UnifEmbezzleReport rep;
    rep.s_ratio = s_1n / s_an;
    rep.slack1 = 1e300;
    rep.slack2 = 1e300;
    rep.trace = 0.0;
    for (std::size_t i = a; i <= n; ++i) {
        std::size_t dp = i / b;
        double lhs = 1.0 / (s_an * static_cast<double>(i));
        double ref = 1.0 / (s_1n * static_cast<double>(dp) * static_cast<double>(b));
        rep.slack1 = std::min(rep.slack1, factor * ref - lhs);
        rep.slack2 = std::min(rep.slack2, 2.0 * lhs - ref);
        rep.trace += lhs;
    }
    return rep;
}

namespace {

struct RationalSpectrum {
    std::vector<std::size_t> multiples;  // k_c with q_c = k_c / a, in eigen order
    HermEig eig;
};

RationalSpectrum rational_spectrum(const DensityOperator& rho, std::size_t a, double tol) {
    RationalSpectrum rs;
    rs.eig = herm_eig(rho.matrix);
    std::size_t total = 0;
    for (double q : rs.eig.eigenvalues) {
        double scaled = q * static_cast<double>(a);
        auto k = static_cast<std::size_t>(std::llround(std::max(0.0, scaled)));
        if (std::abs(scaled - static_cast<double>(k)) > tol)
            throw RationalizeError("spectrum not an integer multiple of gamma/|C| (residual " +
                                   std::to_string(std::abs(scaled - static_cast<double>(k))) + ")");
        rs.multiples.push_back(k);
        total += k;
    }
    if (total != a) throw RationalizeError("rationalized spectrum does not sum to one");
    return rs;
}

}  // namespace

FlattenResult flatten_unitary(const DensityOperator& rho_c, double gamma, double delta,
                              std::size_t n_cap) {
    if (gamma <= 0.0 || gamma >= 1.0) throw PreconditionError("flatten_unitary: gamma outside (0,1)");
    std::size_t dim_c = rho_c.dim();
    double a_real = static_cast<double>(dim_c) / gamma;
    auto a = static_cast<std::size_t>(std::llround(a_real));
    if (std::abs(a_real - static_cast<double>(a)) > 1e-9)
        throw PreconditionError("flatten_unitary: |C|/gamma is not an integer");
    double n_real = std::pow(static_cast<double>(a), 1.0 / delta);
    auto n = static_cast<std::size_t>(std::ceil(n_real - 1e-9));
    if (n > n_cap) {
        std::ostringstream os;
        os << "flatten_unitary: catalyst size " << n << " exceeds cap " << n_cap;
        throw DimensionCap(os.str());
    }

    RationalSpectrum rs = rational_spectrum(rho_c, a, 1e-6);
    FlattenResult out;
    out.a = a;
    out.n = n;
    out.b_of_c = rs.multiples;
    out.eigvecs = rs.eig.vectors;

    double s_an = harmonic_range(a, n), s_1n = harmonic_range(1, n);
    double factor = 1.0 + 15.0 * delta;
    out.slack1 = 1e300;
    out.slack2 = 1e300;
    ComplexMatrix flat(dim_c * a, dim_c * a);
    for (std::size_t c = 0; c < dim_c; ++c) {
        std::size_t b = rs.multiples[c];
        out.perm_w.push_back(b >= 1 ? w_b_permutation(b, n + 1, a)
                                    : [&] {
                                          std::vector<std::size_t> id((n + 1) * a);
                                          std::iota(id.begin(), id.end(), 0);
                                          return id;
                                      }());
        if (b < 1) continue;
        double q = static_cast<double>(b) / static_cast<double>(a);
        for (std::size_t i = a; i <= n; ++i) {
            std::size_t dp = i / b;
            double lhs = q / (s_an * static_cast<double>(i));
            double ref = (1.0 / static_cast<double>(a)) / (s_1n * static_cast<double>(dp));
            out.slack1 = std::min(out.slack1, factor * ref - lhs);
            out.slack2 = std::min(out.slack2, 2.0 * lhs - ref);
        }
        // flat extension cells (v_c, e < b), eigenvalue 1/a each
        for (std::size_t e = 0; e < b; ++e)
            for (std::size_t r = 0; r < dim_c; ++r)
                for (std::size_t cc = 0; cc < dim_c; ++cc)
                    flat.at(r * a + e, cc * a + e) +=
                        (1.0 / static_cast<double>(a)) * rs.eig.vectors.at(r, c) *
                        std::conj(rs.eig.vectors.at(cc, c));
    }
    out.flat_extension =
        DensityOperator(std::move(flat), RegisterShape{{"C", dim_c}, {"E", a}});
    return out;
}

CqState split_cq(const DensityOperator& rho, const std::string& j_label) {
    std::size_t pj = rho.shape.index_of(j_label);
    std::size_t k = rho.shape.regs[pj].dim;
    // reorder with J leading
    std::vector<std::string> order{j_label};
    for (const auto& r : rho.shape.regs)
        if (r.label != j_label) order.push_back(r.label);
    ComplexMatrix m = permute_systems(rho.matrix, rho.shape, order);
    std::size_t dc = rho.dim() / k;
    RegisterShape cshape;
    for (const auto& r : rho.shape.regs)
        if (r.label != j_label) cshape.regs.push_back(r);

    double offdiag = 0.0;
    CqState cq;
    for (std::size_t j = 0; j < k; ++j) {
        ComplexMatrix blk(dc, dc);
        for (std::size_t x = 0; x < dc; ++x)
            for (std::size_t y = 0; y < dc; ++y) blk.at(x, y) = m.at(j * dc + x, j * dc + y);
        for (std::size_t jp = 0; jp < k; ++jp) {
            if (jp == j) continue;
            for (std::size_t x = 0; x < dc; ++x)
                for (std::size_t y = 0; y < dc; ++y)
                    offdiag = std::max(offdiag, std::abs(m.at(j * dc + x, jp * dc + y)));
        }
        double p = blk.trace().real();
        cq.p.push_back(p);
        if (p > 1e-12) blk *= cx(1.0 / p);
        cq.rho_j.push_back(DensityOperator(std::move(blk), cshape));
    }
    if (offdiag > 1e-9)
        throw PreconditionError("split_cq: state is not classical on " + j_label +
                                " (off-diagonal weight " + std::to_string(offdiag) + ")");
    return cq;
}

DecoupleResult decouple_cq(const CqState& cq, double gamma, double delta, std::size_t n_cap,
                           std::size_t n_override) {
    if (cq.p.empty()) throw PreconditionError("decouple_cq: empty block list");
    std::size_t dim_c = cq.rho_j.front().dim();
    for (const auto& r : cq.rho_j)
        if (r.dim() != dim_c) throw ShapeError("decouple_cq: block dimension mismatch");
    double a_real = static_cast<double>(dim_c) / gamma;
    auto a = static_cast<std::size_t>(std::llround(a_real));
    if (std::abs(a_real - static_cast<double>(a)) > 1e-9)
        throw PreconditionError("decouple_cq: |C|/gamma is not an integer");
    double n_real = std::pow(static_cast<double>(a), 1.0 / delta);
    auto n = static_cast<std::size_t>(std::ceil(n_real - 1e-9));
    if (n_override > 0) {
        if (n_override < a) throw PreconditionError("decouple_cq: n override below a");
        n = n_override;
    }
    if (n > n_cap) {
        std::ostringstream os;
        os << "decouple_cq: catalyst size " << n << " exceeds cap " << n_cap;
        throw DimensionCap(os.str());
    }

    DecoupleResult out;
    delta = std::log(static_cast<double>(a)) / std::log(static_cast<double>(std::max<std::size_t>(n, a + 1)));
    out.a = a;
    out.n = n;
    out.gamma = gamma;
    out.delta = delta;
    double s_an = harmonic_range(a, n), s_1n = harmonic_range(1, n);
    double factor = 1.0 + 15.0 * delta;
    out.slack1 = 1e300;
    out.slack2 = 1e300;
    out.trace_check = 0.0;

    std::size_t dim_d = n + 1;
    for (std::size_t j = 0; j < cq.p.size(); ++j) {
        RationalSpectrum rs = rational_spectrum(cq.rho_j[j], a, 1e-6);
        out.b_of_c_j.push_back(rs.multiples);
        out.rot_j.push_back(rs.eig.vectors);

        // c-controlled W_{b(c)} on the (C, E, D) value space
        std::vector<std::size_t> wperm(dim_c * a * dim_d);
        for (std::size_t c = 0; c < dim_c; ++c) {
            std::size_t b = rs.multiples[c];
            std::vector<std::size_t> wb;
            if (b >= 1) {
                wb = w_b_permutation(b, dim_d, a);
            } else {
                wb.resize(dim_d * a);
                std::iota(wb.begin(), wb.end(), 0);
            }
            for (std::size_t d = 0; d < dim_d; ++d)
                for (std::size_t e = 0; e < a; ++e) {
                    std::size_t img = wb[d * a + e];
                    std::size_t dp = img / a, ep = img % a;
                    wperm[(c * a + e) * dim_d + d] = (c * a + ep) * dim_d + dp;
                }
        }
        out.perm_w_j.push_back(std::move(wperm));

        // support cells (c, e < b_c) onto the leading a cells of (C, E)
        std::vector<std::size_t> vperm(dim_c * a, dim_c * a);
        std::vector<char> used(dim_c * a, 0);
        std::size_t s = 0;
        for (std::size_t c = 0; c < dim_c; ++c)
            for (std::size_t e = 0; e < rs.multiples[c]; ++e) {
                vperm[c * a + e] = s;
                used[s] = 1;
                ++s;
            }
        std::size_t next = 0;
        for (std::size_t cell = 0; cell < dim_c * a; ++cell) {
            if (vperm[cell] != dim_c * a) continue;
            while (used[next]) ++next;
            vperm[cell] = next;
            used[next] = 1;
        }
        out.perm_v_j.push_back(std::move(vperm));

        if (cq.p[j] < 1e-12) continue;
        for (std::size_t c = 0; c < dim_c; ++c) {
            std::size_t b = rs.multiples[c];
            if (b < 1) continue;
            double q = static_cast<double>(b) / static_cast<double>(a);
            for (std::size_t i = a; i <= n; ++i) {
                std::size_t dp = i / b;
                double lhs = q / (s_an * static_cast<double>(i));
                double ref = (1.0 / static_cast<double>(a)) / (s_1n * static_cast<double>(dp));
                out.slack1 = std::min(out.slack1, factor * ref - lhs);
                out.slack2 = std::min(out.slack2, 2.0 * lhs - ref);
            }
        }
    }
    for (std::size_t j = 0; j < cq.p.size(); ++j) out.trace_check += cq.p[j];

    ComplexMatrix nu(dim_c * a, dim_c * a);
    for (std::size_t s = 0; s < a; ++s) nu.at(s, s) = 1.0 / static_cast<double>(a);
    out.nu_ce = DensityOperator(std::move(nu), RegisterShape{{"C", dim_c}, {"E", a}});
    return out;
}

RationalizeResult spectrum_rationalize(const DensityOperator& rho, double gamma, std::size_t dim_c) {
    if (gamma <= 0.0 || gamma >= 1.0)
        throw PreconditionError("spectrum_rationalize: gamma outside (0,1)");
    double unit = gamma / static_cast<double>(dim_c);
    double t_real = 1.0 / unit;
    auto t = static_cast<std::size_t>(std::llround(t_real));
    if (std::abs(t_real - static_cast<double>(t)) > 1e-9)
        throw PreconditionError("spectrum_rationalize: |C|/gamma is not an integer");

    HermEig e = herm_eig(rho.matrix);
    std::size_t d = rho.dim();
    std::vector<std::size_t> k(d);
    std::vector<double> rem(d);
    long long total = 0;
    for (std::size_t i = 0; i < d; ++i) {
        double scaled = std::max(0.0, e.eigenvalues[i]) / unit;
        k[i] = static_cast<std::size_t>(std::floor(scaled + 1e-12));
        rem[i] = scaled - static_cast<double>(k[i]);
        total += static_cast<long long>(k[i]);
    }
    // largest-remainder apportionment; ties resolved toward lower eigen index
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return rem[x] > rem[y]; });
    long long deficit = static_cast<long long>(t) - total;
    std::size_t pos = 0;
    while (deficit > 0 && pos < d) {
        ++k[order[pos++]];
        --deficit;
    }
    pos = d;
    while (deficit < 0 && pos-- > 0) {
        std::size_t idx = order[pos];
        if (k[idx] > 0) {
            --k[idx];
            ++deficit;
        }
    }
    if (deficit != 0) throw RationalizeError("spectrum_rationalize: apportionment failed");

    ComplexMatrix m(d, d);
    for (std::size_t c = 0; c < d; ++c) {
        double q = static_cast<double>(k[c]) * unit;
        if (q == 0.0) continue;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                m.at(i, j) += q * e.vectors.at(i, c) * std::conj(e.vectors.at(j, c));
    }
    RationalizeResult out;
    out.state = DensityOperator(std::move(m), rho.shape);
    out.residual = purified_distance(rho, out.state);
    return out;
}

VdhEmbezzle vdh_embezzle(const PureState& phi, const std::vector<std::string>& alice_labels,
                         std::size_t n) {
    if (n < 1) throw DomainError("vdh_embezzle: n >= 1 required");
    std::vector<std::string> bob_labels;
    for (const auto& r : phi.shape.regs)
        if (std::find(alice_labels.begin(), alice_labels.end(), r.label) == alice_labels.end())
            bob_labels.push_back(r.label);
    std::vector<std::string> order = alice_labels;
    order.insert(order.end(), bob_labels.begin(), bob_labels.end());
    std::vector<cx> perm = permute_systems(phi.amplitudes, phi.shape, order);
    std::size_t ma = 1;
    for (const auto& l : alice_labels) ma *= phi.shape.dim_of(l);
    std::size_t mb = phi.dim() / ma;
    ComplexMatrix x(ma, mb);
    for (std::size_t i = 0; i < ma; ++i)
        for (std::size_t j = 0; j < mb; ++j) x.at(i, j) = perm[i * mb + j];
    Svd sv = svd(x);

    VdhEmbezzle out;
    out.n = n;
    out.dim_a_side = ma;
    out.dim_b_side = mb;
    out.rot_a = sv.u;
    out.rot_b = sv.v.conj();
    std::size_t rank = 0;
    for (double s : sv.singular)
        if (s > 1e-12) ++rank;
    rank = std::max<std::size_t>(rank, 1);
    out.schmidt_rank = rank;

    double s1n = harmonic_range(1, n);
    struct Cell {
        double w;
        std::size_t i, l;
    };
    std::vector<Cell> targets;
    targets.reserve(n * rank);
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t l = 0; l < rank; ++l) {
            double q = sv.singular[l] * sv.singular[l];
            targets.push_back({q / (s1n * static_cast<double>(i)), i, l});
        }
    std::stable_sort(targets.begin(), targets.end(), [](const Cell& a, const Cell& b) {
        if (a.w != b.w) return a.w > b.w;
        if (a.i != b.i) return a.i < b.i;
        return a.l < b.l;
    });

    // source Schmidt weights 1/(S(1,n) i), already descending in i
    double f = 0.0;
    std::vector<std::size_t> perm_pairs(n * ma, n * ma);
    std::vector<char> used(n * ma, 0);
    for (std::size_t kk = 0; kk < n; ++kk) {
        double v = 1.0 / (s1n * static_cast<double>(kk + 1));
        double w = kk < targets.size() ? targets[kk].w : 0.0;
        f += std::sqrt(v * w);
        std::size_t dst;
        if (kk < targets.size())
            dst = (targets[kk].i - 1) * ma + targets[kk].l;
        else
            dst = kk * ma;  // unreachable for rank >= 1
        perm_pairs[kk * ma + 0] = dst;
        used[dst] = 1;
    }
    std::size_t next = 0;
    for (std::size_t src = 0; src < n * ma; ++src) {
        if (perm_pairs[src] != n * ma) continue;
        while (used[next]) ++next;
        perm_pairs[src] = next;
        used[next] = 1;
    }
    out.perm_a = perm_pairs;
    out.fidelity = std::min(1.0, f);
    out.achieved_p = std::sqrt(std::max(0.0, 1.0 - out.fidelity * out.fidelity));

    // mirror permutation for Bob's side
    out.perm_b.assign(n * mb, n * mb);
    std::vector<char> used_b(n * mb, 0);
    for (std::size_t kk = 0; kk < n; ++kk) {
        std::size_t dst;
        if (kk < targets.size())
            dst = (targets[kk].i - 1) * mb + targets[kk].l;
        else
            dst = kk * mb;
        out.perm_b[kk * mb + 0] = dst;
        used_b[dst] = 1;
    }
    next = 0;
    for (std::size_t src = 0; src < n * mb; ++src) {
        if (out.perm_b[src] != n * mb) continue;
        while (used_b[next]) ++next;
        out.perm_b[src] = next;
        used_b[next] = 1;
    }
    return out;
}

namespace {

std::vector<std::string> concat_labels(const std::string& head, const std::vector<std::string>& tail) {
    std::vector<std::string> out{head};
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
}

}  // namespace

void apply_vdh(PureState& s, const VdhEmbezzle& emb, const std::string& label_d,
               const std::vector<std::string>& alice_regs, const std::string& label_dp,
               const std::vector<std::string>& bob_regs, bool out_direction) {
    std::vector<std::string> a_group = concat_labels(label_d, alice_regs);
    std::vector<std::string> b_group = concat_labels(label_dp, bob_regs);
    if (!out_direction) {
        apply_basis_map(s, a_group, emb.perm_a);
        apply_dense(s, alice_regs, emb.rot_a);
        apply_basis_map(s, b_group, emb.perm_b);
        apply_dense(s, bob_regs, emb.rot_b);
    } else {
        std::vector<std::size_t> inv_a(emb.perm_a.size()), inv_b(emb.perm_b.size());
        for (std::size_t i = 0; i < emb.perm_a.size(); ++i) inv_a[emb.perm_a[i]] = i;
        for (std::size_t i = 0; i < emb.perm_b.size(); ++i) inv_b[emb.perm_b[i]] = i;
        apply_dense(s, alice_regs, emb.rot_a.dagger());
        apply_basis_map(s, a_group, inv_a);
        apply_dense(s, bob_regs, emb.rot_b.dagger());
        apply_basis_map(s, b_group, inv_b);
    }
}

void apply_vdh_controlled(PureState& s, const std::vector<VdhEmbezzle>& embs,
                          const std::string& ctrl_alice, const std::string& ctrl_bob,
                          const std::string& label_d, const std::vector<std::string>& alice_regs,
                          const std::string& label_dp, const std::vector<std::string>& bob_regs,
                          bool out_direction) {
    std::vector<std::string> a_group = concat_labels(label_d, alice_regs);
    std::vector<std::string> b_group = concat_labels(label_dp, bob_regs);
    std::vector<std::vector<std::size_t>> perm_a, perm_b, inv_a, inv_b;
    std::vector<ComplexMatrix> rot_a, rot_b, rot_a_dag, rot_b_dag;
    for (const VdhEmbezzle& e : embs) {
        perm_a.push_back(e.perm_a);
        perm_b.push_back(e.perm_b);
        std::vector<std::size_t> ia(e.perm_a.size()), ib(e.perm_b.size());
        for (std::size_t i = 0; i < ia.size(); ++i) ia[e.perm_a[i]] = i;
        for (std::size_t i = 0; i < ib.size(); ++i) ib[e.perm_b[i]] = i;
        inv_a.push_back(std::move(ia));
        inv_b.push_back(std::move(ib));
        rot_a.push_back(e.rot_a);
        rot_b.push_back(e.rot_b);
        rot_a_dag.push_back(e.rot_a.dagger());
        rot_b_dag.push_back(e.rot_b.dagger());
    }
    if (!out_direction) {
        apply_ctrl_basis_map(s, {ctrl_alice}, a_group, perm_a);
        apply_ctrl_dense(s, {ctrl_alice}, alice_regs, rot_a);
        apply_ctrl_basis_map(s, {ctrl_bob}, b_group, perm_b);
        apply_ctrl_dense(s, {ctrl_bob}, bob_regs, rot_b);
    } else {
        apply_ctrl_dense(s, {ctrl_alice}, alice_regs, rot_a_dag);
        apply_ctrl_basis_map(s, {ctrl_alice}, a_group, inv_a);
        apply_ctrl_dense(s, {ctrl_bob}, bob_regs, rot_b_dag);
        apply_ctrl_basis_map(s, {ctrl_bob}, b_group, inv_b);
    }
}

}  // namespace qsr
