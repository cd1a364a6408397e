#include "qsr/entropies.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace qsr {

namespace {

double clamp_nonneg(double x, double tol) { return (x < 0.0 && x > -tol) ? 0.0 : x; }

double support_leakage(const DensityOperator& rho, const DensityOperator& sigma) {
    ComplexMatrix p = support_projector(sigma.matrix);
    return rho.trace_real() - (p * rho.matrix).trace().real();
}

}  // namespace

double von_neumann(const DensityOperator& rho) {
    HermEig e = herm_eig(rho.matrix);
    double s = 0.0;
    for (double lam : e.eigenvalues)
        if (lam > kEigenFloor) s -= lam * std::log2(lam);
    return clamp_nonneg(s, 1e-12);
}

ExtReal rel_entropy(const DensityOperator& rho, const DensityOperator& sigma) {
    if (rho.dim() != sigma.dim()) throw ShapeError("rel_entropy: dimension mismatch");
    if (support_leakage(rho, sigma) > 1e-9) return ExtReal::infinity();
    HermEig e = herm_eig(rho.matrix);
    double tr_rho_log_rho = 0.0;
    for (double lam : e.eigenvalues)
        if (lam > kEigenFloor) tr_rho_log_rho += lam * std::log2(lam);
    ComplexMatrix log_sigma = mat_log2_on_support(sigma.matrix);
    double tr_rho_log_sigma = (rho.matrix * log_sigma).trace().real();
    return ExtReal::of(tr_rho_log_rho - tr_rho_log_sigma);
}

double rel_entropy_variance(const DensityOperator& rho, const DensityOperator& sigma) {
    if (support_leakage(rho, sigma) > 1e-9)
        throw SupportError("rel_entropy_variance: supp(rho) not contained in supp(sigma)");
    ComplexMatrix l = mat_log2_on_support(rho.matrix) - mat_log2_on_support(sigma.matrix);
    double m2 = (rho.matrix * l * l).trace().real();
    double d = rel_entropy(rho, sigma).value;
    return clamp_nonneg(m2 - d * d, 1e-9);
}

ExtReal d_max(const DensityOperator& rho, const DensityOperator& sigma) {
    if (rho.dim() != sigma.dim()) throw ShapeError("d_max: dimension mismatch");
    if (support_leakage(rho, sigma) > 1e-9) return ExtReal::infinity();
    ComplexMatrix isq = mat_inv_sqrt_on_support(sigma.matrix);
    ComplexMatrix m = isq * rho.matrix * isq;
    double lam_max;
    if (m.rows() <= 256) {
        HermEig e = herm_eig(m);
        lam_max = e.eigenvalues.back();
    } else {
        // power iteration; PSD, so the Rayleigh quotient climbs to lambda_max
        std::size_t n = m.rows();
        std::vector<cx> v(n, cx(1.0 / std::sqrt(double(n))));
        double lam = 0.0;
        for (int it = 0; it < 5000; ++it) {
            std::vector<cx> w = m * v;
            double nw = 0.0;
            for (const cx& x : w) nw += std::norm(x);
            nw = std::sqrt(nw);
            if (nw < 1e-300) break;
            for (cx& x : w) x /= nw;
            double prev = lam;
            lam = nw;
            v = std::move(w);
            if (it > 30 && std::abs(lam - prev) < 1e-14 * std::max(1.0, lam)) break;
        }
        lam_max = lam;
    }
    if (lam_max <= 0.0) return ExtReal::of(-1074.0);  // zero state edge
    return ExtReal::of(std::log2(lam_max));
}

namespace {

struct NpEigenvector {
    double eigenvalue;    // of rho - t sigma
    double rho_weight;    // <v|rho|v>
    double sigma_weight;  // <v|sigma|v>
    std::size_t comp;
    std::vector<cx> local;  // coordinates within the component
};

// Both operators restricted to the joint sparsity components; rho - t sigma
// is block-diagonal with respect to this partition for every t, so the
// threshold sweep works on small dense blocks.
struct NpContext {
    std::vector<std::vector<std::size_t>> comps;
    std::vector<ComplexMatrix> rho_c, sigma_c;
    std::size_t dim = 0;

    NpContext(const ComplexMatrix& rho, const ComplexMatrix& sigma) {
        dim = rho.rows();
        ComplexMatrix joint = rho;
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j)
                joint.at(i, j) = std::abs(rho.at(i, j)) + std::abs(sigma.at(i, j));
        comps = sparsity_components_of(joint);
        for (const auto& comp : comps) {
            std::size_t k = comp.size();
            ComplexMatrix rc(k, k), sc(k, k);
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j < k; ++j) {
                    rc.at(i, j) = rho.at(comp[i], comp[j]);
                    sc.at(i, j) = sigma.at(comp[i], comp[j]);
                }
            rho_c.push_back(std::move(rc));
            sigma_c.push_back(std::move(sc));
        }
    }

    static std::vector<std::vector<std::size_t>> sparsity_components_of(const ComplexMatrix& m) {
        std::size_t n = m.rows();
        std::vector<std::size_t> parent(n);
        for (std::size_t i = 0; i < n; ++i) parent[i] = i;
        std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
            while (parent[x] != x) {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            return x;
        };
        double tol = 1e-14 * std::max(1.0, m.max_abs());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (std::abs(m.at(i, j)) > tol) parent[find(i)] = find(j);
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

    std::vector<NpEigenvector> eigenvectors(double t) const {
        std::vector<NpEigenvector> out;
        for (std::size_t c = 0; c < comps.size(); ++c) {
            std::size_t k = comps[c].size();
            ComplexMatrix e = rho_c[c];
            ComplexMatrix ts = sigma_c[c];
            ts *= cx(t);
            e -= ts;
            HermEig eg = herm_eig(e);
            for (std::size_t col = 0; col < k; ++col) {
                NpEigenvector v;
                v.eigenvalue = eg.eigenvalues[col];
                v.comp = c;
                v.local.resize(k);
                for (std::size_t i = 0; i < k; ++i) v.local[i] = eg.vectors.at(i, col);
                std::vector<cx> rv = rho_c[c] * v.local;
                std::vector<cx> sv = sigma_c[c] * v.local;
                cx r = 0.0, s = 0.0;
                for (std::size_t i = 0; i < k; ++i) {
                    r += std::conj(v.local[i]) * rv[i];
                    s += std::conj(v.local[i]) * sv[i];
                }
                v.rho_weight = r.real();
                v.sigma_weight = s.real();
                out.push_back(std::move(v));
            }
        }
        return out;
    }

    double alpha(double t) const {
        double a = 0.0;
        for (const NpEigenvector& v : eigenvectors(t))
            if (v.eigenvalue > kEigenFloor) a += v.rho_weight;
        return a;
    }
};

struct NpBlock {
    double eigenvalue;
    double rho_weight = 0.0;
    double sigma_weight = 0.0;
    std::vector<std::size_t> members;  // indices into the eigenvector list
};

std::vector<NpBlock> group_by_eigenvalue(const std::vector<NpEigenvector>& vs) {
    std::vector<std::size_t> order(vs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return vs[a].eigenvalue > vs[b].eigenvalue;
    });
    double scale = 1.0;
    for (const NpEigenvector& v : vs) scale = std::max(scale, std::abs(v.eigenvalue));
    std::vector<NpBlock> blocks;
    for (std::size_t idx : order) {
        if (!blocks.empty() && std::abs(blocks.back().eigenvalue - vs[idx].eigenvalue) < 1e-10 * scale) {
            blocks.back().members.push_back(idx);
            blocks.back().rho_weight += vs[idx].rho_weight;
            blocks.back().sigma_weight += vs[idx].sigma_weight;
        } else {
            NpBlock b;
            b.eigenvalue = vs[idx].eigenvalue;
            b.rho_weight = vs[idx].rho_weight;
            b.sigma_weight = vs[idx].sigma_weight;
            b.members.push_back(idx);
            blocks.push_back(std::move(b));
        }
    }
    return blocks;
}

}  // namespace

HypTestResult d_hyp(const DensityOperator& rho, const DensityOperator& sigma, double eps) {
    if (eps < 0.0 || eps >= 1.0) throw DomainError("d_hyp: eps must lie in [0, 1)");
    if (rho.dim() != sigma.dim()) throw ShapeError("d_hyp: dimension mismatch");
    double target = 1.0 - eps;
    NpContext ctx(rho.matrix, sigma.matrix);

    // locate the threshold: Tr(P_+(rho - t sigma) rho) is non-increasing in t
    double t_hi = 1.0;
    for (int i = 0; i < 80 && ctx.alpha(t_hi) > target; ++i) t_hi *= 2.0;
    double t_lo = 0.0;
    for (int i = 0; i < 90; ++i) {
        double mid = 0.5 * (t_lo + t_hi);
        if (ctx.alpha(mid) > target)
            t_lo = mid;
        else
            t_hi = mid;
    }

    std::vector<NpEigenvector> vs = ctx.eigenvectors(t_hi);
    std::vector<NpBlock> blocks = group_by_eigenvalue(vs);
    std::size_t dim = rho.dim();
    ComplexMatrix test(dim, dim);
    double acc = 0.0, beta = 0.0;
    auto add_block = [&](const NpBlock& b, double frac) {
        for (std::size_t idx : b.members) {
            const NpEigenvector& v = vs[idx];
            const std::vector<std::size_t>& comp = ctx.comps[v.comp];
            for (std::size_t i = 0; i < comp.size(); ++i) {
                cx vi = v.local[i] * frac;
                if (vi == cx(0.0)) continue;
                for (std::size_t j = 0; j < comp.size(); ++j)
                    test.at(comp[i], comp[j]) += vi * std::conj(v.local[j]);
            }
        }
    };
    for (const NpBlock& b : blocks) {
        if (acc >= target - 1e-13) break;
        if (b.rho_weight <= 1e-14) continue;
        if (acc + b.rho_weight <= target + 1e-13) {
            add_block(b, 1.0);
            acc += b.rho_weight;
            beta += b.sigma_weight;
        } else {
            double frac = (target - acc) / b.rho_weight;
            add_block(b, frac);
            beta += frac * b.sigma_weight;
            acc = target;
            break;
        }
    }

    HypTestResult out;
    out.test_op = std::move(test);
    out.pass_prob = acc;
    out.sigma_weight = beta;
    out.value = (beta < 1e-300) ? ExtReal::infinity() : ExtReal::of(-std::log2(beta));
    return out;
}

double d_hyp_sdp(const DensityOperator& rho, const DensityOperator& sigma, double eps,
                 const SdpOptions& opts) {
    if (eps < 0.0 || eps >= 1.0) throw DomainError("d_hyp_sdp: eps must lie in [0, 1)");
    std::size_t d = rho.dim();
    SdpProblem prob;
    std::size_t bl_pi = prob.add_block(d);
    std::size_t bl_sl = prob.add_block(d);  // 1 - Pi
    std::size_t bl_s = prob.add_block(1);   // slack of Tr(Pi rho) >= 1 - eps
    prob.set_objective(bl_pi, sigma.matrix);

    std::vector<ComplexMatrix> basis = hermitian_basis(d);
    for (const ComplexMatrix& h : basis) {
        auto& con = prob.new_constraint((h * ComplexMatrix::identity(d)).trace().real());
        con.blocks[bl_pi] = h;
        con.blocks[bl_sl] = h;
    }
    auto& con = prob.new_constraint(1.0 - eps);
    con.blocks[bl_pi] = rho.matrix;
    ComplexMatrix minus_one(1, 1);
    minus_one.at(0, 0) = -1.0;
    con.blocks[bl_s] = minus_one;

    SdpSolution sol = sdp_min(prob, opts);
    double beta = std::max(sol.primal_obj, 1e-300);
    return -std::log2(beta);
}

namespace {

// Fidelity >= f0 encoded through the block matrix [[rho, L],[L^dag, rho']]
// with Re Tr L >= f0. Returns the index of the 2d-dim G block; the second
// diagonal corner of G is the smoothed-state variable.
struct FidelityGadget {
    std::size_t g_block;
    std::size_t slack_block;
};

FidelityGadget add_fidelity_gadget(SdpProblem& prob, const ComplexMatrix& rho_fixed, double f0) {
    std::size_t d = rho_fixed.rows();
    FidelityGadget gad;
    gad.g_block = prob.add_block(2 * d);
    gad.slack_block = prob.add_block(1);

    // G11 = rho (regularized by the caller)
    std::vector<ComplexMatrix> basis = hermitian_basis(d);
    for (const ComplexMatrix& h : basis) {
        auto& con = prob.new_constraint((h * rho_fixed).trace().real());
        ComplexMatrix big(2 * d, 2 * d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) big.at(i, j) = h.at(i, j);
        con.blocks[gad.g_block] = std::move(big);
    }
    // Re Tr Lambda - s = f0
    auto& con = prob.new_constraint(f0);
    ComplexMatrix tr_l(2 * d, 2 * d);
    for (std::size_t i = 0; i < d; ++i) {
        tr_l.at(i, d + i) = 0.5;
        tr_l.at(d + i, i) = 0.5;
    }
    con.blocks[gad.g_block] = std::move(tr_l);
    ComplexMatrix minus_one(1, 1);
    minus_one.at(0, 0) = -1.0;
    con.blocks[gad.slack_block] = minus_one;
    return gad;
}

ComplexMatrix embed_corner(const ComplexMatrix& h, std::size_t two_d) {
    std::size_t d = h.rows();
    ComplexMatrix big(two_d, two_d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) big.at(d + i, d + j) = h.at(i, j);
    return big;
}

ComplexMatrix regularized(const ComplexMatrix& rho, double eta) {
    std::size_t d = rho.rows();
    ComplexMatrix r = rho;
    r *= cx(1.0 - eta);
    ComplexMatrix id = ComplexMatrix::identity(d);
    id *= cx(eta / double(d));
    r += id;
    return r;
}

}  // namespace

SmoothResult d_max_smooth(const DensityOperator& rho, const DensityOperator& sigma, double eps) {
    if (eps < 0.0 || eps >= 1.0) throw DomainError("d_max_smooth: eps must lie in [0, 1)");
    if (eps < 1e-9) {
        ExtReal v = d_max(rho, sigma);
        if (!v.finite) throw SolverStatus("d_max_smooth: infinite at eps = 0 (support violation)");
        SmoothResult out;
        out.value = v.value;
        out.witness = rho;
        return out;
    }
    std::size_t d = rho.dim();
    double f0 = std::sqrt(std::max(0.0, 1.0 - eps * eps));
    // slight mixing keeps the G block strictly feasible for pure inputs
    ComplexMatrix rho_reg = regularized(rho.matrix, 1e-9);

    SdpProblem prob;
    FidelityGadget gad = add_fidelity_gadget(prob, rho_reg, f0);
    std::size_t bl_s = prob.add_block(d);  // t sigma - rho'
    std::size_t bl_t = prob.add_block(1);
    ComplexMatrix one(1, 1);
    one.at(0, 0) = 1.0;
    prob.set_objective(bl_t, one);

    // Tr rho' = 1
    {
        auto& con = prob.new_constraint(1.0);
        con.blocks[gad.g_block] = embed_corner(ComplexMatrix::identity(d), 2 * d);
    }
    // S + rho' - t sigma = 0
    std::vector<ComplexMatrix> basis = hermitian_basis(d);
    for (const ComplexMatrix& h : basis) {
        auto& con = prob.new_constraint(0.0);
        con.blocks[bl_s] = h;
        con.blocks[gad.g_block] = embed_corner(h, 2 * d);
        ComplexMatrix tcoef(1, 1);
        tcoef.at(0, 0) = -(h * sigma.matrix).trace().real();
        con.blocks[bl_t] = std::move(tcoef);
    }

    SdpSolution sol = sdp_min(prob);
    SmoothResult out;
    double t = std::max(sol.x[bl_t].at(0, 0).real(), 1e-300);
    out.value = std::log2(t);
    out.iterations = sol.iterations;
    out.duality_gap = sol.gap;
    ComplexMatrix rp(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) rp.at(i, j) = sol.x[gad.g_block].at(d + i, d + j);
    double tr = rp.trace().real();
    if (tr > 1e-12) rp *= cx(1.0 / tr);
    out.witness = DensityOperator(std::move(rp), rho.shape);
    return out;
}

double cond_mutual_info(const DensityOperator& rho, const std::vector<std::string>& r_labels,
                        const std::vector<std::string>& b_labels,
                        const std::vector<std::string>& c_labels) {
    std::vector<std::string> rb = r_labels;
    rb.insert(rb.end(), b_labels.begin(), b_labels.end());
    std::vector<std::string> bc = b_labels;
    bc.insert(bc.end(), c_labels.begin(), c_labels.end());
    double s_rb = von_neumann(rho.reduced(rb));
    double s_bc = von_neumann(rho.reduced(bc));
    double s_b = b_labels.empty() ? 0.0 : von_neumann(rho.reduced(b_labels));
    double s_rbc = von_neumann(rho);
    return s_rb + s_bc - s_b - s_rbc;
}

namespace {

// <H, rho^A x Y> = <G, Y> with G = Tr_A[(rho^A x 1) H], Hermitian-symmetrized
ComplexMatrix reduce_against_marginal(const ComplexMatrix& h, const ComplexMatrix& rho_a,
                                      std::size_t da, std::size_t db) {
    ComplexMatrix g(db, db);
    for (std::size_t b1 = 0; b1 < db; ++b1)
        for (std::size_t b2 = 0; b2 < db; ++b2) {
            cx acc = 0.0;
            for (std::size_t a1 = 0; a1 < da; ++a1)
                for (std::size_t a2 = 0; a2 < da; ++a2)
                    acc += rho_a.at(a2, a1) * h.at(a1 * db + b1, a2 * db + b2);
            g.at(b1, b2) = acc;
        }
    ComplexMatrix gd = g.dagger();
    g += gd;
    g *= cx(0.5);
    return g;
}

}  // namespace

SmoothResult i_max(const DensityOperator& rho, const std::vector<std::string>& a_labels,
                   const std::vector<std::string>& b_labels) {
    std::vector<std::string> order = a_labels;
    order.insert(order.end(), b_labels.begin(), b_labels.end());
    ComplexMatrix r = permute_systems(rho.matrix, rho.shape, order);
    std::size_t da = 1, db = 1;
    for (const auto& l : a_labels) da *= rho.shape.dim_of(l);
    for (const auto& l : b_labels) db *= rho.shape.dim_of(l);
    RegisterShape ab_shape;
    ab_shape.regs = {{"a", da}, {"b", db}};
    ComplexMatrix rho_a = partial_trace(r, ab_shape, {"a"});

    SdpProblem prob;
    std::size_t bl_y = prob.add_block(db);
    std::size_t bl_s = prob.add_block(da * db);  // rho^A x Y - rho
    prob.set_objective(bl_y, ComplexMatrix::identity(db));

    std::vector<ComplexMatrix> basis = hermitian_basis(da * db);
    for (const ComplexMatrix& h : basis) {
        auto& con = prob.new_constraint(-(h * r).trace().real());
        con.blocks[bl_s] = h;
        ComplexMatrix g = reduce_against_marginal(h, rho_a, da, db);
        g *= cx(-1.0);
        con.blocks[bl_y] = std::move(g);
    }

    SdpSolution sol = sdp_min(prob);
    SmoothResult out;
    out.value = std::max(0.0, std::log2(std::max(sol.primal_obj, 1e-300)));
    out.iterations = sol.iterations;
    out.duality_gap = sol.gap;
    return out;
}

SmoothResult i_max_smooth(const DensityOperator& rho, const std::vector<std::string>& a_labels,
                          const std::vector<std::string>& b_labels, double eps) {
    if (eps < 1e-9) return i_max(rho, a_labels, b_labels);
    std::vector<std::string> order = a_labels;
    order.insert(order.end(), b_labels.begin(), b_labels.end());
    ComplexMatrix r = permute_systems(rho.matrix, rho.shape, order);
    std::size_t da = 1, db = 1;
    for (const auto& l : a_labels) da *= rho.shape.dim_of(l);
    for (const auto& l : b_labels) db *= rho.shape.dim_of(l);
    std::size_t dab = da * db;
    RegisterShape ab_shape;
    ab_shape.regs = {{"a", da}, {"b", db}};
    ComplexMatrix rho_a = partial_trace(r, ab_shape, {"a"});
    double f0 = std::sqrt(std::max(0.0, 1.0 - eps * eps));

    SdpProblem prob;
    FidelityGadget gad = add_fidelity_gadget(prob, regularized(r, 1e-9), f0);
    std::size_t bl_y = prob.add_block(db);
    std::size_t bl_s = prob.add_block(dab);
    prob.set_objective(bl_y, ComplexMatrix::identity(db));

    {
        auto& con = prob.new_constraint(1.0);
        con.blocks[gad.g_block] = embed_corner(ComplexMatrix::identity(dab), 2 * dab);
    }
    std::vector<ComplexMatrix> basis = hermitian_basis(dab);
    for (const ComplexMatrix& h : basis) {
        auto& con = prob.new_constraint(0.0);
        con.blocks[bl_s] = h;
        con.blocks[gad.g_block] = embed_corner(h, 2 * dab);
        ComplexMatrix g = reduce_against_marginal(h, rho_a, da, db);
        g *= cx(-1.0);
        con.blocks[bl_y] = std::move(g);
    }

    SdpSolution sol = sdp_min(prob);
    SmoothResult out;
    out.value = std::max(0.0, std::log2(std::max(sol.primal_obj, 1e-300)));
    out.iterations = sol.iterations;
    out.duality_gap = sol.gap;
    return out;
}

double inverse_normal_cdf(double p) {
    if (p <= 0.0 || p >= 1.0) throw DomainError("inverse_normal_cdf: p must lie in (0,1)");
    // Acklam rational approximation
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01, -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                3.754408661907416e+00};
    double plow = 0.02425, x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5, rr = q * q;
        x = (((((a[0] * rr + a[1]) * rr + a[2]) * rr + a[3]) * rr + a[4]) * rr + a[5]) * q /
            (((((b[0] * rr + b[1]) * rr + b[2]) * rr + b[3]) * rr + b[4]) * rr + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    }
    // Newton refinement against Phi(x) = erfc(-x/sqrt 2)/2
    for (int i = 0; i < 3; ++i) {
        double cdf = 0.5 * std::erfc(-x / std::sqrt(2.0));
        double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
        if (pdf < 1e-300) break;
        x -= (cdf - p) / pdf;
    }
    return x;
}

double second_order_estimate(const DensityOperator& rho, const DensityOperator& sigma, std::size_t n,
                             double eps, SecondOrderKind kind) {
    if (n < 1) throw DomainError("second_order_estimate: n >= 1 required");
    ExtReal d = rel_entropy(rho, sigma);
    if (!d.finite) throw SupportError("second_order_estimate: support violation");
    double v = rel_entropy_variance(rho, sigma);
    double nn = static_cast<double>(n);
    if (kind == SecondOrderKind::dmax)
        return nn * d.value - std::sqrt(nn * v) * inverse_normal_cdf(eps * eps);
    return nn * d.value + std::sqrt(nn * v) * inverse_normal_cdf(eps);
}

PartialSmoothingReport partial_smoothing_check(const DensityOperator& rho_ab,
                                               const std::vector<std::string>& a_labels,
                                               const DensityOperator& sigma_b, double eps,
                                               double delta) {
    if (2.0 * eps + delta > 1.0)
        throw PreconditionError("partial_smoothing_check: need 2 eps + delta <= 1");
    std::vector<std::string> b_labels;
    for (const auto& reg : rho_ab.shape.regs)
        if (std::find(a_labels.begin(), a_labels.end(), reg.label) == a_labels.end())
            b_labels.push_back(reg.label);
    std::vector<std::string> order = a_labels;
    order.insert(order.end(), b_labels.begin(), b_labels.end());
    ComplexMatrix r = permute_systems(rho_ab.matrix, rho_ab.shape, order);
    std::size_t da = 1;
    for (const auto& l : a_labels) da *= rho_ab.shape.dim_of(l);
    std::size_t db = rho_ab.dim() / da;
    if (sigma_b.dim() != db) throw ShapeError("partial_smoothing_check: sigma_B dimension mismatch");
    RegisterShape ab_shape;
    ab_shape.regs = {{"a", da}, {"b", db}};
    ComplexMatrix rho_a = partial_trace(r, ab_shape, {"a"});
    ComplexMatrix ref = kron(rho_a, sigma_b.matrix);
    DensityOperator rho_ord(r, ab_shape);
    DensityOperator ref_state(ref, ab_shape);

    // RHS: plain smoothing at eps
    SmoothResult rhs_smooth = d_max_smooth(rho_ord, ref_state, eps);
    double rhs = rhs_smooth.value + std::log2((8.0 + delta * delta) / (delta * delta));

    // LHS: smoothing at 2 eps + delta with the A-marginal pinned
    double ball = 2.0 * eps + delta;
    double f0 = std::sqrt(std::max(0.0, 1.0 - ball * ball));
    std::size_t dab = da * db;
    SdpProblem prob;
    FidelityGadget gad = add_fidelity_gadget(prob, regularized(r, 1e-9), f0);
    std::size_t bl_s = prob.add_block(dab);
    std::size_t bl_t = prob.add_block(1);
    ComplexMatrix one(1, 1);
    one.at(0, 0) = 1.0;
    prob.set_objective(bl_t, one);
    {
        auto& con = prob.new_constraint(1.0);
        con.blocks[gad.g_block] = embed_corner(ComplexMatrix::identity(dab), 2 * dab);
    }
    for (const ComplexMatrix& h : hermitian_basis(dab)) {
        auto& con = prob.new_constraint(0.0);
        con.blocks[bl_s] = h;
        con.blocks[gad.g_block] = embed_corner(h, 2 * dab);
        ComplexMatrix tcoef(1, 1);
        tcoef.at(0, 0) = -(h * ref).trace().real();
        con.blocks[bl_t] = std::move(tcoef);
    }
    // marginal pin: Tr_B rho' = rho^A
    for (const ComplexMatrix& h : hermitian_basis(da)) {
        auto& con = prob.new_constraint((h * rho_a).trace().real());
        con.blocks[gad.g_block] = embed_corner(kron(h, ComplexMatrix::identity(db)), 2 * dab);
    }

    SdpSolution sol = sdp_min(prob);
    PartialSmoothingReport rep;
    rep.lhs = std::log2(std::max(sol.x[bl_t].at(0, 0).real(), 1e-300));
    rep.rhs = rhs;
    rep.holds = rep.lhs <= rep.rhs + 1e-5;
    return rep;
}

}  // namespace qsr
