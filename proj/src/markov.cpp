#include "qsr/markov.hpp"

#include <algorithm>
#include <cmath>

namespace qsr {

std::size_t MarkovDecomposition::dim_b() const {
    std::size_t d = 0;
    for (const MarkovBlock& b : blocks) d += b.dim_br * b.dim_bc;
    return d;
}

std::size_t MarkovDecomposition::block_offset(std::size_t j) const {
    std::size_t off = 0;
    for (std::size_t i = 0; i < j; ++i) off += blocks[i].dim_br * blocks[i].dim_bc;
    return off;
}

void MarkovDecomposition::validate() const {
    if (blocks.empty()) throw PreconditionError("markov decomposition has no blocks");
    double psum = 0.0;
    for (const MarkovBlock& b : blocks) {
        psum += b.p;
        if (b.p < -1e-12) throw PreconditionError("negative block probability");
        if (b.rho_r_br.dim() != dim_r * b.dim_br)
            throw ShapeError("block R x B_j^R state dimension mismatch");
        if (b.rho_bc_c.dim() != b.dim_bc * dim_c)
            throw ShapeError("block B_j^C x C state dimension mismatch");
    }
    if (std::abs(psum - 1.0) > 1e-10)
        throw PreconditionError("block probabilities sum to " + std::to_string(psum));
}

ComplexMatrix MarkovDecomposition::block_projector(std::size_t j) const {
    std::size_t db = dim_b();
    ComplexMatrix pi(db, db);
    std::size_t off = block_offset(j);
    std::size_t span = blocks[j].dim_br * blocks[j].dim_bc;
    for (std::size_t i = 0; i < span; ++i) pi.at(off + i, off + i) = 1.0;
    return pi;
}

DensityOperator assemble(const MarkovDecomposition& decomp) {
    decomp.validate();
    std::size_t dr = decomp.dim_r, dc = decomp.dim_c, db = decomp.dim_b();
    std::size_t dim = dr * db * dc;
    ComplexMatrix out(dim, dim);
    auto idx = [&](std::size_t r, std::size_t b, std::size_t c) { return (r * db + b) * dc + c; };
    for (std::size_t j = 0; j < decomp.blocks.size(); ++j) {
        const MarkovBlock& blk = decomp.blocks[j];
        if (blk.p < 1e-12) continue;  // zero-probability blocks dropped
        std::size_t off = decomp.block_offset(j);
        std::size_t dbr = blk.dim_br, dbc = blk.dim_bc;
        for (std::size_t r = 0; r < dr; ++r)
            for (std::size_t rp = 0; rp < dr; ++rp)
                for (std::size_t br = 0; br < dbr; ++br)
                    for (std::size_t brp = 0; brp < dbr; ++brp) {
                        cx left = blk.rho_r_br.matrix.at(r * dbr + br, rp * dbr + brp);
                        if (left == cx(0.0)) continue;
                        left *= blk.p;
                        for (std::size_t bc = 0; bc < dbc; ++bc)
                            for (std::size_t bcp = 0; bcp < dbc; ++bcp)
                                for (std::size_t c = 0; c < dc; ++c)
                                    for (std::size_t cp = 0; cp < dc; ++cp) {
                                        cx right = blk.rho_bc_c.matrix.at(bc * dc + c, bcp * dc + cp);
                                        if (right == cx(0.0)) continue;
                                        out.at(idx(r, off + br * dbc + bc, c),
                                               idx(rp, off + brp * dbc + bcp, cp)) += left * right;
                                    }
                    }
    }
    RegisterShape shape{{"R", dr}, {"B", db}, {"C", dc}};
    return DensityOperator(std::move(out), std::move(shape));
}

bool is_markov(const DensityOperator& sigma, const std::vector<std::string>& r_labels,
               const std::vector<std::string>& b_labels, const std::vector<std::string>& c_labels,
               double tol) {
    return cond_mutual_info(sigma, r_labels, b_labels, c_labels) <= tol;
}

MarkovIdentityReport markov_identity_check(const DensityOperator& psi,
                                           const MarkovDecomposition& decomp) {
    DensityOperator sigma = assemble(decomp);
    if (psi.dim() != sigma.dim()) throw ShapeError("markov_identity_check: dimension mismatch");
    DensityOperator psi_rb = DensityOperator(partial_trace(psi.matrix, sigma.shape, {"R", "B"}),
                                             sigma.shape.restricted({"R", "B"}));
    DensityOperator sigma_rb = sigma.reduced({"R", "B"});
    if (trace_distance(psi_rb, sigma_rb) > 1e-8)
        throw PreconditionError("markov_identity_check: sigma^RB differs from psi^RB");

    MarkovIdentityReport rep;
    DensityOperator psi_shaped(psi.matrix, sigma.shape);
    rep.cmi = cond_mutual_info(psi_shaped, {"R"}, {"B"}, {"C"});
    ExtReal full = rel_entropy(psi_shaped, sigma);
    ExtReal marg = rel_entropy(psi_shaped.reduced({"B", "C"}), sigma.reduced({"B", "C"}));
    if (!full.finite || !marg.finite) {
        rep.support_violation = true;
        rep.difference = ExtReal::infinity();
    } else {
        rep.difference = ExtReal::of(full.value - marg.value);
    }
    return rep;
}

MarkovDecomposition product_extension(const DensityOperator& psi) {
    const RegisterShape& shape = psi.shape;
    std::size_t dr = shape.dim_of("R"), db = shape.dim_of("B"), dc = shape.dim_of("C");
    MarkovDecomposition decomp;
    decomp.dim_r = dr;
    decomp.dim_c = dc;
    MarkovBlock blk;
    blk.p = 1.0;
    blk.dim_br = db;
    blk.dim_bc = 1;
    blk.rho_r_br = DensityOperator(partial_trace(psi.matrix, shape, {"R", "B"}),
                                   RegisterShape{{"R", dr}, {"BR", db}});
    blk.rho_bc_c = DensityOperator(partial_trace(psi.matrix, shape, {"C"}),
                                   RegisterShape{{"BC", 1}, {"C", dc}});
    decomp.blocks.push_back(std::move(blk));
    return decomp;
}

MeMembershipReport me_membership(const DensityOperator& psi, const MarkovDecomposition& decomp,
                                 double eps) {
    decomp.validate();
    std::size_t db = decomp.dim_b(), dc = decomp.dim_c;
    RegisterShape shape{{"R", decomp.dim_r}, {"B", db}, {"C", dc}};
    if (psi.dim() != shape.total_dim()) throw ShapeError("me_membership: dimension mismatch");
    ComplexMatrix psi_bc = partial_trace(psi.matrix, shape, {"B", "C"});

    MeMembershipReport rep;
    for (std::size_t j = 0; j < decomp.blocks.size(); ++j) {
        const MarkovBlock& blk = decomp.blocks[j];
        std::size_t off = decomp.block_offset(j);
        std::size_t dbr = blk.dim_br, dbc = blk.dim_bc;
        // Tr_{B_j^R}[(Pi_j x 1) psi^BC (Pi_j x 1)] on (B_j^C, C)
        ComplexMatrix target(dbc * dc, dbc * dc);
        for (std::size_t bc = 0; bc < dbc; ++bc)
            for (std::size_t bcp = 0; bcp < dbc; ++bcp)
                for (std::size_t c = 0; c < dc; ++c)
                    for (std::size_t cp = 0; cp < dc; ++cp) {
                        cx acc = 0.0;
                        for (std::size_t br = 0; br < dbr; ++br)
                            acc += psi_bc.at((off + br * dbc + bc) * dc + c,
                                             (off + br * dbc + bcp) * dc + cp);
                        target.at(bc * dc + c, bcp * dc + cp) = acc;
                    }
        double tr = target.trace().real();
        if (tr < 1e-12) {
            ++rep.skipped_blocks;
            rep.block_distances.push_back(0.0);
            continue;
        }
        target *= cx(1.0 / tr);
        DensityOperator tgt(std::move(target), blk.rho_bc_c.shape);
        double dist = purified_distance(blk.rho_bc_c, tgt);
        rep.block_distances.push_back(dist);
        if (dist > eps + 1e-9) rep.member = false;
    }
    return rep;
}

HjpwIsometries hjpw_isometries(const MarkovDecomposition& decomp, const PureState& psi) {
    decomp.validate();
    DensityOperator sigma = assemble(decomp);
    std::size_t dr = decomp.dim_r, dc = decomp.dim_c, db = decomp.dim_b();
    std::size_t da = psi.shape.dim_of("A");
    {
        DensityOperator psi_rbc = psi.reduced({"R", "B", "C"});
        if (trace_distance(psi_rbc, sigma) > 1e-7)
            throw PreconditionError("hjpw_isometries: psi is not a purification of the assembled state");
    }

    HjpwIsometries out;
    out.num_blocks = decomp.blocks.size();
    out.dim_br_max = 1;
    out.dim_bc_max = 1;
    for (const MarkovBlock& b : decomp.blocks) {
        out.dim_br_max = std::max(out.dim_br_max, b.dim_br);
        out.dim_bc_max = std::max(out.dim_bc_max, b.dim_bc);
    }
    std::size_t k = out.num_blocks;

    // V_B: block basis vector (j, br, bc) -> |br>^BR |j>^J |bc>^BC
    std::size_t dtb = out.dim_br_max * k * out.dim_bc_max;
    out.v_b = ComplexMatrix(dtb, db);
    for (std::size_t j = 0; j < k; ++j) {
        const MarkovBlock& blk = decomp.blocks[j];
        std::size_t off = decomp.block_offset(j);
        for (std::size_t br = 0; br < blk.dim_br; ++br)
            for (std::size_t bc = 0; bc < blk.dim_bc; ++bc) {
                std::size_t tgt = (br * k + j) * out.dim_bc_max + bc;
                out.v_b.at(tgt, off + br * blk.dim_bc + bc) = 1.0;
            }
    }

    // per-block purifications, with environments padded to a common size
    std::size_t ar = 1, ac = 1;
    std::vector<PureState> phi, chi;
    for (const MarkovBlock& blk : decomp.blocks) {
        PureState p = purify(blk.rho_r_br, "AR");
        ar = std::max(ar, p.shape.dim_of("AR"));
        phi.push_back(std::move(p));
        PureState q = purify(blk.rho_bc_c, "AC");
        ac = std::max(ac, q.shape.dim_of("AC"));
        chi.push_back(std::move(q));
    }
    // room for an isometry from the supplied A register
    while (ar * k * ac < da) ++ac;
    out.dim_ar = ar;
    out.dim_ac = ac;

    // canonical state on (R, AR, Jp, AC, BR, J, BC, C)
    RegisterShape cshape{{"R", dr},          {"AR", ar}, {"Jp", k},
                         {"AC", ac},         {"BR", out.dim_br_max}, {"J", k},
                         {"BC", out.dim_bc_max}, {"C", dc}};
    std::vector<cx> camp(cshape.total_dim(), cx(0.0));
    for (std::size_t j = 0; j < k; ++j) {
        const MarkovBlock& blk = decomp.blocks[j];
        if (blk.p < 1e-12) continue;
        double w = std::sqrt(blk.p);
        const PureState& pj = phi[j];  // on (R, BR_j, AR_j)
        const PureState& qj = chi[j];  // on (BC_j, C, AC_j)
        std::size_t ar_j = pj.shape.dim_of("AR");
        std::size_t ac_j = qj.shape.dim_of("AC");
        for (std::size_t r = 0; r < dr; ++r)
            for (std::size_t br = 0; br < blk.dim_br; ++br)
                for (std::size_t g = 0; g < ar_j; ++g) {
                    cx left = pj.amplitudes[(r * blk.dim_br + br) * ar_j + g];
                    if (left == cx(0.0)) continue;
                    left *= w;
                    for (std::size_t bc = 0; bc < blk.dim_bc; ++bc)
                        for (std::size_t c = 0; c < dc; ++c)
                            for (std::size_t h = 0; h < ac_j; ++h) {
                                cx right = qj.amplitudes[(bc * dc + c) * ac_j + h];
                                if (right == cx(0.0)) continue;
                                std::size_t idx = cshape.pack({r, g, j, h, br, j, bc, c});
                                camp[idx] += left * right;
                            }
                }
    }
    PureState canonical(std::move(camp), cshape);
    canonical.normalize();

    // psi after V_B, then the Uhlmann isometry from A into (AR, Jp, AC)
    PureState after_b = psi;
    apply_isometry(after_b, "B",
                   {{"BR", out.dim_br_max}, {"J", k}, {"BC", out.dim_bc_max}}, out.v_b);
    out.v_a = uhlmann_isometry(canonical, {"AR", "Jp", "AC"}, after_b, {"A"});
    out.canonical = std::move(canonical);
    return out;
}

}  // namespace qsr
