#include "doctest.h"
#include "helpers.hpp"
#include "qsr/markov.hpp"

using namespace qsr;

TEST_SUITE_BEGIN("markov");

namespace {

MarkovDecomposition random_two_block(Rng& rng, std::size_t dr, std::size_t dc, std::size_t dbr,
                                     std::size_t dbc) {
    MarkovDecomposition dec;
    dec.dim_r = dr;
    dec.dim_c = dc;
    double p = 0.2 + 0.6 * rng.uniform();
    for (std::size_t j = 0; j < 2; ++j) {
        MarkovBlock blk;
        blk.p = j == 0 ? p : 1.0 - p;
        blk.dim_br = dbr;
        blk.dim_bc = dbc;
        blk.rho_r_br = DensityOperator(random_density(rng, dr * dbr),
                                       RegisterShape{{"R", dr}, {"BR", dbr}});
        blk.rho_bc_c = DensityOperator(random_density(rng, dbc * dc),
                                       RegisterShape{{"BC", dbc}, {"C", dc}});
        dec.blocks.push_back(std::move(blk));
    }
    return dec;
}

}  // namespace

TEST_CASE("assemble") {
    Rng rng(41);
    // single product block has zero conditional mutual information
    DensityOperator rb = test::random_state(rng, 4, RegisterShape{{"R", 2}, {"BR", 2}});
    DensityOperator c = test::random_state(rng, 2, RegisterShape{{"BC", 1}, {"C", 2}});
    MarkovDecomposition dec;
    dec.dim_r = 2;
    dec.dim_c = 2;
    dec.blocks.push_back({1.0, rb, c, 2, 1});
    DensityOperator sigma = assemble(dec);
    CHECK(std::abs(cond_mutual_info(sigma, {"R"}, {"B"}, {"C"})) < 1e-8);

    // the classically correlated extension assembles to (1/2) sum |jjj><jjj|
    DensityOperator cc = assemble(test::ghz_markov(2));
    for (std::size_t j = 0; j < 2; ++j) {
        std::size_t idx = (j * 2 + j) * 2 + j;
        CHECK(std::abs(cc.matrix.at(idx, idx) - cx(0.5)) < 1e-12);
    }
    CHECK(std::abs(cc.matrix.trace() - cx(1.0)) < 1e-12);
    CHECK(cc.matrix.off_diagonal_max() < 1e-15);

    // random two-block decompositions are Markov states
    for (int t = 0; t < 5; ++t) {
        MarkovDecomposition d2 = random_two_block(rng, 2, 2, 1, 1);
        DensityOperator s2 = assemble(d2);
        CHECK(std::abs(cond_mutual_info(s2, {"R"}, {"B"}, {"C"})) < 1e-8);
    }
}

TEST_CASE("assembled blocks read back to the decomposition") {
    Rng rng(48);
    MarkovDecomposition dec = random_two_block(rng, 2, 2, 2, 1);
    DensityOperator sigma = assemble(dec);
    // extract each block from the assembled matrix and compare
    std::size_t db = dec.dim_b(), dc = dec.dim_c, dr = dec.dim_r;
    for (std::size_t j = 0; j < dec.blocks.size(); ++j) {
        const MarkovBlock& blk = dec.blocks[j];
        std::size_t off = dec.block_offset(j);
        // weight: trace of the block
        ComplexMatrix pi = dec.block_projector(j);
        ComplexMatrix pi_full = kron(kron(ComplexMatrix::identity(dr), pi),
                                     ComplexMatrix::identity(dc));
        double p = (pi_full * sigma.matrix).trace().real();
        CHECK(p == doctest::Approx(blk.p).epsilon(1e-10));
        // (R, B_j^R) factor: trace out (B_j^C, C) within the block
        ComplexMatrix r_br(dr * blk.dim_br, dr * blk.dim_br);
        for (std::size_t r1 = 0; r1 < dr; ++r1)
            for (std::size_t r2 = 0; r2 < dr; ++r2)
                for (std::size_t b1 = 0; b1 < blk.dim_br; ++b1)
                    for (std::size_t b2 = 0; b2 < blk.dim_br; ++b2) {
                        cx acc = 0.0;
                        for (std::size_t e = 0; e < blk.dim_bc; ++e)
                            for (std::size_t c = 0; c < dc; ++c)
                                acc += sigma.matrix.at(
                                    (r1 * db + off + b1 * blk.dim_bc + e) * dc + c,
                                    (r2 * db + off + b2 * blk.dim_bc + e) * dc + c);
                        r_br.at(r1 * blk.dim_br + b1, r2 * blk.dim_br + b2) = acc / p;
                    }
        r_br -= blk.rho_r_br.matrix;
        CHECK(r_br.max_abs() < 1e-10);
    }
}

TEST_CASE("is_markov") {
    Rng rng(42);
    CHECK(is_markov(assemble(test::ghz_markov(2)), {"R"}, {"B"}, {"C"}));
    CHECK_FALSE(is_markov(test::ghz_state(2), {"R"}, {"B"}, {"C"}));
    DensityOperator rb = test::random_state(rng, 4, RegisterShape{{"R", 2}, {"B", 2}});
    DensityOperator c = test::qubit_state(rng);
    DensityOperator prod(kron(rb.matrix, c.matrix), RegisterShape{{"R", 2}, {"B", 2}, {"C", 2}});
    CHECK(is_markov(prod, {"R"}, {"B"}, {"C"}));
}

TEST_CASE("identity between conditional information and relative entropies") {
    // a Markov state against its own decomposition: both sides vanish
    MarkovDecomposition dec = test::ghz_markov(2);
    DensityOperator sigma = assemble(dec);
    MarkovIdentityReport rep = markov_identity_check(sigma, dec);
    CHECK(std::abs(rep.cmi) < 1e-9);
    CHECK(std::abs(rep.difference.value) < 1e-9);

    // GHZ against the classically correlated extension: both sides equal one
    rep = markov_identity_check(test::ghz_state(2), dec);
    CHECK(rep.cmi == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(rep.difference.value == doctest::Approx(1.0).epsilon(1e-8));

    // random states against the product extension
    Rng rng(43);
    for (int t = 0; t < 20; ++t) {
        DensityOperator psi = test::random_state(rng, 8, RegisterShape{{"R", 2}, {"B", 2}, {"C", 2}});
        MarkovIdentityReport r = markov_identity_check(psi, product_extension(psi));
        REQUIRE(r.difference.finite);
        CHECK(std::abs(r.cmi - r.difference.value) < 1e-7);
    }

    // marginal mismatch is rejected
    Rng rng2(44);
    DensityOperator other = test::random_state(rng2, 8, RegisterShape{{"R", 2}, {"B", 2}, {"C", 2}});
    CHECK_THROWS_AS(markov_identity_check(other, dec), PreconditionError);
}

TEST_CASE("product extension") {
    Rng rng(45);
    DensityOperator psi = test::random_state(rng, 8, RegisterShape{{"R", 2}, {"B", 2}, {"C", 2}});
    MarkovDecomposition dec = product_extension(psi);
    DensityOperator sigma = assemble(dec);
    ComplexMatrix want = kron(partial_trace(psi.matrix, psi.shape, {"R", "B"}),
                              partial_trace(psi.matrix, psi.shape, {"C"}));
    want -= sigma.matrix;
    CHECK(want.max_abs() < 1e-12);
}

TEST_CASE("membership in the Markov-extension set") {
    Rng rng(46);
    DensityOperator psi = test::random_state(rng, 8, RegisterShape{{"R", 2}, {"B", 2}, {"C", 2}});
    // the product extension belongs for every radius
    MeMembershipReport rep = me_membership(psi, product_extension(psi), 0.0);
    CHECK(rep.member);

    // the classically correlated extension of the GHZ state agrees exactly
    rep = me_membership(test::ghz_state(2), test::ghz_markov(2), 0.0);
    CHECK(rep.member);

    // perturbing one block state past the radius breaks membership
    MarkovDecomposition bad = test::ghz_markov(2);
    ComplexMatrix mixed(2, 2);
    mixed.at(0, 0) = 0.96;
    mixed.at(1, 1) = 0.04;  // purified distance 0.2 from |0><0|
    bad.blocks[0].rho_bc_c = DensityOperator(mixed, RegisterShape{{"BC", 1}, {"C", 2}});
    MeMembershipReport rep2 = me_membership(test::ghz_state(2), bad, 0.1);
    CHECK_FALSE(rep2.member);
    CHECK(rep2.block_distances[0] == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("block-structure isometries") {
    // single product block: the isometries are dimension-padding embeddings
    Rng rng(47);
    {
        MarkovDecomposition dec;
        dec.dim_r = 2;
        dec.dim_c = 2;
        MarkovBlock blk;
        blk.p = 1.0;
        blk.dim_br = 2;
        blk.dim_bc = 1;
        blk.rho_r_br = test::random_state(rng, 4, RegisterShape{{"R", 2}, {"BR", 2}});
        blk.rho_bc_c = test::random_state(rng, 2, RegisterShape{{"BC", 1}, {"C", 2}});
        dec.blocks.push_back(blk);
        RedistributionInstance inst = test::instance_from_sigma(dec);
        HjpwIsometries hj = hjpw_isometries(dec, inst.psi);
        CHECK(hj.num_blocks == 1);
        PureState mapped = inst.psi;
        apply_isometry(mapped, "A", {{"AR", hj.dim_ar}, {"Jp", 1}, {"AC", hj.dim_ac}}, hj.v_a);
        apply_isometry(mapped, "B", {{"BR", hj.dim_br_max}, {"J", 1}, {"BC", hj.dim_bc_max}},
                       hj.v_b);
        CHECK(std::abs(std::abs(overlap(
                  hj.canonical,
                  PureState(permute_systems(mapped.amplitudes, mapped.shape,
                                            hj.canonical.shape.labels()),
                            hj.canonical.shape))) -
                       1.0) < 1e-7);
    }

    // the GHZ extension reaches the canonical block form exactly
    {
        MarkovDecomposition dec = test::ghz_markov(2);
        RedistributionInstance inst = test::instance_from_sigma(dec);
        HjpwIsometries hj = hjpw_isometries(dec, inst.psi);
        PureState mapped = inst.psi;
        apply_isometry(mapped, "A", {{"AR", hj.dim_ar}, {"Jp", 2}, {"AC", hj.dim_ac}}, hj.v_a);
        apply_isometry(mapped, "B", {{"BR", hj.dim_br_max}, {"J", 2}, {"BC", hj.dim_bc_max}},
                       hj.v_b);
        std::vector<cx> mp =
            permute_systems(mapped.amplitudes, mapped.shape, hj.canonical.shape.labels());
        cx ov = 0.0;
        for (std::size_t i = 0; i < mp.size(); ++i)
            ov += std::conj(hj.canonical.amplitudes[i]) * mp[i];
        CHECK(std::abs(ov) == doctest::Approx(1.0).epsilon(1e-9));
    }

    // random two-block: conditioned on J the two sides are in tensor product
    for (int t = 0; t < 3; ++t) {
        MarkovDecomposition dec = random_two_block(rng, 2, 2, 1, 2);
        RedistributionInstance inst = test::instance_from_sigma(dec);
        HjpwIsometries hj = hjpw_isometries(dec, inst.psi);
        PureState mapped = inst.psi;
        apply_isometry(mapped, "A", {{"AR", hj.dim_ar}, {"Jp", hj.num_blocks}, {"AC", hj.dim_ac}},
                       hj.v_a);
        apply_isometry(mapped, "B",
                       {{"BR", hj.dim_br_max}, {"J", hj.num_blocks}, {"BC", hj.dim_bc_max}},
                       hj.v_b);
        // trace Jp, then I(R AR BR : AC BC C | J) must vanish
        DensityOperator cond = ordered_marginal(mapped, {"R", "AR", "BR", "J", "AC", "BC", "C"});
        double cmi = cond_mutual_info(cond, {"R", "AR", "BR"}, {"J"}, {"AC", "BC", "C"});
        CHECK(std::abs(cmi) < 1e-7);
        // the mapped state matches the canonical block form
        std::vector<cx> mp =
            permute_systems(mapped.amplitudes, mapped.shape, hj.canonical.shape.labels());
        cx ov = 0.0;
        for (std::size_t i = 0; i < mp.size(); ++i)
            ov += std::conj(hj.canonical.amplitudes[i]) * mp[i];
        CHECK(std::abs(ov) == doctest::Approx(1.0).epsilon(1e-7));
    }
}

TEST_SUITE_END();
