#include "doctest.h"
#include "helpers.hpp"
#include "qsr/classical_oracle.hpp"
#include "qsr/entropies.hpp"

using namespace qsr;

TEST_SUITE_BEGIN("entropies");

namespace {

DensityOperator cdiag(std::initializer_list<double> vals) {
    ComplexMatrix m(vals.size(), vals.size());
    std::size_t i = 0;
    for (double v : vals) m.at(i, i) = v, ++i;
    return DensityOperator(std::move(m), RegisterShape{{"A", vals.size()}});
}

const DensityOperator k34 = cdiag({0.75, 0.25});
const DensityOperator unif2 = cdiag({0.5, 0.5});
const DensityOperator k0 = cdiag({1.0, 0.0});
const DensityOperator k1 = cdiag({0.0, 1.0});

}  // namespace

TEST_CASE("von neumann") {
    CHECK(von_neumann(k0) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(von_neumann(unif2) == doctest::Approx(1.0));
    double binary = -0.75 * std::log2(0.75) - 0.25 * std::log2(0.25);
    CHECK(von_neumann(k34) == doctest::Approx(binary).epsilon(1e-12));
    CHECK(binary == doctest::Approx(0.811278).epsilon(1e-5));
}

TEST_CASE("relative entropy") {
    CHECK(rel_entropy(k34, k34).value == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(rel_entropy(k0, unif2).value == doctest::Approx(1.0));
    CHECK_FALSE(rel_entropy(k1, k0).finite);
}

TEST_CASE("relative entropy variance") {
    CHECK(rel_entropy_variance(k34, k34) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(rel_entropy_variance(k0, unif2) == doctest::Approx(0.0).epsilon(1e-9));
    // direct classical formula: sum p (log p/q)^2 - D^2
    double d = 0.75 * std::log2(1.5) + 0.25 * std::log2(0.5);
    double m2 = 0.75 * std::pow(std::log2(1.5), 2) + 0.25 * 1.0;
    double v = m2 - d * d;
    CHECK(rel_entropy_variance(k34, unif2) == doctest::Approx(v).epsilon(1e-12));
    CHECK(v == doctest::Approx(0.4710198).epsilon(1e-6));
    CHECK_THROWS_AS(rel_entropy_variance(k1, k0), SupportError);
}

TEST_CASE("d_max") {
    CHECK(d_max(k34, k34).value == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(d_max(k0, unif2).value == doctest::Approx(1.0));
    CHECK(d_max(k34, unif2).value == doctest::Approx(std::log2(1.5)).epsilon(1e-9));
    CHECK_FALSE(d_max(k1, k0).finite);
    Rng rng(31);
    for (int t = 0; t < 20; ++t) {
        DensityOperator a = test::qubit_state(rng);
        DensityOperator b = test::qubit_state(rng);
        ExtReal dm = d_max(a, b);
        ExtReal dr = rel_entropy(a, b);
        CHECK(dm.value >= dr.value - 1e-7);
    }
}

TEST_CASE("hypothesis testing entropy") {
    // scalar test optimum against itself
    for (double eps : {0.1, 0.25, 0.5}) {
        HypTestResult h = d_hyp(k34, k34, eps);
        CHECK(h.value.value == doctest::Approx(std::log2(1.0 / (1.0 - eps))).epsilon(1e-8));
    }
    HypTestResult h = d_hyp(k0, unif2, 0.25);
    CHECK(h.value.value == doctest::Approx(std::log2(1.0 / 0.375)).epsilon(1e-8));
    CHECK(h.pass_prob == doctest::Approx(0.75).epsilon(1e-9));
    CHECK(d_hyp(k0, unif2, 0.0).value.value == doctest::Approx(1.0).epsilon(1e-8));

    // witness is a valid test achieving the reported errors
    Rng rng(32);
    for (int t = 0; t < 10; ++t) {
        DensityOperator a = test::random_state(rng, 3, RegisterShape{{"A", 3}});
        DensityOperator b = test::random_state(rng, 3, RegisterShape{{"A", 3}});
        HypTestResult r = d_hyp(a, b, 0.25);
        HermEig e = herm_eig(r.test_op);
        CHECK(e.eigenvalues.front() > -1e-9);
        CHECK(e.eigenvalues.back() < 1.0 + 1e-9);
        CHECK((r.test_op * a.matrix).trace().real() == doctest::Approx(0.75).epsilon(1e-8));
        CHECK((r.test_op * b.matrix).trace().real() ==
              doctest::Approx(std::pow(2.0, -r.value.value)).epsilon(1e-8));
    }
    CHECK_THROWS_AS(d_hyp(k0, unif2, 1.0), DomainError);
}

TEST_CASE("d_hyp matches the classical sorting oracle on diagonal pairs") {
    Rng rng(33);
    for (int t = 0; t < 40; ++t) {
        std::size_t d = 2 + (t % 3);
        std::vector<double> p(d), q(d);
        double sp = 0, sq = 0;
        for (std::size_t i = 0; i < d; ++i) {
            p[i] = 0.05 + rng.uniform();
            q[i] = 0.05 + rng.uniform();
            sp += p[i];
            sq += q[i];
        }
        ComplexMatrix mp(d, d), mq(d, d);
        for (std::size_t i = 0; i < d; ++i) {
            p[i] /= sp;
            q[i] /= sq;
            mp.at(i, i) = p[i];
            mq.at(i, i) = q[i];
        }
        DensityOperator rp(std::move(mp), RegisterShape{{"A", d}});
        DensityOperator rq(std::move(mq), RegisterShape{{"A", d}});
        for (double eps : {0.1, 0.25, 0.5}) {
            double lib = d_hyp(rp, rq, eps).value.value;
            double oracle = test::sorting_oracle_dhyp(p, q, eps);
            CHECK(std::abs(lib - oracle) < 1e-8);
        }
    }
}

TEST_CASE("sdp backend basics") {
    // min Tr X s.t. X >= I, dim 2
    SdpProblem prob;
    std::size_t x = prob.add_block(2), s = prob.add_block(2);
    prob.set_objective(x, ComplexMatrix::identity(2));
    for (const ComplexMatrix& h : hermitian_basis(2)) {
        auto& con = prob.new_constraint((h * ComplexMatrix::identity(2)).trace().real());
        con.blocks[x] = h;
        ComplexMatrix neg = h;
        neg *= cx(-1.0);
        con.blocks[s] = neg;
    }
    SdpSolution sol = sdp_min(prob);
    CHECK(sol.primal_obj == doctest::Approx(2.0).epsilon(1e-5));
    CHECK(sol.gap < 1e-6 * 3.0);

    // max Tr(Pi I/2) over measurement operators = 1 (solved as min of the negative)
    SdpProblem prob2;
    std::size_t pi = prob2.add_block(2), sl = prob2.add_block(2);
    ComplexMatrix half = ComplexMatrix::identity(2);
    half *= cx(-0.5);
    prob2.set_objective(pi, half);
    for (const ComplexMatrix& h : hermitian_basis(2)) {
        auto& con = prob2.new_constraint((h * ComplexMatrix::identity(2)).trace().real());
        con.blocks[pi] = h;
        con.blocks[sl] = h;
    }
    SdpSolution sol2 = sdp_min(prob2);
    CHECK(-sol2.primal_obj == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("d_hyp neyman-pearson agrees with the sdp route") {
    Rng rng(34);
    for (int t = 0; t < 12; ++t) {
        std::size_t d = (t % 2) ? 3 : 2;
        DensityOperator a = test::random_state(rng, d, RegisterShape{{"A", d}});
        DensityOperator b = test::random_state(rng, d, RegisterShape{{"A", d}});
        for (double eps : {0.1, 0.25, 0.5}) {
            double np = d_hyp(a, b, eps).value.value;
            double sdp = d_hyp_sdp(a, b, eps);
            CHECK(std::abs(np - sdp) < 1e-5);
        }
    }
}

TEST_CASE("smooth d_max") {
    Rng rng(35);
    DensityOperator a = test::qubit_state(rng);
    DensityOperator b = test::qubit_state(rng);
    // eps = 0 equals the exact quantity
    SmoothResult s0 = d_max_smooth(a, b, 0.0);
    CHECK(s0.value == doctest::Approx(d_max(a, b).value).epsilon(1e-9));
    // monotone non-increasing in eps
    double prev = s0.value;
    for (double eps : {0.05, 0.1, 0.2, 0.4}) {
        SmoothResult s = d_max_smooth(a, b, eps);
        CHECK(s.value <= prev + 1e-5);
        prev = s.value;
        // witness within the ball, and it reproduces the reported value
        REQUIRE(s.witness.has_value());
        CHECK(purified_distance(*s.witness, a) <= eps + 1e-4);
        ExtReal witness_val = d_max(*s.witness, b);
        REQUIRE(witness_val.finite);
        CHECK(witness_val.value >= s.value - 1e-6);
        CHECK(witness_val.value <= s.value + 1e-4);
    }
    // rho against itself smooths to zero
    CHECK(std::abs(d_max_smooth(a, a, 0.3).value) < 1e-4);

    // diagonal pairs against the water-filling oracle
    for (int t = 0; t < 8; ++t) {
        std::vector<double> p(3), q(3);
        double sp = 0, sq = 0;
        for (int i = 0; i < 3; ++i) {
            p[i] = 0.05 + rng.uniform();
            q[i] = 0.05 + rng.uniform();
            sp += p[i];
            sq += q[i];
        }
        ComplexMatrix mp(3, 3), mq(3, 3);
        for (int i = 0; i < 3; ++i) {
            p[i] /= sp;
            q[i] /= sq;
            mp.at(i, i) = p[i];
            mq.at(i, i) = q[i];
        }
        double lib = d_max_smooth(DensityOperator(mp, RegisterShape{{"A", 3}}),
                                  DensityOperator(mq, RegisterShape{{"A", 3}}), 0.2)
                         .value;
        double oracle = classical_d_max_smooth(p, q, 0.2);
        CHECK(std::abs(lib - oracle) < 1e-4);
    }
}

TEST_CASE("conditional mutual information") {
    Rng rng(36);
    RegisterShape rbc{{"R", 2}, {"B", 2}, {"C", 2}};
    // product across the C cut
    DensityOperator rb = test::random_state(rng, 4, RegisterShape{{"R", 2}, {"B", 2}});
    DensityOperator c = test::qubit_state(rng);
    DensityOperator prod(kron(rb.matrix, c.matrix), rbc);
    CHECK(std::abs(cond_mutual_info(prod, {"R"}, {"B"}, {"C"})) < 1e-8);
    // GHZ
    CHECK(cond_mutual_info(test::ghz_state(2), {"R"}, {"B"}, {"C"}) == doctest::Approx(1.0));
    // strong subadditivity on random states
    for (int t = 0; t < 10; ++t) {
        DensityOperator r = test::random_state(rng, 8, rbc);
        CHECK(cond_mutual_info(r, {"R"}, {"B"}, {"C"}) >= -1e-7);
    }
}

TEST_CASE("max information") {
    Rng rng(37);
    DensityOperator a = test::qubit_state(rng);
    DensityOperator b = test::qubit_state(rng);
    RegisterShape ab{{"A", 2}, {"B", 2}};
    DensityOperator prod(kron(a.matrix, b.matrix), ab);
    CHECK(std::abs(i_max(prod, {"A"}, {"B"}).value) < 1e-4);

    // EPR: I_max = 2, cross-checked against a grid over qubit sigma
    ComplexMatrix epr(4, 4);
    for (std::size_t i : {0, 3})
        for (std::size_t j : {0, 3}) epr.at(i, j) = 0.5;
    DensityOperator phi(std::move(epr), ab);
    double imax = i_max(phi, {"A"}, {"B"}).value;
    CHECK(imax == doctest::Approx(2.0).epsilon(1e-4));
    // brute-force grid: D_max(phi || I/2 x sigma) = log2 <phi|(I/2 x sigma)^-1|phi>
    double best = 1e300;
    for (int iz = -4; iz <= 4; ++iz)
        for (int ix = -4; ix <= 4; ++ix) {
            double z = iz / 5.0, x = ix / 5.0;
            if (z * z + x * x > 0.96) continue;
            ComplexMatrix sig(2, 2);
            sig.at(0, 0) = 0.5 * (1 + z);
            sig.at(1, 1) = 0.5 * (1 - z);
            sig.at(0, 1) = 0.5 * x;
            sig.at(1, 0) = 0.5 * x;
            ComplexMatrix half = ComplexMatrix::identity(2);
            half *= cx(0.5);
            DensityOperator ref(kron(half, sig), ab);
            ExtReal v = d_max(phi, ref);
            if (v.finite) best = std::min(best, v.value);
        }
    CHECK(imax <= best + 1e-4);
    CHECK(best >= 2.0 - 1e-9);

    // smoothing shrinks it
    double s1 = i_max_smooth(phi, {"A"}, {"B"}, 0.1).value;
    double s2 = i_max_smooth(phi, {"A"}, {"B"}, 0.3).value;
    CHECK(s1 <= imax + 1e-4);
    CHECK(s2 <= s1 + 1e-4);
}

TEST_CASE("second order estimate") {
    CHECK(second_order_estimate(k34, k34, 10, 0.3, SecondOrderKind::dmax) ==
          doctest::Approx(0.0).epsilon(1e-9));
    // InvPhi(1/2) = 0: the dmax branch at eps = sqrt(1/2) is exactly n D
    double d = rel_entropy(k34, unif2).value;
    CHECK(second_order_estimate(k34, unif2, 7, std::sqrt(0.5), SecondOrderKind::dmax) ==
          doctest::Approx(7.0 * d).epsilon(1e-9));
    // plug-in oracle at n = 100, eps = 0.1
    double v = rel_entropy_variance(k34, unif2);
    double want = 100.0 * d - std::sqrt(100.0 * v) * inverse_normal_cdf(0.01);
    CHECK(second_order_estimate(k34, unif2, 100, 0.1, SecondOrderKind::dmax) ==
          doctest::Approx(want).epsilon(1e-12));
    double want_h = 100.0 * d + std::sqrt(100.0 * v) * inverse_normal_cdf(0.1);
    CHECK(second_order_estimate(k34, unif2, 100, 0.1, SecondOrderKind::dhyp) ==
          doctest::Approx(want_h).epsilon(1e-12));
}

TEST_CASE("inverse normal cdf") {
    for (double p : {1e-6, 0.01, 0.3, 0.5, 0.77, 0.999}) {
        double x = inverse_normal_cdf(p);
        double back = 0.5 * std::erfc(-x / std::sqrt(2.0));
        CHECK(std::abs(back - p) < 1e-10);
    }
    CHECK(inverse_normal_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("data processing and distance bounds") {
    Rng rng(38);
    RegisterShape ab{{"A", 2}, {"B", 2}};
    for (int t = 0; t < 10; ++t) {
        DensityOperator a = test::random_state(rng, 4, ab);
        DensityOperator b = test::random_state(rng, 4, ab);
        ExtReal d_full = rel_entropy(a, b);
        ExtReal d_red = rel_entropy(a.reduced({"A"}), b.reduced({"A"}));
        CHECK(d_full.value >= d_red.value - 1e-7);
        CHECK(d_max(a, b).value >= d_max(a.reduced({"A"}), b.reduced({"A"})).value - 1e-7);
        CHECK(d_hyp(a, b, 0.25).value.value >=
              d_hyp(a.reduced({"A"}), b.reduced({"A"}), 0.25).value.value - 1e-7);
        // purified distance against max-relative entropy
        double pd = purified_distance(a, b);
        CHECK(pd <= std::sqrt(1.0 - std::pow(2.0, -d_max(a, b).value)) + 1e-9);
    }
}

TEST_CASE("partial smoothing inequality") {
    Rng rng(39);
    RegisterShape ab{{"A", 2}, {"B", 2}};
    DensityOperator rho = test::random_state(rng, 4, ab);
    DensityOperator sig = test::qubit_state(rng);
    PartialSmoothingReport rep = partial_smoothing_check(rho, {"A"}, sig, 0.1, 0.1);
    CHECK(rep.holds);
    // product input: both sides small
    DensityOperator a = test::qubit_state(rng);
    DensityOperator prod(kron(a.matrix, sig.matrix), ab);
    PartialSmoothingReport rep2 = partial_smoothing_check(prod, {"A"}, sig, 0.1, 0.1);
    CHECK(rep2.holds);
    CHECK(rep2.lhs <= 0.2);
    CHECK_THROWS_AS(partial_smoothing_check(rho, {"A"}, sig, 0.4, 0.4), PreconditionError);
}

TEST_SUITE_END();
