#include "doctest.h"
#include "helpers.hpp"
#include "qsr/serialize.hpp"
#include "qsr/states.hpp"

using namespace qsr;

TEST_SUITE_BEGIN("states");

namespace {

DensityOperator ket0() {
    ComplexMatrix m(2, 2);
    m.at(0, 0) = 1.0;
    return DensityOperator(std::move(m), RegisterShape{{"A", 2}});
}

DensityOperator ket_plus() {
    ComplexMatrix m(2, 2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) m.at(i, j) = 0.5;
    return DensityOperator(std::move(m), RegisterShape{{"A", 2}});
}

DensityOperator maxmix() {
    ComplexMatrix m(2, 2);
    m.at(0, 0) = 0.5;
    m.at(1, 1) = 0.5;
    return DensityOperator(std::move(m), RegisterShape{{"A", 2}});
}

}  // namespace

TEST_CASE("purify") {
    PureState p = purify(ket0(), "E");
    CHECK(p.shape.dim_of("E") == 1);
    CHECK(std::abs(p.amplitudes[0]) == doctest::Approx(1.0));

    PureState q = purify(maxmix(), "E");
    DensityOperator marg = q.reduced({"A"});
    CHECK(std::abs(marg.matrix.at(0, 0) - cx(0.5)) < 1e-10);
    CHECK(std::abs(marg.matrix.at(0, 1)) < 1e-10);

    ComplexMatrix d(2, 2);
    d.at(0, 0) = 0.75;
    d.at(1, 1) = 0.25;
    DensityOperator rho(std::move(d), RegisterShape{{"A", 2}});
    PureState r = purify(rho, "E");
    DensityOperator back = r.reduced({"A"});
    back.matrix -= rho.matrix;
    CHECK(back.matrix.max_abs() < 1e-8);
}

TEST_CASE("fidelity and purified distance") {
    Rng rng(21);
    DensityOperator a = test::qubit_state(rng);
    CHECK(fidelity(a, a) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(purified_distance(a, a) < 2e-5);  // sqrt amplifies the 1e-9 fidelity floor

    CHECK(fidelity(ket0(), ket_plus()) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
    CHECK(purified_distance(ket0(), ket_plus()) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));

    // classical fidelity oracle: sum sqrt(p q)
    ComplexMatrix d1(2, 2), d2(2, 2);
    d1.at(0, 0) = 0.75;
    d1.at(1, 1) = 0.25;
    d2.at(0, 0) = 0.5;
    d2.at(1, 1) = 0.5;
    double oracle = std::sqrt(0.75 * 0.5) + std::sqrt(0.25 * 0.5);
    DensityOperator x(std::move(d1), RegisterShape{{"A", 2}});
    DensityOperator y(std::move(d2), RegisterShape{{"A", 2}});
    CHECK(fidelity(x, y) == doctest::Approx(oracle).epsilon(1e-10));

    ComplexMatrix one(2, 2);
    one.at(1, 1) = 1.0;
    DensityOperator k1(std::move(one), RegisterShape{{"A", 2}});
    CHECK(purified_distance(ket0(), k1) == doctest::Approx(1.0));
}

TEST_CASE("trace distance and helstrom") {
    Rng rng(22);
    DensityOperator a = test::qubit_state(rng);
    CHECK(trace_distance(a, a) < 1e-12);

    ComplexMatrix one(2, 2);
    one.at(1, 1) = 1.0;
    DensityOperator k1(std::move(one), RegisterShape{{"A", 2}});
    CHECK(trace_distance(ket0(), k1) == doctest::Approx(2.0));

    CHECK(trace_distance(ket0(), maxmix()) == doctest::Approx(1.0));
    HelstromResult h = helstrom_test(ket0(), maxmix());
    CHECK(h.gap == doctest::Approx(0.5));
    ComplexMatrix want(2, 2);
    want.at(0, 0) = 1.0;
    h.projector -= want;
    CHECK(h.projector.max_abs() < 1e-10);

    for (int t = 0; t < 30; ++t) {
        DensityOperator r1 = test::random_state(rng, 3, RegisterShape{{"A", 3}});
        DensityOperator r2 = test::random_state(rng, 3, RegisterShape{{"A", 3}});
        HelstromResult hh = helstrom_test(r1, r2);
        CHECK(std::abs(2.0 * hh.gap - trace_distance(r1, r2)) < 1e-8);
    }
}

TEST_CASE("gentle measurement") {
    CHECK(gentle_measurement_bound_check(maxmix(), ComplexMatrix::identity(2), 0.3));

    // tightness: rho = |+><+|, Pi = |0><0|, eps = 1/2 achieves equality
    ComplexMatrix pi(2, 2);
    pi.at(0, 0) = 1.0;
    DensityOperator plus = ket_plus();
    double p = (pi * plus.matrix).trace().real();
    CHECK(p == doctest::Approx(0.5));
    ComplexMatrix post = pi * plus.matrix * pi;
    post *= cx(1.0 / p);
    double lhs = trace_distance(DensityOperator(post, plus.shape), plus);
    CHECK(lhs == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
    CHECK(gentle_measurement_bound_check(plus, pi, 0.5));

    // random measurement operators satisfying the precondition
    Rng rng(23);
    for (int t = 0; t < 50; ++t) {
        DensityOperator rho = test::random_state(rng, 3, RegisterShape{{"A", 3}});
        ComplexMatrix g = random_density(rng, 3);
        HermEig e = herm_eig(g);
        ComplexMatrix m = mat_fn(g, [&](double x) { return x / (e.eigenvalues.back() + 1e-12); });
        double pass = (m * rho.matrix).trace().real();
        double eps = 1.0 - pass + 1e-12;
        if (eps >= 1.0) continue;
        CHECK(gentle_measurement_bound_check(rho, m, eps));
    }

    ComplexMatrix too_big = ComplexMatrix::identity(2);
    too_big *= cx(1.5);
    CHECK_THROWS_AS(gentle_measurement_bound_check(maxmix(), too_big, 0.5), PreconditionError);
}

TEST_CASE("fuchs van de graaf") {
    CHECK(fuchs_vdg_check(maxmix(), maxmix()));
    ComplexMatrix one(2, 2);
    one.at(1, 1) = 1.0;
    CHECK(fuchs_vdg_check(ket0(), DensityOperator(std::move(one), RegisterShape{{"A", 2}})));
    Rng rng(24);
    for (int t = 0; t < 60; ++t) {
        DensityOperator r1 = test::random_state(rng, 3, RegisterShape{{"A", 3}});
        DensityOperator r2 = test::random_state(rng, 3, RegisterShape{{"A", 3}});
        CHECK(fuchs_vdg_check(r1, r2));
    }
}

TEST_CASE("uhlmann unitary") {
    Rng rng(25);
    // purifications of the same state align exactly
    DensityOperator rho = test::random_state(rng, 3, RegisterShape{{"A", 3}});
    PureState p1 = purify(rho, "E");
    PureState p2 = p1;
    ComplexMatrix haar;  // random unitary from the svd of a Gaussian matrix
    {
        ComplexMatrix g(3, 3);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) g.at(i, j) = rng.cnormal();
        haar = svd(g).u;
    }
    apply_dense(p2, {"E"}, haar);
    ComplexMatrix v = uhlmann_unitary(p1, p2, {"E"});
    PureState aligned = p2;
    apply_dense(aligned, {"E"}, v);
    CHECK(purified_distance(p1, aligned) < 1e-7);

    // |00> vs |01>: the alignment is a basis flip on the environment
    RegisterShape ab{{"A", 2}, {"E", 2}};
    PureState k00 = PureState::basis(ab, 0);
    PureState k01 = PureState::basis(ab, 1);
    ComplexMatrix w = uhlmann_unitary(k00, k01, {"E"});
    PureState moved = k01;
    apply_dense(moved, {"E"}, w);
    CHECK(purified_distance(k00, moved) < 1e-10);

    // achieved distance equals the distance of the reduced states
    for (int t = 0; t < 20; ++t) {
        DensityOperator r1 = test::random_state(rng, 3, RegisterShape{{"A", 3}});
        DensityOperator r2 = test::random_state(rng, 3, RegisterShape{{"A", 3}});
        PureState q1 = purify(r1, "E");
        PureState q2 = purify(r2, "E");
        ComplexMatrix u = uhlmann_unitary(q1, q2, {"E"});
        PureState moved2 = q2;
        apply_dense(moved2, {"E"}, u);
        CHECK(std::abs(purified_distance(q1, moved2) - purified_distance(r1, r2)) < 1e-7);
    }
}

TEST_CASE("metric properties") {
    Rng rng(26);
    for (int t = 0; t < 25; ++t) {
        DensityOperator a = test::random_state(rng, 3, RegisterShape{{"A", 3}});
        DensityOperator b = test::random_state(rng, 3, RegisterShape{{"A", 3}});
        DensityOperator c = test::random_state(rng, 3, RegisterShape{{"A", 3}});
        CHECK(purified_distance(a, c) <=
              purified_distance(a, b) + purified_distance(b, c) + 1e-9);
    }
    // monotonicity under partial trace
    RegisterShape ab{{"A", 2}, {"B", 2}};
    for (int t = 0; t < 25; ++t) {
        DensityOperator a = test::random_state(rng, 4, ab);
        DensityOperator b = test::random_state(rng, 4, ab);
        CHECK(purified_distance(a.reduced({"A"}), b.reduced({"A"})) <=
              purified_distance(a, b) + 1e-9);
    }
    // fidelity two ways: spectrum of sqrt(rho) sigma sqrt(rho) vs purification overlap
    for (int t = 0; t < 15; ++t) {
        DensityOperator a = test::random_state(rng, 3, RegisterShape{{"A", 3}});
        DensityOperator b = test::random_state(rng, 3, RegisterShape{{"A", 3}});
        double f1 = fidelity(a, b);
        PureState pa = purify(a, "E");
        PureState pb = purify(b, "E");
        ComplexMatrix v = uhlmann_unitary(pa, pb, {"E"});
        PureState moved = pb;
        apply_dense(moved, {"E"}, v);
        double f2 = std::abs(overlap(pa, moved));
        CHECK(std::abs(f1 - f2) < 1e-7);
    }
}

TEST_CASE("serialization round trip") {
    Rng rng(27);
    DensityOperator rho = test::random_state(rng, 3, RegisterShape{{"A", 3}});
    std::string j1 = state_to_json(rho);
    DensityOperator back = density_from_json(j1);
    std::string j2 = state_to_json(back);
    CHECK(j1 == j2);  // bit-exact for the stored decimal encoding
    back.matrix -= rho.matrix;
    CHECK(back.matrix.max_abs() == 0.0);

    PureState psi = random_pure(rng, RegisterShape{{"R", 2}, {"C", 3}});
    std::string p1 = state_to_json(psi);
    PureState pback = pure_from_json(p1);
    CHECK(state_to_json(pback) == p1);

    MarkovDecomposition dec = test::ghz_markov(2);
    std::string d1 = decomposition_to_json(dec);
    MarkovDecomposition dback = decomposition_from_json(d1);
    CHECK(decomposition_to_json(dback) == d1);
}

TEST_SUITE_END();
