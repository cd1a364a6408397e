#pragma once

#include <cmath>
#include <vector>

#include "qsr/harness.hpp"
#include "qsr/markov.hpp"

namespace qsr::test {

inline DensityOperator random_state(Rng& rng, std::size_t dim, RegisterShape shape) {
    return DensityOperator(random_density(rng, dim), std::move(shape));
}

inline DensityOperator qubit_state(Rng& rng) {
    return random_state(rng, 2, RegisterShape{{"A", 2}});
}

// classically correlated extension of the GHZ marginal: (1/d) sum |jjj><jjj|
inline MarkovDecomposition ghz_markov(std::size_t d) {
    MarkovDecomposition dec;
    dec.dim_r = d;
    dec.dim_c = d;
    for (std::size_t j = 0; j < d; ++j) {
        MarkovBlock blk;
        blk.p = 1.0 / static_cast<double>(d);
        blk.dim_br = 1;
        blk.dim_bc = 1;
        ComplexMatrix r(d, d);
        r.at(j, j) = 1.0;
        blk.rho_r_br = DensityOperator(r, RegisterShape{{"R", d}, {"BR", 1}});
        ComplexMatrix c(d, d);
        c.at(j, j) = 1.0;
        blk.rho_bc_c = DensityOperator(c, RegisterShape{{"BC", 1}, {"C", d}});
        dec.blocks.push_back(std::move(blk));
    }
    return dec;
}

// GHZ state of d levels on (R, B, C)
inline DensityOperator ghz_state(std::size_t d) {
    RegisterShape shape{{"R", d}, {"B", d}, {"C", d}};
    std::size_t dim = d * d * d;
    ComplexMatrix m(dim, dim);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            std::size_t a = (i * d + i) * d + i, b = (j * d + j) * d + j;
            m.at(a, b) = 1.0 / static_cast<double>(d);
        }
    return DensityOperator(std::move(m), std::move(shape));
}

// index-loop partial trace, independent of the library routine
inline ComplexMatrix naive_partial_trace(const ComplexMatrix& m, const RegisterShape& shape,
                                         const std::vector<std::string>& keep) {
    std::size_t keep_dim = 1;
    std::vector<int> kept;
    for (const auto& r : shape.regs) {
        bool k = std::find(keep.begin(), keep.end(), r.label) != keep.end();
        kept.push_back(k);
        if (k) keep_dim *= r.dim;
    }
    ComplexMatrix out(keep_dim, keep_dim);
    std::size_t dim = shape.total_dim();
    auto keep_index = [&](std::size_t idx) {
        std::vector<std::size_t> digits = shape.unpack(idx);
        std::size_t ki = 0;
        for (std::size_t r = 0; r < shape.size(); ++r)
            if (kept[r]) ki = ki * shape.regs[r].dim + digits[r];
        return ki;
    };
    auto env_index = [&](std::size_t idx) {
        std::vector<std::size_t> digits = shape.unpack(idx);
        std::size_t ei = 0;
        for (std::size_t r = 0; r < shape.size(); ++r)
            if (!kept[r]) ei = ei * shape.regs[r].dim + digits[r];
        return ei;
    };
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            if (env_index(i) == env_index(j)) out.at(keep_index(i), keep_index(j)) += m.at(i, j);
    return out;
}

// classical likelihood-ratio test oracle (test-local, independent of the
// library's type-class code)
inline double sorting_oracle_dhyp(std::vector<double> p, std::vector<double> q, double eps) {
    std::vector<std::size_t> order(p.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        double ra = q[a] > 0 ? p[a] / q[a] : (p[a] > 0 ? 1e300 : 0.0);
        double rb = q[b] > 0 ? p[b] / q[b] : (p[b] > 0 ? 1e300 : 0.0);
        return ra > rb;
    });
    double target = 1.0 - eps, acc = 0.0, beta = 0.0;
    for (std::size_t i : order) {
        if (acc >= target - 1e-15) break;
        if (p[i] <= 0.0) continue;
        if (acc + p[i] <= target + 1e-15) {
            acc += p[i];
            beta += q[i];
        } else {
            beta += (target - acc) / p[i] * q[i];
            acc = target;
        }
    }
    return -std::log2(std::max(beta, 1e-300));
}

inline RedistributionInstance instance_from_sigma(const MarkovDecomposition& dec) {
    DensityOperator sigma = assemble(dec);
    PureState psi = purify(sigma, "A");
    std::vector<cx> amp = permute_systems(psi.amplitudes, psi.shape, {"R", "A", "B", "C"});
    RedistributionInstance inst;
    inst.psi = PureState(std::move(amp),
                         RegisterShape{{"R", dec.dim_r},
                                       {"A", psi.shape.dim_of("A")},
                                       {"B", dec.dim_b()},
                                       {"C", dec.dim_c}});
    inst.sigma = dec;
    return inst;
}

}  // namespace qsr::test
