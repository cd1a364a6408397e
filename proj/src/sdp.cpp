#include "qsr/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qsr {

std::size_t SdpProblem::add_block(std::size_t dim) {
    block_dims.push_back(dim);
    objective.push_back(ComplexMatrix::zero(dim, dim));
    return block_dims.size() - 1;
}

void SdpProblem::set_objective(std::size_t block, const ComplexMatrix& c) { objective[block] = c; }

SdpProblem::Constraint& SdpProblem::new_constraint(double rhs) {
    Constraint con;
    con.rhs = rhs;
    for (std::size_t d : block_dims) con.blocks.push_back(ComplexMatrix::zero(d, d));
    constraints.push_back(std::move(con));
    return constraints.back();
}

std::size_t SdpProblem::total_dim() const {
    std::size_t n = 0;
    for (std::size_t d : block_dims) n += d;
    return n;
}

std::vector<ComplexMatrix> hermitian_basis(std::size_t dim) {
    std::vector<ComplexMatrix> basis;
    for (std::size_t i = 0; i < dim; ++i) basis.push_back(ComplexMatrix::basis_op(dim, i, i));
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = i + 1; j < dim; ++j) {
            ComplexMatrix re(dim, dim), im(dim, dim);
            re.at(i, j) = 0.5;
            re.at(j, i) = 0.5;
            im.at(i, j) = cx(0.0, -0.5);
            im.at(j, i) = cx(0.0, 0.5);
            basis.push_back(std::move(re));
            basis.push_back(std::move(im));
        }
    return basis;
}

namespace {

double inner(const std::vector<ComplexMatrix>& a, const std::vector<ComplexMatrix>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const auto &x = a[k].data(), &y = b[k].data();
        for (std::size_t i = 0; i < x.size(); ++i)
            s += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
    }
    return s;  // Re Tr(A^dag B) = Re Tr(A B) for Hermitian A, B
}

// Cholesky factor L with M = L L^dag; returns false if not positive definite.
bool cholesky(const ComplexMatrix& m, ComplexMatrix& l) {
    std::size_t n = m.rows();
    l = ComplexMatrix::zero(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            cx s = m.at(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l.at(i, k) * std::conj(l.at(j, k));
            if (i == j) {
                double d = s.real();
                if (d <= 0.0 || !std::isfinite(d)) return false;
                l.at(i, i) = std::sqrt(d);
            } else {
                l.at(i, j) = s / l.at(j, j);
            }
        }
    }
    return true;
}

// Solves L L^dag X = B in place of X given the Cholesky factor.
ComplexMatrix cholesky_solve(const ComplexMatrix& l, const ComplexMatrix& b) {
    std::size_t n = l.rows();
    ComplexMatrix x = b;
    // forward substitution: L Y = B
    for (std::size_t c = 0; c < x.cols(); ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            cx s = x.at(i, c);
            for (std::size_t k = 0; k < i; ++k) s -= l.at(i, k) * x.at(k, c);
            x.at(i, c) = s / l.at(i, i);
        }
        // back substitution: L^dag X = Y
        for (std::size_t ii = n; ii-- > 0;) {
            cx s = x.at(ii, c);
            for (std::size_t k = ii + 1; k < n; ++k) s -= std::conj(l.at(k, ii)) * x.at(k, c);
            x.at(ii, c) = s / l.at(ii, ii);
        }
    }
    return x;
}

bool is_psd_strict(const ComplexMatrix& m) {
    ComplexMatrix l;
    return cholesky(m, l);
}

// largest alpha in (0, 1] with X + alpha dX > 0, via bisection on Cholesky
double max_step(const std::vector<ComplexMatrix>& x, const std::vector<ComplexMatrix>& dx) {
    auto ok = [&](double a) {
        for (std::size_t k = 0; k < x.size(); ++k) {
            ComplexMatrix m = x[k];
            ComplexMatrix scaled = dx[k];
            scaled *= cx(a);
            m += scaled;
            if (!is_psd_strict(m)) return false;
        }
        return true;
    };
    if (ok(1.0)) return 1.0;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 40; ++it) {
        double mid = 0.5 * (lo + hi);
        if (ok(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

// dense symmetric linear solve with partial pivoting (small m)
std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
    std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        double d = a[col][col];
        if (std::abs(d) < 1e-14) {
            a[col][col] += 1e-12;
            d = a[col][col];
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = a[r][col] / d;
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
        x[r] = s / a[r][r];
    }
    return x;
}

}  // namespace

SdpSolution sdp_min(const SdpProblem& prob_in, const SdpOptions& opts) {
    // constraints added before later blocks existed carry short block lists
    SdpProblem prob = prob_in;
    for (auto& con : prob.constraints)
        while (con.blocks.size() < prob.block_dims.size())
            con.blocks.push_back(ComplexMatrix::zero(prob.block_dims[con.blocks.size()],
                                                      prob.block_dims[con.blocks.size()]));
    std::size_t nb = prob.block_dims.size();
    std::size_t m = prob.constraints.size();
    std::size_t ntot = prob.total_dim();
    if (ntot == 0 || m == 0) throw SolverStatus("sdp_min: empty problem");
    if (ntot > 4096) throw DimensionCap("sdp_min: total dimension too large");

    double bnorm = 0.0;
    for (const auto& c : prob.constraints) bnorm = std::max(bnorm, std::abs(c.rhs));
    double cnorm = 0.0;
    for (const auto& c : prob.objective) cnorm = std::max(cnorm, c.max_abs());

    std::vector<ComplexMatrix> x, z;
    for (std::size_t d : prob.block_dims) {
        ComplexMatrix id = ComplexMatrix::identity(d);
        ComplexMatrix xid = id;
        xid *= cx(std::max(1.0, bnorm));
        x.push_back(xid);
        ComplexMatrix zid = id;
        zid *= cx(std::max(1.0, cnorm));
        z.push_back(zid);
    }
    std::vector<double> y(m, 0.0);

    auto residuals = [&](std::vector<double>& rp, std::vector<ComplexMatrix>& rd) {
        rp.resize(m);
        for (std::size_t i = 0; i < m; ++i) rp[i] = prob.constraints[i].rhs - inner(prob.constraints[i].blocks, x);
        rd.clear();
        for (std::size_t k = 0; k < nb; ++k) {
            ComplexMatrix r = prob.objective[k];
            r -= z[k];
            for (std::size_t i = 0; i < m; ++i) {
                ComplexMatrix t = prob.constraints[i].blocks[k];
                t *= cx(y[i]);
                r -= t;
            }
            rd.push_back(std::move(r));
        }
    };

    SdpSolution sol;
    bool near_optimal = false;
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        std::vector<double> rp;
        std::vector<ComplexMatrix> rd;
        residuals(rp, rd);
        double gap = inner(x, z);
        double mu = gap / static_cast<double>(ntot);
        double rpmax = 0.0;
        for (double v : rp) rpmax = std::max(rpmax, std::abs(v));
        double rdmax = 0.0;
        for (const auto& r : rd) rdmax = std::max(rdmax, r.max_abs());

        sol.primal_obj = inner(prob.objective, x);
        sol.dual_obj = 0.0;
        for (std::size_t i = 0; i < m; ++i) sol.dual_obj += prob.constraints[i].rhs * y[i];
        sol.gap = std::abs(gap);
        sol.iterations = iter;
        sol.x = x;
        sol.y = y;
        if (sol.gap <= opts.gap_tol * (1.0 + std::abs(sol.primal_obj)) &&
            rpmax <= opts.feas_tol * (1.0 + bnorm) && rdmax <= opts.feas_tol * (1.0 + cnorm))
            return sol;
        // a stall on a degenerate optimal face still counts when the iterate
        // is essentially optimal
        near_optimal = sol.gap <= 10.0 * opts.gap_tol * (1.0 + std::abs(sol.primal_obj)) &&
                       rpmax <= 100.0 * opts.feas_tol * (1.0 + bnorm) &&
                       rdmax <= 100.0 * opts.feas_tol * (1.0 + cnorm);
        if (!std::isfinite(mu) || mu > 1e14) break;

        // Z = Lz Lz^dag per block
        std::vector<ComplexMatrix> lz(nb);
        for (std::size_t k = 0; k < nb; ++k) {
            ComplexMatrix zz = z[k];
            if (!cholesky(zz, lz[k])) {
                ComplexMatrix jit = ComplexMatrix::identity(prob.block_dims[k]);
                jit *= cx(1e-12 * std::max(1.0, z[k].max_abs()));
                zz += jit;
                if (!cholesky(zz, lz[k])) throw SolverStatus("sdp_min: dual iterate lost definiteness");
            }
        }
        auto zinv_times = [&](std::size_t k, const ComplexMatrix& b) { return cholesky_solve(lz[k], b); };

        // normal matrix M_ij = <A_i, Z^-1 A_j X>
        std::vector<std::vector<ComplexMatrix>> zinv_aj_x(m);
        for (std::size_t j = 0; j < m; ++j) {
            zinv_aj_x[j].resize(nb);
            for (std::size_t k = 0; k < nb; ++k)
                zinv_aj_x[j][k] = zinv_times(k, prob.constraints[j].blocks[k] * x[k]);
        }
        std::vector<std::vector<double>> nm(m, std::vector<double>(m, 0.0));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) nm[i][j] = inner(prob.constraints[i].blocks, zinv_aj_x[j]);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j) {
                double s = 0.5 * (nm[i][j] + nm[j][i]);
                nm[i][j] = s;
                nm[j][i] = s;
            }
        for (std::size_t i = 0; i < m; ++i) nm[i][i] += 1e-13 * (1.0 + nm[i][i]);

        // shared pieces of the right-hand side
        std::vector<ComplexMatrix> zinv_rd_x(nb), zinv_id(nb);
        for (std::size_t k = 0; k < nb; ++k) {
            zinv_rd_x[k] = zinv_times(k, rd[k] * x[k]);
            zinv_id[k] = zinv_times(k, ComplexMatrix::identity(prob.block_dims[k]));
        }

        auto solve_direction = [&](double sigma_mu, const std::vector<ComplexMatrix>* corr,
                                   std::vector<ComplexMatrix>& dx, std::vector<ComplexMatrix>& dz,
                                   std::vector<double>& dy) {
            std::vector<double> rhs(m);
            for (std::size_t i = 0; i < m; ++i) {
                rhs[i] = rp[i] - sigma_mu * inner(prob.constraints[i].blocks, zinv_id) +
                         inner(prob.constraints[i].blocks, x) + inner(prob.constraints[i].blocks, zinv_rd_x) +
                         (corr ? inner(prob.constraints[i].blocks, *corr) : 0.0);
            }
            dy = solve_dense(nm, rhs);
            dz.clear();
            for (std::size_t k = 0; k < nb; ++k) {
                ComplexMatrix d = rd[k];
                for (std::size_t i = 0; i < m; ++i) {
                    ComplexMatrix t = prob.constraints[i].blocks[k];
                    t *= cx(dy[i]);
                    d -= t;
                }
                dz.push_back(std::move(d));
            }
            dx.clear();
            for (std::size_t k = 0; k < nb; ++k) {
                ComplexMatrix d = zinv_id[k];
                d *= cx(sigma_mu);
                d -= x[k];
                d -= zinv_times(k, dz[k] * x[k]);
                if (corr) d -= (*corr)[k];
                // symmetrize
                ComplexMatrix h = d.dagger();
                d += h;
                d *= cx(0.5);
                dx.push_back(std::move(d));
            }
        };

        // predictor
        std::vector<ComplexMatrix> dxa, dza;
        std::vector<double> dya;
        solve_direction(0.0, nullptr, dxa, dza, dya);
        double ap = max_step(x, dxa);
        double ad = max_step(z, dza);
        double gap_aff = 0.0;
        {
            std::vector<ComplexMatrix> xa = x, za = z;
            for (std::size_t k = 0; k < nb; ++k) {
                ComplexMatrix t = dxa[k];
                t *= cx(0.98 * ap);
                xa[k] += t;
                ComplexMatrix u = dza[k];
                u *= cx(0.98 * ad);
                za[k] += u;
            }
            gap_aff = inner(xa, za);
        }
        double sigma = std::pow(std::max(0.0, gap_aff / std::max(gap, 1e-300)), 3.0);
        sigma = std::min(1.0, std::max(1e-8, sigma));
        // keep the path interior while primal/dual feasibility lags behind
        double mu_target = std::max(sigma * mu, 0.05 * (rpmax + rdmax));

        // corrector with second-order term Z^-1 dZ_aff dX_aff
        std::vector<ComplexMatrix> corr(nb);
        for (std::size_t k = 0; k < nb; ++k) corr[k] = zinv_times(k, dza[k] * dxa[k]);
        std::vector<ComplexMatrix> dx, dz;
        std::vector<double> dy;
        solve_direction(mu_target, &corr, dx, dz, dy);

        double sp = 0.98 * max_step(x, dx);
        double sd = 0.98 * max_step(z, dz);
        if (sp < 1e-12 && sd < 1e-12) break;
        for (std::size_t k = 0; k < nb; ++k) {
            ComplexMatrix t = dx[k];
            t *= cx(sp);
            x[k] += t;
            ComplexMatrix u = dz[k];
            u *= cx(sd);
            z[k] += u;
        }
        for (std::size_t i = 0; i < m; ++i) y[i] += sd * dy[i];
    }

    if (near_optimal) return sol;
    std::ostringstream os;
    os << "sdp_min: no convergence within " << opts.max_iterations << " iterations (gap " << sol.gap
       << ")";
    throw SolverStatus(os.str());
}

}  // namespace qsr
