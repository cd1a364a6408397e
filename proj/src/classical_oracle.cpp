#include "qsr/classical_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qsr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

std::vector<WeightedCell> plain_cells(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw ShapeError("classical oracle: length mismatch");
    std::vector<WeightedCell> cells;
    cells.reserve(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) cells.push_back({safe_log(p[i]), safe_log(q[i]), 0.0});
    return cells;
}

}  // namespace

double cells_d_hyp(std::vector<WeightedCell> cells, double eps) {
    if (eps < 0.0 || eps >= 1.0) throw DomainError("classical d_hyp: eps outside [0,1)");
    // likelihood-ratio order; cells carrying p but no q come first for free
    std::stable_sort(cells.begin(), cells.end(), [](const WeightedCell& a, const WeightedCell& b) {
        double ra = a.log_p - a.log_q;  // +inf when q = 0
        double rb = b.log_p - b.log_q;
        if (std::isnan(ra)) ra = kNegInf;  // p = q = 0
        if (std::isnan(rb)) rb = kNegInf;
        return ra > rb;
    });
    double target = 1.0 - eps;
    double acc = 0.0;
    double beta = 0.0;
    for (const WeightedCell& c : cells) {
        if (acc >= target - 1e-15) break;
        double pm = std::exp(c.log_p + c.log_count);
        if (pm <= 0.0) continue;
        double qm = std::exp(c.log_q + c.log_count);
        if (acc + pm <= target + 1e-15) {
            acc += pm;
            beta += qm;
        } else {
            double frac = (target - acc) / pm;
            beta += frac * qm;
            acc = target;
            break;
        }
    }
    if (beta < 1e-300) return 1e6;
    return -std::log2(beta);
}

double classical_d_hyp(const std::vector<double>& p, const std::vector<double>& q, double eps) {
    return cells_d_hyp(plain_cells(p, q), eps);
}

double classical_d_max(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw ShapeError("classical oracle: length mismatch");
    double lam = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 1e-15) continue;
        if (q[i] <= 1e-15) return 1e6;
        lam = std::max(lam, p[i] / q[i]);
    }
    return std::log2(std::max(lam, 1e-300));
}

namespace {

// best fidelity of a distribution p' <= lambda q (trace one) against p
double best_fidelity_capped(const std::vector<WeightedCell>& cells, double lambda) {
    // p' = min(theta p, lambda q) on the p-support, spill on the rest
    double cap_support = 0.0, cap_off = 0.0;
    for (const WeightedCell& c : cells) {
        double qm = std::exp(c.log_q + c.log_count);
        if (c.log_p > kNegInf)
            cap_support += lambda * qm;
        else
            cap_off += lambda * qm;
    }
    double lo = 0.0, hi = 2.0;
    // grow hi until mass(theta=hi) >= 1 or everything capped
    auto mass = [&](double theta) {
        double m = 0.0;
        for (const WeightedCell& c : cells) {
            if (c.log_p == kNegInf) continue;
            double pm = std::exp(c.log_p + c.log_count);
            double qm = std::exp(c.log_q + c.log_count);
            m += std::min(theta * pm, lambda * qm);
        }
        return m;
    };
    double theta;
    if (cap_support < 1.0) {
        if (cap_support + cap_off < 1.0 - 1e-12) return -1.0;  // infeasible
        theta = std::numeric_limits<double>::infinity();
    } else {
        while (mass(hi) < 1.0 && hi < 1e18) hi *= 2.0;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            if (mass(mid) < 1.0)
                lo = mid;
            else
                hi = mid;
        }
        theta = hi;
    }
    double f = 0.0;
    for (const WeightedCell& c : cells) {
        if (c.log_p == kNegInf) continue;
        double pm = std::exp(c.log_p + c.log_count);
        double qm = std::exp(c.log_q + c.log_count);
        double pp = std::min(theta * pm, lambda * qm);
        f += std::sqrt(pm * pp);
    }
    return std::min(f, 1.0);
}

}  // namespace

double cells_d_max_smooth(std::vector<WeightedCell> cells, double eps) {
    if (eps < 0.0 || eps >= 1.0) throw DomainError("classical d_max_smooth: eps outside [0,1)");
    double target = std::sqrt(std::max(0.0, 1.0 - eps * eps));
    // lambda upper bound: the unsmoothed optimum
    double lam_hi = 1.0;
    for (const WeightedCell& c : cells) {
        if (c.log_p == kNegInf) continue;
        if (c.log_q == kNegInf) {
            lam_hi = 1e300;
            break;
        }
        lam_hi = std::max(lam_hi, std::exp(c.log_p - c.log_q));
    }
    if (lam_hi >= 1e300) {
        // smoothing has to move all mass inside supp(q); may still be feasible
        lam_hi = 1e30;
    }
    if (best_fidelity_capped(cells, lam_hi) < target - 1e-12)
        throw SolverStatus("classical d_max_smooth: smoothing target unreachable");
    double lam_lo = 1.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lam_lo + lam_hi);
        if (best_fidelity_capped(cells, mid) >= target)
            lam_hi = mid;
        else
            lam_lo = mid;
    }
    return std::log2(lam_hi);
}

double classical_d_max_smooth(const std::vector<double>& p, const std::vector<double>& q,
                              double eps) {
    return cells_d_max_smooth(plain_cells(p, q), eps);
}

MergedAlphabet merge_cells(const std::vector<double>& p, const std::vector<double>& q, double tol) {
    if (p.size() != q.size()) throw ShapeError("merge_cells: length mismatch");
    MergedAlphabet out;
    for (std::size_t i = 0; i < p.size(); ++i) {
        bool found = false;
        for (std::size_t k = 0; k < out.p.size(); ++k)
            if (std::abs(out.p[k] - p[i]) <= tol && std::abs(out.q[k] - q[i]) <= tol) {
                ++out.count[k];
                found = true;
                break;
            }
        if (!found) {
            out.p.push_back(p[i]);
            out.q.push_back(q[i]);
            out.count.push_back(1);
        }
    }
    return out;
}

namespace {

void enumerate_types(const MergedAlphabet& alpha, std::size_t slot, std::size_t remaining,
                     double log_count, double log_p, double log_q,
                     std::vector<WeightedCell>& cells, std::size_t max_types,
                     const std::vector<double>& log_fact) {
    if (cells.size() > max_types)
        throw PreconditionError("type-class oracle: too many types (alphabet too rich)");
    if (slot + 1 == alpha.p.size()) {
        double n = static_cast<double>(remaining);
        double lc = log_count - log_fact[remaining] +
                    n * std::log(static_cast<double>(alpha.count[slot]));
        double lp = log_p + (alpha.p[slot] > 0.0 ? n * std::log(alpha.p[slot])
                                                 : (remaining ? kNegInf : 0.0));
        double lq = log_q + (alpha.q[slot] > 0.0 ? n * std::log(alpha.q[slot])
                                                 : (remaining ? kNegInf : 0.0));
        cells.push_back({lp, lq, lc});
        return;
    }
    for (std::size_t take = 0; take <= remaining; ++take) {
        double n = static_cast<double>(take);
        enumerate_types(alpha, slot + 1, remaining - take,
                        log_count - log_fact[take] + n * std::log(static_cast<double>(alpha.count[slot])),
                        log_p + (alpha.p[slot] > 0.0 ? n * std::log(alpha.p[slot])
                                                     : (take ? kNegInf : 0.0)),
                        log_q + (alpha.q[slot] > 0.0 ? n * std::log(alpha.q[slot])
                                                     : (take ? kNegInf : 0.0)),
                        cells, max_types, log_fact);
    }
}

}  // namespace

std::vector<WeightedCell> nfold_cells(const MergedAlphabet& alpha, std::size_t n,
                                      std::size_t max_types) {
    if (alpha.p.empty()) throw PreconditionError("nfold_cells: empty alphabet");
    std::vector<double> log_fact(n + 1, 0.0);
    for (std::size_t i = 2; i <= n; ++i) log_fact[i] = log_fact[i - 1] + std::log(double(i));
    std::vector<WeightedCell> cells;
    enumerate_types(alpha, 0, n, log_fact[n], 0.0, 0.0, cells, max_types, log_fact);
    return cells;
}

}  // namespace qsr
