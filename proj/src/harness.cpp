#include "qsr/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>

namespace qsr {

std::uint64_t Rng::next_u64() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
}

double Rng::normal() {
    // Box-Muller with explicit arithmetic for cross-platform reproducibility
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

ComplexMatrix random_density(Rng& rng, std::size_t dim) {
    ComplexMatrix g(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) g.at(i, j) = rng.cnormal();
    ComplexMatrix rho = g * g.dagger();
    rho *= cx(1.0 / rho.trace().real());
    return rho;
}

PureState random_pure(Rng& rng, const RegisterShape& shape) {
    std::vector<cx> amp(shape.total_dim());
    for (cx& a : amp) a = rng.cnormal();
    PureState p(std::move(amp), shape);
    p.normalize();
    return p;
}

RedistributionInstance random_instance(InstanceKind kind, const InstanceDims& dims,
                                       std::uint64_t seed) {
    Rng rng(seed);
    RedistributionInstance inst;
    switch (kind) {
        case InstanceKind::haar_pure: {
            RegisterShape shape{{"R", dims.dim_r}, {"A", dims.dim_a}, {"B", dims.dim_b},
                                {"C", dims.dim_c}};
            inst.psi = random_pure(rng, shape);
            break;
        }
        case InstanceKind::ghz: {
            std::size_t d = dims.dim_c;
            RegisterShape shape{{"R", d}, {"A", 1}, {"B", d}, {"C", d}};
            std::vector<cx> amp(shape.total_dim(), cx(0.0));
            for (std::size_t j = 0; j < d; ++j)
                amp[shape.pack({j, 0, j, j})] = 1.0 / std::sqrt(static_cast<double>(d));
            inst.psi = PureState(std::move(amp), shape);
            // the classically correlated extension, the natural companion
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
            inst.sigma = std::move(dec);
            break;
        }
        case InstanceKind::markov_blocks: {
            MarkovDecomposition decomp;
            decomp.dim_r = dims.dim_r;
            decomp.dim_c = dims.dim_c;
            std::vector<double> w(dims.blocks);
            double tot = 0.0;
            for (double& x : w) {
                x = 0.05 + rng.uniform();
                tot += x;
            }
            for (std::size_t j = 0; j < dims.blocks; ++j) {
                MarkovBlock blk;
                blk.p = w[j] / tot;
                blk.dim_br = dims.block_dim_br;
                blk.dim_bc = dims.block_dim_bc;
                std::size_t d1 = dims.dim_r * blk.dim_br;
                std::size_t d2 = blk.dim_bc * dims.dim_c;
                RegisterShape s1{{"R", dims.dim_r}, {"BR", blk.dim_br}};
                RegisterShape s2{{"BC", blk.dim_bc}, {"C", dims.dim_c}};
                if (dims.pure_blocks) {
                    PureState v1 = random_pure(rng, s1);
                    blk.rho_r_br = v1.density();
                    PureState v2 = random_pure(rng, s2);
                    blk.rho_bc_c = v2.density();
                } else {
                    blk.rho_r_br = DensityOperator(random_density(rng, d1), s1);
                    blk.rho_bc_c = DensityOperator(random_density(rng, d2), s2);
                }
                decomp.blocks.push_back(std::move(blk));
            }
            DensityOperator sigma = assemble(decomp);
            inst.psi = purify(sigma, "A");
            // canonical register order (R, A, B, C)
            std::vector<cx> amp =
                permute_systems(inst.psi.amplitudes, inst.psi.shape, {"R", "A", "B", "C"});
            RegisterShape shape{{"R", decomp.dim_r}, {"A", inst.psi.shape.dim_of("A")},
                                {"B", decomp.dim_b()}, {"C", decomp.dim_c}};
            inst.psi = PureState(std::move(amp), shape);
            inst.sigma = std::move(decomp);
            break;
        }
        case InstanceKind::classical: {
            std::size_t cells = dims.dim_r * dims.dim_b * dims.dim_c;
            std::vector<double> p(cells);
            double tot = 0.0;
            for (double& x : p) {
                x = 0.01 + rng.uniform();
                tot += x;
            }
            RegisterShape rbc{{"R", dims.dim_r}, {"B", dims.dim_b}, {"C", dims.dim_c}};
            ComplexMatrix diag(cells, cells);
            for (std::size_t i = 0; i < cells; ++i) diag.at(i, i) = p[i] / tot;
            DensityOperator rho(std::move(diag), rbc);
            inst.psi = purify(rho, "A");
            std::vector<cx> amp =
                permute_systems(inst.psi.amplitudes, inst.psi.shape, {"R", "A", "B", "C"});
            RegisterShape shape{{"R", dims.dim_r}, {"A", inst.psi.shape.dim_of("A")},
                                {"B", dims.dim_b}, {"C", dims.dim_c}};
            inst.psi = PureState(std::move(amp), shape);
            break;
        }
    }
    return inst;
}

// ---------------------------------------------------------------------------

void ClassicalTriple::validate() const {
    if (p.size() != dim_r * dim_b * dim_c)
        throw ShapeError("classical triple: distribution length mismatch");
    double s = 0.0;
    for (double x : p) {
        if (x < -1e-12) throw PreconditionError("classical triple: negative probability");
        s += x;
    }
    if (std::abs(s - 1.0) > 1e-9) throw PreconditionError("classical triple: probabilities sum to " +
                                                          std::to_string(s));
}

std::vector<double> ClassicalTriple::marginal_rb() const {
    std::vector<double> m(dim_r * dim_b, 0.0);
    for (std::size_t r = 0; r < dim_r; ++r)
        for (std::size_t b = 0; b < dim_b; ++b)
            for (std::size_t c = 0; c < dim_c; ++c) m[r * dim_b + b] += p[(r * dim_b + b) * dim_c + c];
    return m;
}

std::vector<double> ClassicalTriple::marginal_b() const {
    std::vector<double> m(dim_b, 0.0);
    for (std::size_t r = 0; r < dim_r; ++r)
        for (std::size_t b = 0; b < dim_b; ++b)
            for (std::size_t c = 0; c < dim_c; ++c) m[b] += p[(r * dim_b + b) * dim_c + c];
    return m;
}

std::vector<double> ClassicalTriple::marginal_c() const {
    std::vector<double> m(dim_c, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) m[i % dim_c] += p[i];
    return m;
}

std::vector<double> ClassicalTriple::marginal_bc() const {
    std::vector<double> m(dim_b * dim_c, 0.0);
    for (std::size_t r = 0; r < dim_r; ++r)
        for (std::size_t b = 0; b < dim_b; ++b)
            for (std::size_t c = 0; c < dim_c; ++c)
                m[b * dim_c + c] += p[(r * dim_b + b) * dim_c + c];
    return m;
}

namespace {

double shannon(const std::vector<double>& p) {
    double s = 0.0;
    for (double x : p)
        if (x > 1e-15) s -= x * std::log2(x);
    return s;
}

}  // namespace

double ClassicalTriple::cmi() const {
    std::vector<double> rb = marginal_rb(), bc = marginal_bc(), b = marginal_b();
    return shannon(rb) + shannon(bc) - shannon(b) - shannon(p);
}

SweepReport asymptotic_sweep(const ClassicalTriple& psi, std::size_t n_min, std::size_t n_max,
                             double eps, std::size_t max_types) {
    psi.validate();
    if (n_min < 1 || n_min > n_max) throw PreconditionError("asymptotic_sweep: bad n range");
    if (eps <= 0.0 || eps >= 1.0) throw PreconditionError("asymptotic_sweep: eps outside (0,1)");

    // D_max pair: psi^{RBC} against psi^{RB} x psi^{C}
    std::vector<double> rb = psi.marginal_rb(), c = psi.marginal_c(), b = psi.marginal_b(),
                        bc = psi.marginal_bc();
    std::size_t cells = psi.p.size();
    std::vector<double> q_full(cells);
    for (std::size_t r = 0; r < psi.dim_r; ++r)
        for (std::size_t bb = 0; bb < psi.dim_b; ++bb)
            for (std::size_t cc = 0; cc < psi.dim_c; ++cc)
                q_full[(r * psi.dim_b + bb) * psi.dim_c + cc] = rb[r * psi.dim_b + bb] * c[cc];
    std::vector<double> q_bc(psi.dim_b * psi.dim_c);
    for (std::size_t bb = 0; bb < psi.dim_b; ++bb)
        for (std::size_t cc = 0; cc < psi.dim_c; ++cc) q_bc[bb * psi.dim_c + cc] = b[bb] * c[cc];

    SweepReport rep;
    rep.eps = eps;
    rep.cmi = psi.cmi();
    // relative-entropy variance of the D_max pair (bits^2)
    double d = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
        if (psi.p[i] <= 1e-15) continue;
        double lr = std::log2(psi.p[i] / q_full[i]);
        d += psi.p[i] * lr;
        m2 += psi.p[i] * lr * lr;
    }
    rep.variance = std::max(0.0, m2 - d * d);
    rep.window_c = 3.0 * std::sqrt(rep.variance);

    MergedAlphabet alpha_full = merge_cells(psi.p, q_full);
    MergedAlphabet alpha_bc = merge_cells(bc, q_bc);

    double const_term =
        std::log2(1.0 / (2.0 * std::sqrt(eps))) + std::log2((72.0 + eps * eps) / (eps * eps));
    // grid points are independent; evaluate them concurrently and join in order
    std::vector<std::future<SweepPoint>> pending;
    for (std::size_t n = n_min; n <= n_max; ++n)
        pending.push_back(std::async(std::launch::async, [&, n] {
            SweepPoint pt;
            pt.n = n;
            std::vector<WeightedCell> cf = nfold_cells(alpha_full, n, max_types);
            std::vector<WeightedCell> cb = nfold_cells(alpha_bc, n, max_types);
            pt.dmax_bits = cells_d_max_smooth(cf, eps / 3.0);
            pt.dh_bits = cells_d_hyp(cb, 2.0 * eps);
            pt.bound_bits = 0.5 * (pt.dmax_bits - pt.dh_bits) + const_term;
            pt.bound_per_n = pt.bound_bits / static_cast<double>(n);
            return pt;
        }));
    for (auto& f : pending) rep.rows.push_back(f.get());

    double half_cmi = 0.5 * rep.cmi;
    rep.n0 = 0;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        bool ok_from_here = true;
        for (std::size_t j = i; j < rep.rows.size(); ++j) {
            double dev = std::abs(rep.rows[j].bound_per_n - half_cmi);
            if (dev > rep.window_c / std::sqrt(static_cast<double>(rep.rows[j].n))) {
                ok_from_here = false;
                break;
            }
        }
        if (ok_from_here) {
            rep.n0 = rep.rows[i].n;
            rep.in_window_to_end = true;
            break;
        }
    }

    // least-squares slope of bound/n against n
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const SweepPoint& pt : rep.rows) {
        double x = static_cast<double>(pt.n);
        sx += x;
        sy += pt.bound_per_n;
        sxx += x * x;
        sxy += x * pt.bound_per_n;
    }
    double nn = static_cast<double>(rep.rows.size());
    double denom = nn * sxx - sx * sx;
    rep.trend_slope = denom > 1e-12 ? (nn * sxy - sx * sy) / denom : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------

namespace {

std::string csv_quote(const std::string& s) {
    bool need = s.find_first_of(",\"\n\r") != std::string::npos;
    if (!need) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += "\"\"";
        out += ch;
    }
    out += "\"";
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

std::string to_csv(const SweepReport& rep) {
    std::ostringstream os;
    os << "n,dmax_bits,dh_bits,bound_bits,bound_per_n\r\n";
    for (const SweepPoint& pt : rep.rows)
        os << pt.n << "," << csv_quote(fmt(pt.dmax_bits)) << "," << csv_quote(fmt(pt.dh_bits)) << ","
           << csv_quote(fmt(pt.bound_bits)) << "," << csv_quote(fmt(pt.bound_per_n)) << "\r\n";
    return os.str();
}

std::string to_svg(const SweepReport& rep) {
    const double w = 800.0, h = 500.0, ml = 70.0, mr = 20.0, mt = 20.0, mb = 50.0;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const SweepPoint& pt : rep.rows) {
        xmin = std::min(xmin, static_cast<double>(pt.n));
        xmax = std::max(xmax, static_cast<double>(pt.n));
        ymin = std::min(ymin, pt.bound_per_n);
        ymax = std::max(ymax, pt.bound_per_n);
    }
    ymin = std::min(ymin, 0.5 * rep.cmi);
    ymax = std::max(ymax, 0.5 * rep.cmi);
    if (xmax <= xmin) xmax = xmin + 1.0;
    if (ymax <= ymin) ymax = ymin + 1.0;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" "
          "viewBox=\"0 0 800 500\">\n";
    os << "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\"" << h - mb
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << px(xmin) << "\" y1=\"" << py(0.5 * rep.cmi) << "\" x2=\"" << px(xmax)
       << "\" y2=\"" << py(0.5 * rep.cmi) << "\" stroke=\"#888\" stroke-dasharray=\"6 3\"/>\n";
    os << "<text x=\"" << w - mr - 160 << "\" y=\"" << py(0.5 * rep.cmi) - 6
       << "\" font-size=\"12\">half conditional mutual information</text>\n";
    os << "<polyline fill=\"none\" stroke=\"#1f4e99\" stroke-width=\"2\" points=\"";
    for (const SweepPoint& pt : rep.rows)
        os << px(static_cast<double>(pt.n)) << "," << py(pt.bound_per_n) << " ";
    os << "\"/>\n";
    for (const SweepPoint& pt : rep.rows)
        os << "<circle cx=\"" << px(static_cast<double>(pt.n)) << "\" cy=\"" << py(pt.bound_per_n)
           << "\" r=\"3\" fill=\"#1f4e99\"/>\n";
    os << "<text x=\"" << (ml + w - mr) / 2 - 60 << "\" y=\"" << h - 12
       << "\" font-size=\"13\">copies n</text>\n";
    os << "<text x=\"8\" y=\"" << (mt + h - mb) / 2
       << "\" font-size=\"13\" transform=\"rotate(-90 14 " << (mt + h - mb) / 2
       << ")\">bound / n (bits)</text>\n";
    os << "</svg>\n";
    return os.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << contents;
    if (!f) throw IoError("write failed: " + path);
}

}  // namespace qsr
