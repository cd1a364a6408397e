// qsr: one-shot quantum state redistribution toolbox
//
// Subcommands: entropy, markov-check, embezzle, convex-split, redistribute,
// bounds-compare, sweep. Exit codes: 0 ok, 2 precondition, 3 dimension cap,
// 4 solver failure.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "qsr/classical_oracle.hpp"
#include "qsr/harness.hpp"
#include "qsr/serialize.hpp"

using namespace qsr;
using nlohmann::json;

namespace {

std::vector<std::string> split_labels(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty())
        std::cout << text << "\n";
    else
        write_file(out_path, text + "\n");
}

DensityOperator load_density(const std::string& path) { return density_from_json(load_file(path)); }

// instance sources: a JSON file path, or a generator spec "ghz:d",
// "haar:dr,da,db,dc", "markov:blocks[,dim_bc]", "classical:dr,db,dc"
// combined with the global --seed
RedistributionInstance load_instance(const std::string& source, std::uint64_t seed) {
    auto colon = source.find(':');
    if (colon == std::string::npos || source.find(".json") != std::string::npos)
        return instance_from_json(load_file(source));
    std::string kind = source.substr(0, colon);
    std::vector<std::size_t> args;
    {
        std::stringstream ss(source.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) args.push_back(static_cast<std::size_t>(std::stoul(item)));
    }
    InstanceDims dims;
    if (kind == "ghz") {
        if (!args.empty()) dims.dim_c = args[0];
        return random_instance(InstanceKind::ghz, dims, seed);
    }
    if (kind == "haar") {
        if (args.size() >= 4) {
            dims.dim_r = args[0];
            dims.dim_a = args[1];
            dims.dim_b = args[2];
            dims.dim_c = args[3];
        }
        return random_instance(InstanceKind::haar_pure, dims, seed);
    }
    if (kind == "markov") {
        if (!args.empty()) dims.blocks = args[0];
        if (args.size() >= 2) dims.block_dim_bc = args[1];
        return random_instance(InstanceKind::markov_blocks, dims, seed);
    }
    if (kind == "classical") {
        if (args.size() >= 3) {
            dims.dim_r = args[0];
            dims.dim_b = args[1];
            dims.dim_c = args[2];
        }
        return random_instance(InstanceKind::classical, dims, seed);
    }
    throw PreconditionError("unknown instance source: " + source);
}

int run_entropy(const std::string& quantity, const std::string& state_path,
                const std::string& sigma_path, double eps, const std::string& a_labels,
                const std::string& b_labels, const std::string& r_labels,
                const std::string& c_labels, const std::string& out_path) {
    DensityOperator rho = load_density(state_path);
    EntropyReport rep;
    rep.quantity = quantity;
    if (quantity == "dmax") {
        rep.value = d_max(rho, load_density(sigma_path));
    } else if (quantity == "dhyp") {
        HypTestResult h = d_hyp(rho, load_density(sigma_path), eps);
        rep.value = h.value;
        rep.witness = h.test_op;
    } else if (quantity == "dmax-smooth") {
        SmoothResult s = d_max_smooth(rho, load_density(sigma_path), eps);
        rep.value = ExtReal::of(s.value);
        if (s.witness) rep.witness = s.witness->matrix;
        rep.iterations = s.iterations;
        rep.duality_gap = s.duality_gap;
    } else if (quantity == "imax") {
        SmoothResult s = eps > 0.0 ? i_max_smooth(rho, split_labels(a_labels), split_labels(b_labels), eps)
                                   : i_max(rho, split_labels(a_labels), split_labels(b_labels));
        rep.value = ExtReal::of(s.value);
        rep.iterations = s.iterations;
        rep.duality_gap = s.duality_gap;
    } else if (quantity == "cmi") {
        rep.value = ExtReal::of(cond_mutual_info(rho, split_labels(r_labels), split_labels(b_labels),
                                                 split_labels(c_labels)));
    } else {
        throw PreconditionError("unknown quantity: " + quantity);
    }
    emit(out_path, report_to_json(rep));
    return 0;
}

int run_markov_check(const std::string& state_path, const std::string& sigma_path, double eps,
                     double tol, const std::string& out_path) {
    DensityOperator psi = load_density(state_path);
    MarkovDecomposition decomp = decomposition_from_json(load_file(sigma_path));
    MarkovIdentityReport rep = markov_identity_check(psi, decomp);
    MeMembershipReport me = me_membership(psi, decomp, eps);
    json j;
    j["cmi"] = rep.cmi;
    if (rep.support_violation)
        j["difference"] = "infinite";
    else
        j["difference"] = rep.difference.value;
    double gap = rep.support_violation ? 1e300 : std::abs(rep.cmi - rep.difference.value);
    j["identity_gap"] = gap;
    j["identity_holds"] = gap <= tol;
    j["me_member"] = me.member;
    j["me_block_distances"] = me.block_distances;
    emit(out_path, j.dump(2));
    return 0;
}

int run_embezzle(const std::string& check, const std::string& params, const std::string& out_path) {
    json p = json::parse(params);
    json j;
    if (check == "unif") {
        UnifEmbezzleReport rep = unif_embezzle_check(p.at("a").get<std::size_t>(),
                                                     p.at("b").get<std::size_t>(),
                                                     p.at("n").get<std::size_t>(),
                                                     p.at("delta").get<double>());
        j = json{{"check", "unif"}, {"slack1", rep.slack1}, {"slack2", rep.slack2},
                 {"s_ratio", rep.s_ratio}, {"trace", rep.trace}};
    } else if (check == "flatten") {
        DensityOperator rho = load_density(p.at("state").get<std::string>());
        FlattenResult fl = flatten_unitary(rho, p.at("gamma").get<double>(),
                                           p.at("delta").get<double>());
        j = json{{"check", "flatten"}, {"a", fl.a},       {"n", fl.n},
                 {"b_of_c", fl.b_of_c}, {"slack1", fl.slack1}, {"slack2", fl.slack2}};
    } else if (check == "decouple") {
        MarkovDecomposition d = decomposition_from_json(load_file(p.at("decomp").get<std::string>()));
        CqState cq;
        for (const MarkovBlock& b : d.blocks) {
            cq.p.push_back(b.p);
            cq.rho_j.push_back(b.rho_bc_c);
        }
        DecoupleResult dec = decouple_cq(cq, p.at("gamma").get<double>(), p.at("delta").get<double>());
        j = json{{"check", "decouple"},       {"a", dec.a},
                 {"n", dec.n},                {"slack1", dec.slack1},
                 {"slack2", dec.slack2},      {"trace_check", dec.trace_check}};
    } else {
        throw PreconditionError("unknown embezzle check: " + check);
    }
    emit(out_path, j.dump(2));
    return 0;
}

int run_convex_split(const std::string& state_path, const std::string& b_label,
                     const std::string& sigma_path, double delta, std::size_t dim_cap,
                     const std::string& out_path) {
    DensityOperator rho = load_density(state_path);
    DensityOperator sigma = load_density(sigma_path);
    ConvexSplitReport rep = convex_split_check(rho, b_label, sigma, delta, dim_cap);
    json j{{"k_bits", rep.k_bits}, {"n", rep.n}, {"achieved_p", rep.achieved_p},
           {"bound", rep.bound},   {"holds", rep.achieved_p <= rep.bound + 1e-9}};
    emit(out_path, j.dump(2));
    return 0;
}

int run_redistribute(const std::string& instance_path, std::uint64_t seed, double eps1,
                     double eps2, const std::string& sigma_path, bool zero_cost, bool bound_only,
                     std::size_t n_embezzle, std::size_t dim_cap, const std::string& out_path) {
    RedistributionInstance inst = load_instance(instance_path, seed);
    if (eps1 >= 0.0) inst.eps1 = eps1;
    if (eps2 > 0.0) inst.eps2 = eps2;
    if (!sigma_path.empty()) inst.sigma = decomposition_from_json(load_file(sigma_path));

    if (bound_only) {
        std::vector<BoundCandidate> cands;
        DensityOperator psi_rbc = ordered_marginal(inst.psi, {"R", "B", "C"});
        DensityOperator pp = inst.psi_prime ? *inst.psi_prime : psi_rbc;
        if (inst.sigma) cands.push_back({pp, *inst.sigma});
        cands.push_back({pp, product_extension(psi_rbc)});
        BoundReport rep = evaluate_cost_bounds(psi_rbc, inst.eps2, cands);
        json j{{"new_bound", rep.new_bound},
               {"product_bound", rep.product_bound},
               {"new_bracket_half", rep.new_bracket_half},
               {"product_bracket_half", rep.product_bracket_half}};
        emit(out_path, j.dump(2));
        return 0;
    }

    ProtocolTranscript t;
    if (zero_cost) {
        t = run_zero_cost_markov(inst, n_embezzle, dim_cap);
    } else {
        MainRunOptions opts;
        opts.dim_cap = dim_cap;
        MainRunResult res = run_redistribution(inst, opts);
        t = std::move(res.transcript);
        if (res.claims) {
            std::ostringstream os;
            os << "; claim slacks dmax=" << res.claims->dmax_slack
               << " dh=" << res.claims->dh_slack;
            t.notes += os.str();
        }
    }
    emit(out_path, transcript_to_json(t));
    std::fprintf(stderr,
                 "run: %zu decoys, window %zu, %.3f qubits sent, achieved P <= %.6f "
                 "(budget %.3f)\n",
                 t.m, t.b, t.cost.qubits_sent, t.achieved_p, t.error_budget);
    return 0;
}

int run_bounds_compare(const std::string& instance_path, std::uint64_t seed, double eps,
                       const std::string& out_path) {
    RedistributionInstance inst = load_instance(instance_path, seed);
    DensityOperator psi_rbc = ordered_marginal(inst.psi, {"R", "B", "C"});
    std::vector<BoundCandidate> cands;
    if (inst.sigma) cands.push_back({psi_rbc, *inst.sigma});
    cands.push_back({psi_rbc, product_extension(psi_rbc)});
    BoundReport rep = evaluate_cost_bounds(psi_rbc, eps, cands);
    double cmi = cond_mutual_info(psi_rbc, {"R"}, {"B"}, {"C"});
    std::ostringstream os;
    os << "new_bound,product_bound,new_bracket_half,product_bracket_half,cmi,dims\r\n";
    os.precision(12);
    os << rep.new_bound << "," << rep.product_bound << "," << rep.new_bracket_half << ","
       << rep.product_bracket_half << "," << cmi << "," << psi_rbc.dim() << "\r\n";
    emit(out_path, os.str());
    return 0;
}

int run_sweep(const std::string& dist_path, std::size_t nmin, std::size_t nmax, double eps,
              const std::string& out_prefix) {
    json j = json::parse(load_file(dist_path));
    ClassicalTriple tri;
    tri.dim_r = j.at("dim_r").get<std::size_t>();
    tri.dim_b = j.at("dim_b").get<std::size_t>();
    tri.dim_c = j.at("dim_c").get<std::size_t>();
    tri.p = j.at("p").get<std::vector<double>>();
    SweepReport rep = asymptotic_sweep(tri, nmin, nmax, eps);
    if (out_prefix.empty()) {
        std::cout << to_csv(rep);
    } else {
        write_file(out_prefix + ".csv", to_csv(rep));
        write_file(out_prefix + ".svg", to_svg(rep));
    }
    std::fprintf(stderr, "sweep: cmi=%.6f variance=%.6f n0=%zu in_window=%d slope=%.6f\n", rep.cmi,
                 rep.variance, rep.n0, rep.in_window_to_end ? 1 : 0, rep.trend_slope);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"one-shot quantum state redistribution toolbox"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    std::size_t dim_cap = kDefaultDimCap;
    double tol = 1e-9;
    std::string out_path;
    app.add_option("--seed", seed, "random seed");
    app.add_option("--dim-cap", dim_cap, "amplitude cap for simulations");
    app.add_option("--tol", tol, "numerical tolerance for checks");
    app.add_option("--out", out_path, "output file (default: stdout)");

    auto* entropy = app.add_subcommand("entropy", "one-shot entropic quantities");
    std::string quantity, state_path, sigma_path, a_labels, b_labels = "B", r_labels = "R",
                                                            c_labels = "C";
    double eps = 0.0;
    entropy->add_option("--quantity", quantity)->required();
    entropy->add_option("--state", state_path)->required();
    entropy->add_option("--sigma", sigma_path);
    entropy->add_option("--eps", eps);
    entropy->add_option("--a-labels", a_labels);
    entropy->add_option("--b-labels", b_labels);
    entropy->add_option("--r-labels", r_labels);
    entropy->add_option("--c-labels", c_labels);

    auto* markov = app.add_subcommand("markov-check", "Markov-extension identity and membership");
    std::string m_state, m_sigma;
    double m_eps = 0.0;
    markov->add_option("--state", m_state)->required();
    markov->add_option("--sigma", m_sigma)->required();
    markov->add_option("--eps", m_eps);

    auto* embezzle = app.add_subcommand("embezzle", "embezzlement operator checks");
    std::string e_check, e_params;
    embezzle->add_option("--check", e_check)->required();
    embezzle->add_option("--params", e_params)->required();

    auto* csplit = app.add_subcommand("convex-split", "convex-split mixing check");
    std::string cs_state, cs_blabel = "B", cs_sigma;
    double cs_delta = 0.25;
    csplit->add_option("--state", cs_state)->required();
    csplit->add_option("--b-label", cs_blabel);
    csplit->add_option("--sigma", cs_sigma)->required();
    csplit->add_option("--delta", cs_delta);

    auto* redist = app.add_subcommand("redistribute", "run the redistribution protocol");
    std::string r_instance, r_sigma;
    double r_eps1 = -1.0, r_eps2 = 0.0;
    bool r_zero = false, r_bound = false;
    std::size_t r_nemb = 64;
    redist->add_option("--instance", r_instance)->required();
    redist->add_option("--eps1", r_eps1);
    redist->add_option("--eps2", r_eps2);
    redist->add_option("--sigma", r_sigma);
    redist->add_flag("--zero-cost", r_zero);
    redist->add_flag("--bound-only", r_bound);
    redist->add_option("--n-embezzle", r_nemb);

    auto* bounds = app.add_subcommand("bounds-compare", "cost-bound comparison");
    std::string bc_instance;
    double bc_eps = 0.5;
    bounds->add_option("--instance", bc_instance)->required();
    bounds->add_option("--eps", bc_eps);

    auto* sweep = app.add_subcommand("sweep", "asymptotic sweep on a commuting state");
    std::string sw_dist;
    std::size_t sw_nmin = 1, sw_nmax = 20;
    double sw_eps = 0.25;
    sweep->add_option("--dist", sw_dist)->required();
    sweep->add_option("--nmin", sw_nmin);
    sweep->add_option("--nmax", sw_nmax);
    sweep->add_option("--eps", sw_eps);

    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (entropy->parsed())
            return run_entropy(quantity, state_path, sigma_path, eps, a_labels, b_labels, r_labels,
                               c_labels, out_path);
        if (markov->parsed()) return run_markov_check(m_state, m_sigma, m_eps, tol, out_path);
        if (embezzle->parsed()) return run_embezzle(e_check, e_params, out_path);
        if (csplit->parsed())
            return run_convex_split(cs_state, cs_blabel, cs_sigma, cs_delta, dim_cap, out_path);
        if (redist->parsed())
            return run_redistribute(r_instance, seed, r_eps1, r_eps2, r_sigma, r_zero, r_bound,
                                    r_nemb, dim_cap, out_path);
        if (bounds->parsed()) return run_bounds_compare(bc_instance, seed, bc_eps, out_path);
        if (sweep->parsed()) return run_sweep(sw_dist, sw_nmin, sw_nmax, sw_eps, out_path);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.error_class());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
