#include "qsr/serialize.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace qsr {

using nlohmann::json;

namespace {

json shape_to_json(const RegisterShape& shape) {
    json arr = json::array();
    for (const auto& r : shape.regs) arr.push_back(json::array({r.label, r.dim}));
    return arr;
}

RegisterShape shape_from_json(const json& arr) {
    RegisterShape shape;
    for (const auto& e : arr) shape.regs.push_back({e.at(0).get<std::string>(), e.at(1).get<std::size_t>()});
    shape.validate();
    return shape;
}

json amplitudes_to_json(const std::vector<cx>& a) {
    json re = json::array(), im = json::array();
    for (const cx& v : a) {
        re.push_back(v.real());
        im.push_back(v.imag());
    }
    return json{{"re", re}, {"im", im}};
}

std::vector<cx> amplitudes_from_json(const json& j) {
    const json& re = j.at("re");
    const json& im = j.at("im");
    if (re.size() != im.size()) throw IoError("state json: re/im length mismatch");
    std::vector<cx> a(re.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = cx(re[i].get<double>(), im[i].get<double>());
    return a;
}

}  // namespace

std::string state_to_json(const DensityOperator& rho) {
    json j = amplitudes_to_json(rho.matrix.data());
    j["schema"] = "qsr-state-1";
    j["kind"] = "density";
    j["shape"] = shape_to_json(rho.shape);
    if (rho.subnormalized) j["subnormalized"] = true;
    return j.dump();
}

std::string state_to_json(const PureState& psi) {
    json j = amplitudes_to_json(psi.amplitudes);
    j["schema"] = "qsr-state-1";
    j["kind"] = "pure";
    j["shape"] = shape_to_json(psi.shape);
    return j.dump();
}

DensityOperator density_from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.at("kind") != "density") throw IoError("expected a density-operator json");
    RegisterShape shape = shape_from_json(j.at("shape"));
    std::vector<cx> a = amplitudes_from_json(j);
    std::size_t d = shape.total_dim();
    if (a.size() != d * d) throw IoError("density json: entry count mismatch");
    ComplexMatrix m(d, d);
    m.data() = std::move(a);
    bool sub = j.value("subnormalized", false);
    return DensityOperator::checked(std::move(m), std::move(shape), sub);
}

PureState pure_from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.at("kind") != "pure") throw IoError("expected a pure-state json");
    RegisterShape shape = shape_from_json(j.at("shape"));
    std::vector<cx> a = amplitudes_from_json(j);
    return PureState::checked(std::move(a), std::move(shape));
}

std::string decomposition_to_json(const MarkovDecomposition& d) {
    json j;
    j["schema"] = "qsr-markov-1";
    j["dim_r"] = d.dim_r;
    j["dim_c"] = d.dim_c;
    json blocks = json::array();
    for (const MarkovBlock& b : d.blocks) {
        json e;
        e["p"] = b.p;
        e["dim_br"] = b.dim_br;
        e["dim_bc"] = b.dim_bc;
        e["rho_r_br"] = json::parse(state_to_json(b.rho_r_br));
        e["rho_bc_c"] = json::parse(state_to_json(b.rho_bc_c));
        blocks.push_back(std::move(e));
    }
    j["blocks"] = std::move(blocks);
    return j.dump();
}

MarkovDecomposition decomposition_from_json(const std::string& text) {
    json j = json::parse(text);
    MarkovDecomposition d;
    d.dim_r = j.at("dim_r").get<std::size_t>();
    d.dim_c = j.at("dim_c").get<std::size_t>();
    for (const auto& e : j.at("blocks")) {
        MarkovBlock b;
        b.p = e.at("p").get<double>();
        b.dim_br = e.at("dim_br").get<std::size_t>();
        b.dim_bc = e.at("dim_bc").get<std::size_t>();
        b.rho_r_br = density_from_json(e.at("rho_r_br").dump());
        b.rho_bc_c = density_from_json(e.at("rho_bc_c").dump());
        d.blocks.push_back(std::move(b));
    }
    d.validate();
    return d;
}

std::string instance_to_json(const RedistributionInstance& inst) {
    json j;
    j["schema"] = "qsr-instance-1";
    j["psi"] = json::parse(state_to_json(inst.psi));
    j["eps1"] = inst.eps1;
    j["eps2"] = inst.eps2;
    if (inst.psi_prime) j["psi_prime"] = json::parse(state_to_json(*inst.psi_prime));
    if (inst.sigma) j["sigma"] = json::parse(decomposition_to_json(*inst.sigma));
    return j.dump();
}

RedistributionInstance instance_from_json(const std::string& text) {
    json j = json::parse(text);
    RedistributionInstance inst;
    inst.psi = pure_from_json(j.at("psi").dump());
    inst.eps1 = j.value("eps1", 0.0);
    inst.eps2 = j.value("eps2", 0.5);
    if (j.contains("psi_prime")) inst.psi_prime = density_from_json(j.at("psi_prime").dump());
    if (j.contains("sigma")) inst.sigma = decomposition_from_json(j.at("sigma").dump());
    inst.validate();
    return inst;
}

std::string transcript_to_json(const ProtocolTranscript& t) {
    json j;
    j["schema"] = "qsr-transcript-1";
    json steps = json::array();
    for (const auto& s : t.steps)
        steps.push_back(json{{"name", s.name}, {"owner", s.owner}, {"registers", s.registers}});
    j["steps"] = std::move(steps);
    j["cost"] = json{{"qubits_sent", t.cost.qubits_sent},
                     {"sd_classical_bits", t.cost.sd_classical_bits},
                     {"ebits_consumed", t.cost.ebits_consumed}};
    j["message_register"] = t.message_register;
    j["achieved_p"] = t.achieved_p;
    j["measured_p"] = t.measured_p;
    j["prep_bound"] = t.prep_bound;
    j["error_budget"] = t.error_budget;
    j["bound_bits"] = t.bound_bits;
    j["m"] = t.m;
    j["b"] = t.b;
    j["beta_bits"] = t.beta_bits;
    j["dh_bits"] = t.dh_bits;
    j["delta1"] = t.delta1;
    j["pbd_success"] = t.pbd_success;
    j["rationalize_residual"] = t.rationalize_residual;
    j["notes"] = t.notes;
    return j.dump(2);
}

std::string report_to_json(const EntropyReport& r) {
    json j;
    j["schema"] = "qsr-entropy-1";
    j["quantity"] = r.quantity;
    if (r.value.finite)
        j["value_bits"] = r.value.value;
    else
        j["value_bits"] = "infinite";
    if (r.witness) {
        json w = json::array();
        json re = json::array(), im = json::array();
        for (const cx& v : r.witness->data()) {
            re.push_back(v.real());
            im.push_back(v.imag());
        }
        j["witness"] = json{{"rows", r.witness->rows()}, {"re", re}, {"im", im}};
    }
    j["iterations"] = r.iterations;
    j["duality_gap"] = r.duality_gap;
    return j.dump(2);
}

std::string load_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace qsr
