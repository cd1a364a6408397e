#pragma once

#include <string>

#include "qsr/entropies.hpp"
#include "qsr/harness.hpp"
#include "qsr/markov.hpp"
#include "qsr/protocol.hpp"

namespace qsr {

// JSON schema: {"schema": "...", "shape": [[label, dim]...], "re": [...], "im": [...]}
// Doubles are emitted in shortest round-trip decimal form, so load(dump(x))
// reproduces x bit-exactly.
std::string state_to_json(const DensityOperator& rho);
std::string state_to_json(const PureState& psi);
DensityOperator density_from_json(const std::string& text);
PureState pure_from_json(const std::string& text);

std::string decomposition_to_json(const MarkovDecomposition& d);
MarkovDecomposition decomposition_from_json(const std::string& text);

std::string instance_to_json(const RedistributionInstance& inst);
RedistributionInstance instance_from_json(const std::string& text);

std::string transcript_to_json(const ProtocolTranscript& t);
std::string report_to_json(const EntropyReport& r);

std::string load_file(const std::string& path);

}  // namespace qsr
