#pragma once

// JSON file formats. Complex entries are [re, im] pairs, matrices row-major.
//   state:   {"dims": [..], "matrix": [[[re, im], ..], ..]}  or  {"dims": [..], "vector": [[re, im], ..]}
//   channel: {"d_in": n, "d_out": m, "kraus": [matrix, ..]}  (optional "in_dims", "out_dims")
//   gate:    {"d_D": n, "d_P": m, "unitary": matrix}  or  {"d_D": n, "d_P": m, "units": [matrix, ..]}
// Structural problems raise ParseError; well-formed data that violates a
// mathematical invariant raises InvariantError (from the type constructors).

#include "qdense/capacity.hpp"
#include "qdense/pqg.hpp"

#include <json.hpp>

#include <filesystem>

namespace qdense::io {

using json = nlohmann::json;

json to_json(const cmat& m);
cmat matrix_from_json(const json& j);
json to_json(const cvec& v);
cvec vector_from_json(const json& j);

json to_json(const DensityMatrix& rho);
json to_json(const PureState& psi);
/// Accepts both the matrix and the vector form.
DensityMatrix state_from_json(const json& j);
PureState pure_state_from_json(const json& j);

json to_json(const QuantumChannel& t);
QuantumChannel channel_from_json(const json& j);

json to_json(const ProgrammableGate& g);
ProgrammableGate gate_from_json(const json& j);

json to_json(const StinespringIsometry& v);
json to_json(const OptConfig& c);
/// Overrides only the keys present in j; unknown keys are a ParseError.
OptConfig config_from_json(const json& j, OptConfig base = {});
json to_json(const OptReport& r);
json to_json(const optimize::EnsembleReport& r);
json to_json(const CapacityResult& r);

json to_json(const UnitaryNet& n, bool with_elements = false);
json to_json(const NetCertificate& c);
json to_json(const OrthogonalityVerdict& v);
json to_json(const OrthogonalitySearch& s);
json to_json(const WitnessReport& w);
json to_json(const ErrorEstimate& e);

/// Reads and parses a JSON file; ParseError on I/O or syntax failure.
json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace qdense::io
