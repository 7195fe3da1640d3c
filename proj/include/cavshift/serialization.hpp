#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cavshift/config.hpp"
#include "cavshift/oracle_suite.hpp"
#include "cavshift/shift_predictor.hpp"

namespace cavshift {

using Json = nlohmann::ordered_json;

inline constexpr int schema_version = 1;

// Artifact version baked in at configure time (git describe when available).
const char* artifact_version();

Json to_json(cplx z);
cplx cplx_from_json(const Json& j);

Json shape_to_json(const Shape2D& s);
Shape2D shape_from_json(const Json& j);

// Full input digest of a run.
Json config_to_json(const RunConfig& rc);

// Scalar spectral data of a resonance (the mode vector is written separately as CSV).
Json resonance_to_json(const ResonanceRecord& r);
ResonanceRecord resonance_from_json(const Json& j);

Json prediction_to_json(const ShiftPrediction& p);
ShiftPrediction prediction_from_json(const Json& j);

Json convergence_to_json(const ConvergenceStudy& s);

// {schema, schema_version, kind, artifact_version, input, result}
Json make_record(const std::string& kind, const Json& input, const Json& result);

// Deterministic text form: 2-space indent, trailing newline.
std::string dump(const Json& j);

// %.17g
std::string fmt17(double v);

}  // namespace cavshift
