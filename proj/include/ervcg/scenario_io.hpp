#pragma once

#include "ervcg/analysis.hpp"
#include "ervcg/errors.hpp"
#include "ervcg/scoring.hpp"

#include <json.hpp>

#include <string>

namespace ervcg {

using Json = nlohmann::json;

// Scenario documents and report envelopes. One JSON document format is used
// for scenarios, mechanism descriptors and reports; CSV is reserved for
// tabulated grids and sweep output. Parsing is strict: unknown fields and
// out-of-range values raise ValidationError with the offending field path.

// {kind, k?, L, H}; the tabulated kind carries its (v,a,p) grid as CSV text,
// and an unbounded H is encoded by omitting the field.
Json mechanism_to_json(const Mechanism& mech);
Mechanism mechanism_from_json(const Json& doc, const std::string& path);

std::string tabulated_csv(const Mechanism& mech);

Scenario scenario_from_json(const Json& doc);
Json scenario_to_json(const Scenario& scenario);

Scenario load_scenario(const std::string& file_path);

// FNV-1a over the canonical (sorted-key, compact) scenario dump.
std::string scenario_hash(const Json& scenario_doc);

// Report envelope: a deterministic body (input echo + results) plus a meta
// block carrying tool version, elapsed time and the input hash. The
// determinism contract covers the body only. The echo slot is named after
// the input kind ("scenario", "mechanism", "rule").
Json report_envelope(const std::string& slot, const Json& echo, const Json& results,
                     double elapsed_ms);
Json report_envelope(const Json& scenario_doc, const Json& results, double elapsed_ms);
Json error_record(const std::string& type, const std::string& message);

}  // namespace ervcg
