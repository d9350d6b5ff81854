#pragma once

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "ctrlab/classify.hpp"
#include "ctrlab/sweep.hpp"

namespace ctrlab {

// Infinite or NaN values serialize as null.
nlohmann::json number_or_null(double v);
nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const Matrix& m);  // row-major nested arrays

nlohmann::json to_json(const Candidate& c, bool include_control);
nlohmann::json to_json(const CandidateSet& set, bool include_controls);
nlohmann::json to_json(const MultiplierAnalysis& a);
nlohmann::json to_json(const ExtremalArc& arc, const ControlSystem& system);
// verbosity >= 2 adds matrices (controls, kernel bases).
nlohmann::json to_json(const ClassificationReport& rep, const ControlSystem& system, int verbosity);
nlohmann::json summary_json(const ValueMap& map, const ContinuityDiagnostics& diag);

// Pretty-printed JSON with every floating-point number at 17 significant
// digits, so outputs round-trip and are byte-stable for a given input.
std::string dump_json(const nlohmann::json& j, int indent = 2);

// "inf" for +infinity, otherwise 17 significant digits.
std::string csv_number(double v);

// Columns: interval, t_start, t_end, u1..ud.
void write_control_csv(std::ostream& out, const Control& u);
// Columns: t, x1..xm, p1..pm, u1..ud.
void write_arc_csv(std::ostream& out, const ExtremalArc& arc);
// Columns: x, y, V, label, jump (y empty for one-dimensional maps).
void write_value_map_csv(std::ostream& out, const ValueMap& map);
// Plain matrix dump, one row per line.
void write_matrix_csv(std::ostream& out, const Matrix& m);

}  // namespace ctrlab
