#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "flowgraph/eval_harness.hpp"

namespace flowgraph {

/// Deterministic report content; wall-clock timings are left out.
nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

/// Fit times per cell, kept apart so reports stay byte-stable.
nlohmann::json timings_to_json(const EvalReport& report);

/// Plain-text tables: BA per regime and detector, next-block BA, attack
/// breakdowns, rolling-test rows and warnings, whichever are present.
std::string render_report(const EvalReport& report);
std::string render_timings(const EvalReport& report);

/// One row per (regime, detector, fraction).
void write_rolling_csv(std::ostream& out, const EvalReport& report);

}  // namespace flowgraph
