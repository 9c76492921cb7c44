#pragma once

#include <json.hpp>

#include "netwatch/config.hpp"

namespace netwatch::commands {

/* One function per CLI verb.  Each validates the relevant config sections,
 * does the work, writes its artifacts (plus resolved_config.json) under
 * io.output_dir, and returns the primary artifact as JSON so callers and
 * tests can inspect results without re-reading files. */

// simulate a series and write series.csv + summary.json
nlohmann::json cmd_generate(const config::RunConfig& cfg);

// ingest io.input, roll the estimator over it, write estimates.csv + fit.json
nlohmann::json cmd_fit(const config::RunConfig& cfg);

// Monte-Carlo search for the control limit; writes calibration.json
nlohmann::json cmd_calibrate(const config::RunConfig& cfg);

// ingest io.input, build the baseline target from the leading span, run the
// chart over every estimate; writes trace.csv, estimates.csv, monitor.json
nlohmann::json cmd_monitor(const config::RunConfig& cfg);

// conditional expected delay at the configured change point; writes ced.json
nlohmann::json cmd_evaluate_ced(const config::RunConfig& cfg);

// whole-series fit + simulation-based adequacy check; writes gof.json
nlohmann::json cmd_gof(const config::RunConfig& cfg);

} // namespace netwatch::commands
