#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netwatch/calib.hpp"
#include "netwatch/errors.hpp"
#include "netwatch/simgen.hpp"

namespace netwatch::config {

/* Declarative run description: one JSON file with a flat table per section.
 * Every field has a default, every CLI flag overrides the file, and each
 * command echoes the fully resolved struct back out so that re-running on
 * the echo reproduces the outputs byte for byte. */

struct GeneratorSection {
    int n_nodes = 100;
    double phi = 0.01;
    std::array<double, 4> m = {0.9, 0.1, 0.4, 0.6}; // row-major 2x2 tie dynamics
    std::vector<double> base_coeffs;                // empty -> library default
    int base_sweeps = 50;
    int burn_in = 1000;
    std::int64_t length = 100;
};

struct PipelineSection {
    std::vector<std::string> terms = {"edges", "triangles", "asymmetric", "stability"};
    int z = 7;
    int v = 1;
    std::string estimator = "theta_hat"; // or "sbar"
    std::int64_t stride = 1;
};

struct ChartSection {
    std::string type = "mewma"; // or "mcusum"
    double param = 0.5;         // smoothing weight lambda or allowance k
    double ucl = 0.0;
    bool reset_on_signal = true;
};

struct CalibrationSection {
    double arl0 = 50.0;
    int replications = 500;
    double tolerance = 0.05;
    std::int64_t horizon = 0; // 0 -> 20 * arl0
    std::int64_t phase1_length = 500;
};

struct AnomalySection {
    std::string kind; // "", "A", "B" or "C"
    std::int64_t tau = 0;
    std::array<double, 4> m1 = {0.9, 0.1, 0.4, 0.6}; // kind A
    double phi1 = 0.0;                                // kind B
    double zeta = 0.0;                                // kind C
};

struct IoSection {
    std::string input;
    std::string output_dir = "out";
};

struct MonitorSection {
    std::int64_t phase1_length = 0; // leading graphs for the target; 0 -> half the series
    std::string ucl_from;           // calibration JSON to take the limit from
};

struct GofSection {
    int n_sims = 100;
    int sweeps = 30;
};

struct RunConfig {
    GeneratorSection generator;
    PipelineSection pipeline;
    ChartSection chart;
    CalibrationSection calibration;
    AnomalySection anomaly;
    IoSection io;
    MonitorSection monitor;
    GofSection gof;
    std::uint64_t seed = 0;
    bool seed_explicit = false; // true once a file, flag or env var named the seed
    int jobs = 0;               // 0 -> available parallelism

    // parse/serialize; unknown keys and bad types raise ConfigError
    static RunConfig from_json_text(const std::string& text);
    static RunConfig load(const std::string& path);
    std::string to_json_text() const; // resolved echo, 2-space indent + newline

    /* Typed, validated views.  All validation failures are ConfigError so
     * the front end maps them to the configuration exit code. */
    simgen::GenConfig gen_config() const;
    std::optional<simgen::AnomalySpec> anomaly_spec() const; // empty kind -> nullopt
    calib::PipelineCfg pipeline_cfg() const;
    calib::ChartCfg chart_cfg() const;
    void check_calibration() const;
    std::int64_t resolved_horizon() const; // calibration.horizon, 0 -> 20 * arl0
};

} // namespace netwatch::config
