#include "netwatch/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "netwatch/calib.hpp"
#include "netwatch/rng.hpp"

namespace netwatch::commands {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

fs::path ensure_outdir(const config::RunConfig& cfg) {
    fs::path dir(cfg.io.output_dir.empty() ? "." : cfg.io.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) throw IoError("short write on " + path.string());
}

void write_json_file(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

void write_echo(const fs::path& dir, const config::RunConfig& cfg) {
    write_file(dir / "resolved_config.json", cfg.to_json_text());
}

graph::IngestResult ingest_input(const config::RunConfig& cfg) {
    if (cfg.io.input.empty()) throw ConfigError("io.input is required for this command");
    return graph::from_edge_list(graph::read_edge_list_file(cfg.io.input));
}

void write_node_map(const fs::path& dir, const graph::IngestResult& in) {
    write_json_file(dir / "node_map.json", json{{"node_ids", in.node_ids},
                                                {"dropped_self_loops", in.dropped_self_loops},
                                                {"duplicate_records", in.duplicate_records}});
}

std::string estimates_csv(const std::vector<tergm::CharEstimate>& estimates,
                          const std::vector<std::string>& names) {
    std::string out = "t";
    for (const auto& n : names) out += "," + n;
    out += "\n";
    for (const auto& e : estimates) {
        out += std::to_string(e.t);
        for (Eigen::Index i = 0; i < e.values.size(); ++i) out += "," + format_double(e.values[i]);
        out += "\n";
    }
    return out;
}

json chart_block(const config::RunConfig& cfg) {
    return json{{"type", cfg.chart.type}, {"param", cfg.chart.param}};
}

json vector_block(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

// external ids for generated nodes: "n00".."n99" style, width from the order
std::vector<std::string> generated_node_ids(int n_nodes) {
    std::size_t width = std::to_string(n_nodes - 1).size();
    std::vector<std::string> ids(n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
        std::string num = std::to_string(i);
        ids[i] = "n" + std::string(width - num.size(), '0') + num;
    }
    return ids;
}

double read_ucl_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open control-limit file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("monitor.ucl_from: " + path + " is not valid JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("ucl") || !j.at("ucl").is_number()) {
        throw ConfigError("monitor.ucl_from: no numeric 'ucl' key in " + path);
    }
    double ucl = j.at("ucl").get<double>();
    if (!(ucl >= 0.0)) throw ConfigError("monitor.ucl_from: 'ucl' must be nonnegative");
    return ucl;
}

// chart pass over an estimate stream; one row per estimate
struct TraceRow {
    std::int64_t t = 0;
    double statistic = 0.0;
    bool signal = false;
};

std::vector<TraceRow> run_chart(const calib::ChartCfg& chart, const charts::ChartTarget& target,
                                const std::vector<tergm::CharEstimate>& estimates, double ucl,
                                bool reset_on_signal) {
    std::vector<TraceRow> rows;
    rows.reserve(estimates.size());
    const int p = static_cast<int>(target.p());
    if (chart.kind == charts::ChartKind::Mcusum) {
        charts::McusumState state(p, chart.param);
        for (const auto& e : estimates) {
            auto out = charts::mcusum_step(state, e.values, target, ucl, reset_on_signal);
            rows.push_back({e.t, out.statistic, out.signal});
        }
    } else {
        charts::MewmaState state(p, chart.param);
        for (const auto& e : estimates) {
            auto out = charts::mewma_step(state, e.values, target, ucl, reset_on_signal);
            rows.push_back({e.t, out.statistic, out.signal});
        }
    }
    return rows;
}

} // namespace

json cmd_generate(const config::RunConfig& cfg) {
    if (cfg.generator.length < 1) throw ConfigError("generator.length must be at least 1");
    simgen::GenConfig gen = cfg.gen_config();
    auto anomaly = cfg.anomaly_spec();
    if (anomaly) anomaly->validate(cfg.generator.length);

    graph::GraphSeries series = simgen::generate_series(gen, cfg.generator.length, anomaly);

    fs::path dir = ensure_outdir(cfg);
    write_file(dir / "series.csv", graph::to_edge_list(series, generated_node_ids(gen.n_nodes)));

    std::vector<std::int64_t> edges;
    edges.reserve(series.length());
    double total = 0.0;
    for (std::size_t i = 0; i < series.length(); ++i) {
        edges.push_back(series.at_offset(i).edge_count());
        total += static_cast<double>(edges.back());
    }
    json expected = nullptr;
    try {
        auto pi = simgen::stationary_distribution(gen.m);
        expected = pi.second * static_cast<double>(gen.n_nodes) * (gen.n_nodes - 1);
    } catch (const NoUniqueStationary&) {
        // absorbing dynamics: the long-run density depends on the start state
    }
    json summary{{"command", "generate"},
                 {"length", cfg.generator.length},
                 {"n_nodes", gen.n_nodes},
                 {"seed", cfg.seed},
                 {"anomaly", cfg.anomaly.kind},
                 {"mean_edges", total / static_cast<double>(series.length())},
                 {"expected_edges", expected},
                 {"edges", edges}};
    write_json_file(dir / "summary.json", summary);
    write_echo(dir, cfg);
    return summary;
}

json cmd_fit(const config::RunConfig& cfg) {
    calib::PipelineCfg pipe = cfg.pipeline_cfg();
    graph::IngestResult in = ingest_input(cfg);

    auto estimates = tergm::estimate_series(in.series, pipe.terms, pipe.z, pipe.v, pipe.kind,
                                            static_cast<int>(cfg.pipeline.stride));

    fs::path dir = ensure_outdir(cfg);
    auto names = pipe.terms.names();
    write_file(dir / "estimates.csv", estimates_csv(estimates, names));

    json fit{{"command", "fit"},
             {"input", cfg.io.input},
             {"estimator", cfg.pipeline.estimator},
             {"terms", names},
             {"z", pipe.z},
             {"v", pipe.v},
             {"stride", cfg.pipeline.stride},
             {"series_length", in.series.length()},
             {"n_nodes", in.series.order()},
             {"n_estimates", estimates.size()},
             {"t_first", estimates.front().t},
             {"t_last", estimates.back().t}};
    write_json_file(dir / "fit.json", fit);
    write_node_map(dir, in);
    write_echo(dir, cfg);
    return fit;
}

json cmd_calibrate(const config::RunConfig& cfg) {
    cfg.check_calibration();
    calib::PipelineCfg pipe = cfg.pipeline_cfg();
    calib::ChartCfg chart = cfg.chart_cfg();
    simgen::GenConfig gen = cfg.gen_config();

    calib::PhaseISummary phase1 = calib::phase1_from_generator(
        gen, pipe, cfg.calibration.phase1_length, derive_seed(cfg.seed, 0));
    calib::ArlSimulator sim(gen, pipe, calib::target_of(phase1), cfg.calibration.replications,
                            cfg.resolved_horizon(), derive_seed(cfg.seed, 1), cfg.jobs);
    calib::CalibResult res = calib::calibrate_ucl(sim, chart, cfg.calibration.arl0,
                                                  cfg.calibration.tolerance);

    fs::path dir = ensure_outdir(cfg);
    json out{{"command", "calibrate"},
             {"chart", chart_block(cfg)},
             {"arl0", cfg.calibration.arl0},
             {"tolerance", cfg.calibration.tolerance},
             {"ucl", res.ucl},
             {"arl_hat", res.arl_hat},
             {"arl_se", res.arl_se},
             {"replications", res.replications},
             {"horizon", cfg.resolved_horizon()},
             {"bracket", json::array({res.bracket_lo, res.bracket_hi})},
             {"bisection_steps", res.bisection_steps},
             {"tolerance_met", res.tolerance_met},
             {"phase1",
              json{{"length", cfg.calibration.phase1_length},
                   {"n_samples", phase1.n_samples},
                   {"center", vector_block(phase1.c_bar)}}},
             {"seed", cfg.seed}};
    write_json_file(dir / "calibration.json", out);
    write_echo(dir, cfg);
    return out;
}

json cmd_monitor(const config::RunConfig& cfg) {
    calib::PipelineCfg pipe = cfg.pipeline_cfg();
    calib::ChartCfg chart = cfg.chart_cfg();
    graph::IngestResult in = ingest_input(cfg);
    const graph::GraphSeries& series = in.series;

    const auto L = static_cast<std::int64_t>(series.length());
    const int need = pipe.z + pipe.v;
    if (L < need + 1) {
        throw ConfigError("io.input series has " + std::to_string(L) +
                          " graphs; monitoring needs at least z+v+1 = " + std::to_string(need + 1));
    }
    const std::int64_t span = cfg.monitor.phase1_length > 0 ? cfg.monitor.phase1_length : L / 2;
    if (span < need + 1) {
        throw ConfigError("monitor.phase1_length " + std::to_string(span) +
                          " leaves fewer than two baseline estimates (need at least z+v+1 = " +
                          std::to_string(need + 1) + ")");
    }
    if (span >= L) {
        throw ConfigError("monitor.phase1_length " + std::to_string(span) +
                          " must leave at least one graph to monitor (series has " +
                          std::to_string(L) + ")");
    }

    // every estimable time point, stride 1: the trace always has L-z-v+1 rows
    auto estimates = tergm::estimate_series(series, pipe.terms, pipe.z, pipe.v, pipe.kind, 1);
    const std::int64_t span_end = series.start_index() + span - 1;

    std::vector<tergm::CharEstimate> baseline;
    for (const auto& e : estimates) {
        if (e.t <= span_end) baseline.push_back(e);
    }
    calib::PhaseISummary phase1 = calib::phase1_summary(baseline);
    charts::ChartTarget target = calib::target_of(phase1);

    double ucl = 0.0;
    std::string ucl_source;
    if (!cfg.monitor.ucl_from.empty()) {
        ucl = read_ucl_file(cfg.monitor.ucl_from);
        ucl_source = cfg.monitor.ucl_from;
    } else {
        if (!(cfg.chart.ucl >= 0.0)) throw ConfigError("chart.ucl must be nonnegative");
        ucl = cfg.chart.ucl;
        ucl_source = "chart.ucl";
    }

    auto rows = run_chart(chart, target, estimates, ucl, cfg.chart.reset_on_signal);

    std::vector<std::int64_t> signal_times;
    json first_after = nullptr;
    for (const auto& r : rows) {
        if (!r.signal) continue;
        signal_times.push_back(r.t);
        if (first_after.is_null() && r.t > span_end) first_after = r.t;
    }

    std::string trace = "t,statistic,ucl,signal\n";
    for (const auto& r : rows) {
        trace += std::to_string(r.t) + "," + format_double(r.statistic) + "," +
                 format_double(ucl) + "," + (r.signal ? "1" : "0") + "\n";
    }

    fs::path dir = ensure_outdir(cfg);
    auto names = pipe.terms.names();
    write_file(dir / "trace.csv", trace);
    write_file(dir / "estimates.csv", estimates_csv(estimates, names));

    json out{{"command", "monitor"},
             {"input", cfg.io.input},
             {"estimator", cfg.pipeline.estimator},
             {"terms", names},
             {"z", pipe.z},
             {"v", pipe.v},
             {"chart", chart_block(cfg)},
             {"ucl", ucl},
             {"ucl_source", ucl_source},
             {"reset_on_signal", cfg.chart.reset_on_signal},
             {"series_length", L},
             {"n_nodes", series.order()},
             {"n_steps", rows.size()},
             {"t_first", rows.front().t},
             {"t_last", rows.back().t},
             {"phase1",
              json{{"length", span},
                   {"span_end", span_end},
                   {"n_estimates", baseline.size()},
                   {"center", vector_block(phase1.c_bar)}}},
             {"signal_times", signal_times},
             {"first_signal_after_phase1", first_after}};
    write_json_file(dir / "monitor.json", out);
    write_node_map(dir, in);
    write_echo(dir, cfg);
    return out;
}

json cmd_evaluate_ced(const config::RunConfig& cfg) {
    cfg.check_calibration();
    calib::PipelineCfg pipe = cfg.pipeline_cfg();
    calib::ChartCfg chart = cfg.chart_cfg();
    simgen::GenConfig gen = cfg.gen_config();
    auto anomaly = cfg.anomaly_spec();
    const std::int64_t tau = cfg.anomaly.tau;
    if (tau < 2) {
        throw ConfigError("anomaly.tau must be at least 2 so a pre-change span exists "
                          "(control runs included)");
    }

    calib::PhaseISummary phase1 = calib::phase1_from_generator(
        gen, pipe, cfg.calibration.phase1_length, derive_seed(cfg.seed, 0));
    charts::ChartTarget target = calib::target_of(phase1);

    double ucl = 0.0;
    std::string ucl_source;
    json calibration = nullptr;
    if (cfg.chart.ucl > 0.0) {
        ucl = cfg.chart.ucl;
        ucl_source = "chart.ucl";
    } else {
        calib::ArlSimulator sim(gen, pipe, target, cfg.calibration.replications,
                                cfg.resolved_horizon(), derive_seed(cfg.seed, 1), cfg.jobs);
        calib::CalibResult res = calib::calibrate_ucl(sim, chart, cfg.calibration.arl0,
                                                      cfg.calibration.tolerance);
        ucl = res.ucl;
        ucl_source = "calibrated";
        calibration = json{{"arl0", cfg.calibration.arl0},
                           {"tolerance", cfg.calibration.tolerance},
                           {"arl_hat", res.arl_hat},
                           {"arl_se", res.arl_se},
                           {"bisection_steps", res.bisection_steps},
                           {"tolerance_met", res.tolerance_met}};
    }

    json anomaly_block{{"kind", anomaly ? cfg.anomaly.kind : std::string("control")},
                       {"tau", tau}};
    if (anomaly) {
        switch (anomaly->kind) {
            case simgen::AnomalySpec::Kind::A: anomaly_block["m1"] = cfg.anomaly.m1; break;
            case simgen::AnomalySpec::Kind::B: anomaly_block["phi1"] = cfg.anomaly.phi1; break;
            case simgen::AnomalySpec::Kind::C: anomaly_block["zeta"] = cfg.anomaly.zeta; break;
        }
    }

    calib::CedSimulator sim(gen, pipe, anomaly, target, tau, cfg.calibration.replications,
                            cfg.resolved_horizon(), derive_seed(cfg.seed, 2), cfg.jobs);
    calib::CedResult res = sim.evaluate(chart, ucl);

    fs::path dir = ensure_outdir(cfg);
    json out{{"command", "evaluate-ced"},
             {"chart", chart_block(cfg)},
             {"anomaly", anomaly_block},
             {"ucl", ucl},
             {"ucl_source", ucl_source},
             {"calibration", calibration},
             {"ced", res.ced},
             {"se", res.se},
             {"valid_runs", res.valid_runs},
             {"discarded_false_alarm_runs", res.discarded_false_alarm_runs},
             {"censored_runs", res.censored_runs},
             {"replications", cfg.calibration.replications},
             {"horizon", cfg.resolved_horizon()},
             {"seed", cfg.seed}};
    write_json_file(dir / "ced.json", out);
    write_echo(dir, cfg);
    return out;
}

json cmd_gof(const config::RunConfig& cfg) {
    if (cfg.gof.n_sims < 1) throw ConfigError("gof.n_sims must be at least 1");
    if (cfg.gof.sweeps < 1) throw ConfigError("gof.sweeps must be at least 1");
    calib::PipelineCfg pipe = cfg.pipeline_cfg();
    graph::IngestResult in = ingest_input(cfg);

    tergm::TergmFit fit = tergm::mple_fit(in.series, pipe.terms, pipe.v);
    Rng rng(cfg.seed);
    tergm::GofReport report = tergm::gof_summary(fit, pipe.terms, in.series, cfg.gof.n_sims, rng,
                                                 cfg.gof.sweeps, cfg.jobs);

    auto names = pipe.terms.names();
    json theta = json::object();
    for (std::size_t i = 0; i < names.size(); ++i) theta[names[i]] = fit.theta[static_cast<Eigen::Index>(i)];

    fs::path dir = ensure_outdir(cfg);
    json out{{"command", "gof"},
             {"input", cfg.io.input},
             {"terms", names},
             {"fit",
              json{{"theta", theta},
                   {"converged", fit.converged},
                   {"iterations", fit.iterations},
                   {"pooled_dyads", fit.pooled_dyads}}},
             {"n_sims", cfg.gof.n_sims},
             {"sweeps", cfg.gof.sweeps},
             {"coverage", report.coverage()},
             {"report", json::parse(report.to_json())},
             {"seed", cfg.seed}};
    write_json_file(dir / "gof.json", out);
    write_node_map(dir, in);
    write_echo(dir, cfg);
    return out;
}

} // namespace netwatch::commands
