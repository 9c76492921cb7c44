#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "netwatch/commands.hpp"

namespace {

using netwatch::config::RunConfig;

/* Every subcommand accepts the full flag set; flags override the loaded (or
 * default) config only when actually given, so a rerun on the echoed
 * resolved_config.json reproduces the run bit for bit. */
struct Flags {
    std::string config;
    std::uint64_t seed = 0;
    int jobs = 0;
    std::string output_dir;
    std::string input;
    std::int64_t length = 0;
    int n_nodes = 0;
    double phi = 0.0;
    std::string terms;
    int z = 0;
    int v = 0;
    std::string estimator;
    std::int64_t stride = 0;
    std::string chart;
    double param = 0.0;
    double ucl = 0.0;
    bool reset_on_signal = true;
    double arl0 = 0.0;
    int replications = 0;
    double tolerance = 0.0;
    std::int64_t horizon = 0;
    std::int64_t phase1_length = 0;
    std::string anomaly;
    std::int64_t tau = 0;
    std::vector<double> m1;
    double phi1 = 0.0;
    double zeta = 0.0;
    std::int64_t phase1_span = 0;
    std::string ucl_from;
    int n_sims = 0;
    int sweeps = 0;
};

void add_flags(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "JSON run configuration to start from");
    sub->add_option("--seed", f.seed, "RNG seed (beats config and NETWATCH_SEED)");
    sub->add_option("--jobs", f.jobs, "worker threads; 0 = available parallelism");
    sub->add_option("--output-dir", f.output_dir, "directory for artifacts");
    sub->add_option("--input", f.input, "edge-list CSV to ingest (t,src,dst)");
    sub->add_option("--length", f.length, "number of graphs to simulate");
    sub->add_option("--n-nodes", f.n_nodes, "network order");
    sub->add_option("--phi", f.phi, "fraction of cells refreshed per step");
    sub->add_option("--terms", f.terms, "comma-separated model statistics");
    sub->add_option("--z", f.z, "window length in graphs");
    sub->add_option("--v", f.v, "Markov memory (must be 1)");
    sub->add_option("--estimator", f.estimator, "theta_hat or sbar");
    sub->add_option("--stride", f.stride, "window spacing (fit only)");
    sub->add_option("--chart", f.chart, "mcusum or mewma");
    sub->add_option("--param", f.param, "chart tuning: allowance k or weight lambda");
    sub->add_option("--ucl", f.ucl, "upper control limit; 0 lets evaluate-ced calibrate one");
    sub->add_flag("--reset-on-signal,!--no-reset-on-signal", f.reset_on_signal,
                  "restart the chart after each alarm");
    sub->add_option("--arl0", f.arl0, "target in-control average run length");
    sub->add_option("--replications", f.replications, "Monte-Carlo sample size");
    sub->add_option("--tolerance", f.tolerance, "relative ARL tolerance for calibration");
    sub->add_option("--horizon", f.horizon, "censoring horizon in steps; 0 = 20*arl0");
    sub->add_option("--phase1-length", f.phase1_length,
                    "simulated graphs behind the baseline target");
    sub->add_option("--anomaly", f.anomaly, "anomaly kind: A, B or C (empty = control)");
    sub->add_option("--tau", f.tau, "first anomalous time");
    sub->add_option("--m1", f.m1, "anomalous tie dynamics: m00 m01 m10 m11")->expected(4);
    sub->add_option("--phi1", f.phi1, "anomalous refresh fraction");
    sub->add_option("--zeta", f.zeta, "fraction of asymmetric dyads mutualized at tau");
    sub->add_option("--phase1-span", f.phase1_span,
                    "leading graphs of the input used as baseline (monitor)");
    sub->add_option("--ucl-from", f.ucl_from, "calibration JSON supplying the control limit");
    sub->add_option("--n-sims", f.n_sims, "simulated draws per transition (gof)");
    sub->add_option("--sweeps", f.sweeps, "Gibbs sweeps per simulated draw (gof)");
}

std::vector<std::string> split_terms(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::uint64_t parse_env_seed(const char* text) {
    std::string s(text);
    std::size_t pos = 0;
    std::uint64_t value = 0;
    bool ok = !s.empty() && s[0] != '-';
    if (ok) {
        try {
            value = std::stoull(s, &pos);
            ok = pos == s.size();
        } catch (const std::exception&) {
            ok = false;
        }
    }
    if (!ok) throw netwatch::ConfigError("NETWATCH_SEED is not an unsigned integer: " + s);
    return value;
}

RunConfig build_config(const CLI::App* sub, const Flags& f) {
    RunConfig cfg = f.config.empty() ? RunConfig{} : RunConfig::load(f.config);

    if (sub->count("--seed") > 0) {
        cfg.seed = f.seed;
        cfg.seed_explicit = true;
    } else if (!cfg.seed_explicit) {
        if (const char* env = std::getenv("NETWATCH_SEED")) {
            cfg.seed = parse_env_seed(env);
            cfg.seed_explicit = true;
        }
    }
    if (sub->count("--jobs") > 0) cfg.jobs = f.jobs;
    if (cfg.jobs < 0) throw netwatch::ConfigError("--jobs must be nonnegative");

    if (sub->count("--output-dir") > 0) cfg.io.output_dir = f.output_dir;
    if (sub->count("--input") > 0) cfg.io.input = f.input;
    if (sub->count("--length") > 0) cfg.generator.length = f.length;
    if (sub->count("--n-nodes") > 0) cfg.generator.n_nodes = f.n_nodes;
    if (sub->count("--phi") > 0) cfg.generator.phi = f.phi;
    if (sub->count("--terms") > 0) cfg.pipeline.terms = split_terms(f.terms);
    if (sub->count("--z") > 0) cfg.pipeline.z = f.z;
    if (sub->count("--v") > 0) cfg.pipeline.v = f.v;
    if (sub->count("--estimator") > 0) cfg.pipeline.estimator = f.estimator;
    if (sub->count("--stride") > 0) cfg.pipeline.stride = f.stride;
    if (sub->count("--chart") > 0) cfg.chart.type = f.chart;
    if (sub->count("--param") > 0) cfg.chart.param = f.param;
    if (sub->count("--ucl") > 0) cfg.chart.ucl = f.ucl;
    if (sub->count("--reset-on-signal") > 0) cfg.chart.reset_on_signal = f.reset_on_signal;
    if (sub->count("--arl0") > 0) cfg.calibration.arl0 = f.arl0;
    if (sub->count("--replications") > 0) cfg.calibration.replications = f.replications;
    if (sub->count("--tolerance") > 0) cfg.calibration.tolerance = f.tolerance;
    if (sub->count("--horizon") > 0) cfg.calibration.horizon = f.horizon;
    if (sub->count("--phase1-length") > 0) cfg.calibration.phase1_length = f.phase1_length;
    if (sub->count("--anomaly") > 0) cfg.anomaly.kind = f.anomaly;
    if (sub->count("--tau") > 0) cfg.anomaly.tau = f.tau;
    if (sub->count("--m1") > 0) std::copy(f.m1.begin(), f.m1.end(), cfg.anomaly.m1.begin());
    if (sub->count("--phi1") > 0) cfg.anomaly.phi1 = f.phi1;
    if (sub->count("--zeta") > 0) cfg.anomaly.zeta = f.zeta;
    if (sub->count("--phase1-span") > 0) cfg.monitor.phase1_length = f.phase1_span;
    if (sub->count("--ucl-from") > 0) cfg.monitor.ucl_from = f.ucl_from;
    if (sub->count("--n-sims") > 0) cfg.gof.n_sims = f.n_sims;
    if (sub->count("--sweeps") > 0) cfg.gof.sweeps = f.sweeps;
    return cfg;
}

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

void print_summary(const std::string& name, const nlohmann::json& out, const RunConfig& cfg) {
    const std::string dir = cfg.io.output_dir;
    if (name == "generate") {
        std::printf("generate: %lld graphs on %d nodes, mean edges %s -> %s/series.csv\n",
                    static_cast<long long>(cfg.generator.length), cfg.generator.n_nodes,
                    num(out.at("mean_edges").get<double>()).c_str(), dir.c_str());
    } else if (name == "fit") {
        std::printf("fit: %lld estimates at t %lld..%lld -> %s/estimates.csv\n",
                    out.at("n_estimates").get<long long>(), out.at("t_first").get<long long>(),
                    out.at("t_last").get<long long>(), dir.c_str());
    } else if (name == "calibrate") {
        std::printf("calibrate: ucl %s gives arl %s (se %s, %s) -> %s/calibration.json\n",
                    num(out.at("ucl").get<double>()).c_str(),
                    num(out.at("arl_hat").get<double>()).c_str(),
                    num(out.at("arl_se").get<double>()).c_str(),
                    out.at("tolerance_met").get<bool>() ? "within tolerance" : "tolerance missed",
                    dir.c_str());
    } else if (name == "monitor") {
        const auto& first = out.at("first_signal_after_phase1");
        std::string when = first.is_null() ? std::string("none after baseline")
                                           : "first after baseline at t " +
                                                 std::to_string(first.get<long long>());
        std::printf("monitor: %zu signals over %lld steps (%s) -> %s/monitor.json\n",
                    out.at("signal_times").size(), out.at("n_steps").get<long long>(),
                    when.c_str(), dir.c_str());
    } else if (name == "evaluate-ced") {
        std::printf("evaluate-ced: ced %s (se %s, %d valid runs, ucl %s) -> %s/ced.json\n",
                    num(out.at("ced").get<double>()).c_str(),
                    num(out.at("se").get<double>()).c_str(), out.at("valid_runs").get<int>(),
                    num(out.at("ucl").get<double>()).c_str(), dir.c_str());
    } else if (name == "gof") {
        std::printf("gof: coverage %s over %zu families -> %s/gof.json\n",
                    num(out.at("coverage").get<double>()).c_str(),
                    out.at("report").at("families").size(), dir.c_str());
    }
}

int dispatch(const std::string& name, const RunConfig& cfg) {
    nlohmann::json out;
    if (name == "generate") out = netwatch::commands::cmd_generate(cfg);
    else if (name == "fit") out = netwatch::commands::cmd_fit(cfg);
    else if (name == "calibrate") out = netwatch::commands::cmd_calibrate(cfg);
    else if (name == "monitor") out = netwatch::commands::cmd_monitor(cfg);
    else if (name == "evaluate-ced") out = netwatch::commands::cmd_evaluate_ced(cfg);
    else if (name == "gof") out = netwatch::commands::cmd_gof(cfg);
    print_summary(name, out, cfg);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"surveillance of dynamic networks: simulate, estimate, calibrate, monitor"};
    app.require_subcommand(1);

    Flags f;
    std::vector<CLI::App*> subs = {
        app.add_subcommand("generate", "simulate a graph series and write it as an edge list"),
        app.add_subcommand("fit", "roll the window estimator over an ingested series"),
        app.add_subcommand("calibrate", "find the control limit matching a target in-control ARL"),
        app.add_subcommand("monitor", "run a control chart over an ingested series"),
        app.add_subcommand("evaluate-ced", "expected detection delay for a change at tau"),
        app.add_subcommand("gof", "whole-series fit plus simulation-based adequacy check"),
    };
    for (CLI::App* s : subs) add_flags(s, f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const CLI::App* sub = app.get_subcommands().front();
    try {
        return dispatch(sub->get_name(), build_config(sub, f));
    } catch (const netwatch::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const netwatch::InvalidAnomaly& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const netwatch::IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return 4;
    } catch (const netwatch::IngestError& e) {
        std::fprintf(stderr, "ingest error: %s\n", e.what());
        return 4;
    } catch (const netwatch::EmptyIngest& e) {
        std::fprintf(stderr, "ingest error: %s\n", e.what());
        return 4;
    } catch (const netwatch::NonContiguousSeries& e) {
        std::fprintf(stderr, "ingest error: %s\n", e.what());
        return 4;
    } catch (const netwatch::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 1;
    }
}
