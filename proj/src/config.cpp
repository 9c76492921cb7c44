#include "netwatch/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace netwatch::config {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw ConfigError(what); }

/* Strict section reader: every key must be known and well-typed, so typos in
 * a config file fail loudly instead of silently keeping a default. */
class Section {
  public:
    Section(json j, std::string name) : j_(std::move(j)), name_(std::move(name)) {
        if (!j_.is_object()) bad("section '" + name_ + "' must be a JSON object");
    }

    template <typename T>
    void read(const char* key, T& slot) {
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            slot = it->get<T>();
        } catch (const json::exception&) {
            bad("bad value for '" + name_ + "." + key + "'");
        }
        seen_.push_back(key);
    }

    void read_m(const char* key, std::array<double, 4>& slot) {
        auto it = j_.find(key);
        if (it == j_.end()) return;
        if (!it->is_array() || it->size() != 4) {
            bad("'" + name_ + "." + key + "' must be a 4-entry array [m00,m01,m10,m11]");
        }
        for (std::size_t i = 0; i < 4; ++i) {
            if (!(*it)[i].is_number()) bad("'" + name_ + "." + key + "' entries must be numbers");
            slot[i] = (*it)[i].get<double>();
        }
        seen_.push_back(key);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            bool known = false;
            for (const auto& s : seen_) {
                if (s == it.key()) {
                    known = true;
                    break;
                }
            }
            if (!known) bad("unknown key '" + name_ + "." + it.key() + "'");
        }
    }

  private:
    json j_;
    std::string name_;
    std::vector<std::string> seen_;
};

json section_or_empty(const json& root, const char* key) {
    auto it = root.find(key);
    return it == root.end() ? json::object() : *it;
}

} // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        bad(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) bad("config root must be a JSON object");

    RunConfig cfg;
    static const char* known_sections[] = {"generator", "pipeline", "chart",   "calibration",
                                           "anomaly",   "io",       "monitor", "gof",
                                           "seed",      "jobs"};
    for (auto it = root.begin(); it != root.end(); ++it) {
        bool known = false;
        for (const char* s : known_sections) {
            if (it.key() == s) {
                known = true;
                break;
            }
        }
        if (!known) bad("unknown section '" + it.key() + "'");
    }

    {
        Section s(section_or_empty(root, "generator"), "generator");
        s.read("n_nodes", cfg.generator.n_nodes);
        s.read("phi", cfg.generator.phi);
        s.read_m("m", cfg.generator.m);
        s.read("base_coeffs", cfg.generator.base_coeffs);
        s.read("base_sweeps", cfg.generator.base_sweeps);
        s.read("burn_in", cfg.generator.burn_in);
        s.read("length", cfg.generator.length);
        s.finish();
    }
    {
        Section s(section_or_empty(root, "pipeline"), "pipeline");
        s.read("terms", cfg.pipeline.terms);
        s.read("z", cfg.pipeline.z);
        s.read("v", cfg.pipeline.v);
        s.read("estimator", cfg.pipeline.estimator);
        s.read("stride", cfg.pipeline.stride);
        s.finish();
    }
    {
        Section s(section_or_empty(root, "chart"), "chart");
        s.read("type", cfg.chart.type);
        s.read("param", cfg.chart.param);
        s.read("ucl", cfg.chart.ucl);
        s.read("reset_on_signal", cfg.chart.reset_on_signal);
        s.finish();
    }
    {
        Section s(section_or_empty(root, "calibration"), "calibration");
        s.read("arl0", cfg.calibration.arl0);
        s.read("replications", cfg.calibration.replications);
        s.read("tolerance", cfg.calibration.tolerance);
        s.read("horizon", cfg.calibration.horizon);
        s.read("phase1_length", cfg.calibration.phase1_length);
        s.finish();
    }
    {
        Section s(section_or_empty(root, "anomaly"), "anomaly");
        s.read("kind", cfg.anomaly.kind);
        s.read("tau", cfg.anomaly.tau);
        s.read_m("m1", cfg.anomaly.m1);
        s.read("phi1", cfg.anomaly.phi1);
        s.read("zeta", cfg.anomaly.zeta);
        s.finish();
    }
    {
        Section s(section_or_empty(root, "io"), "io");
        s.read("input", cfg.io.input);
        s.read("output_dir", cfg.io.output_dir);
        s.finish();
    }
    {
        Section s(section_or_empty(root, "monitor"), "monitor");
        s.read("phase1_length", cfg.monitor.phase1_length);
        s.read("ucl_from", cfg.monitor.ucl_from);
        s.finish();
    }
    {
        Section s(section_or_empty(root, "gof"), "gof");
        s.read("n_sims", cfg.gof.n_sims);
        s.read("sweeps", cfg.gof.sweeps);
        s.finish();
    }
    if (root.contains("seed")) {
        try {
            cfg.seed = root.at("seed").get<std::uint64_t>();
        } catch (const json::exception&) {
            bad("'seed' must be a nonnegative integer");
        }
        cfg.seed_explicit = true;
    }
    if (root.contains("jobs")) {
        try {
            cfg.jobs = root.at("jobs").get<int>();
        } catch (const json::exception&) {
            bad("'jobs' must be an integer");
        }
        if (cfg.jobs < 0) bad("'jobs' must be nonnegative (0 = available parallelism)");
    }
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string RunConfig::to_json_text() const {
    json root;
    root["generator"] = {{"n_nodes", generator.n_nodes},
                         {"phi", generator.phi},
                         {"m", generator.m},
                         {"base_coeffs", generator.base_coeffs},
                         {"base_sweeps", generator.base_sweeps},
                         {"burn_in", generator.burn_in},
                         {"length", generator.length}};
    root["pipeline"] = {{"terms", pipeline.terms},
                        {"z", pipeline.z},
                        {"v", pipeline.v},
                        {"estimator", pipeline.estimator},
                        {"stride", pipeline.stride}};
    root["chart"] = {{"type", chart.type},
                     {"param", chart.param},
                     {"ucl", chart.ucl},
                     {"reset_on_signal", chart.reset_on_signal}};
    root["calibration"] = {{"arl0", calibration.arl0},
                           {"replications", calibration.replications},
                           {"tolerance", calibration.tolerance},
                           {"horizon", calibration.horizon},
                           {"phase1_length", calibration.phase1_length}};
    root["anomaly"] = {{"kind", anomaly.kind},
                       {"tau", anomaly.tau},
                       {"m1", anomaly.m1},
                       {"phi1", anomaly.phi1},
                       {"zeta", anomaly.zeta}};
    root["io"] = {{"input", io.input}, {"output_dir", io.output_dir}};
    root["monitor"] = {{"phase1_length", monitor.phase1_length}, {"ucl_from", monitor.ucl_from}};
    root["gof"] = {{"n_sims", gof.n_sims}, {"sweeps", gof.sweeps}};
    root["seed"] = seed;
    root["jobs"] = jobs;
    return root.dump(2) + "\n";
}

simgen::GenConfig RunConfig::gen_config() const {
    if (generator.n_nodes < 2) bad("generator.n_nodes must be at least 2");
    if (!(generator.phi >= 0.0 && generator.phi <= 1.0)) {
        bad("generator.phi must lie in [0, 1]");
    }
    if (generator.base_sweeps < 0) bad("generator.base_sweeps must be nonnegative");
    if (generator.burn_in < 0) bad("generator.burn_in must be nonnegative");

    simgen::GenConfig g;
    g.n_nodes = generator.n_nodes;
    g.phi = generator.phi;
    g.m = simgen::TransitionMatrix{generator.m[0], generator.m[1], generator.m[2],
                                   generator.m[3]};
    if (!g.m.is_valid()) bad("generator.m rows must be probabilities summing to 1");
    if (!generator.base_coeffs.empty()) {
        if (generator.base_coeffs.size() != 3) {
            bad("generator.base_coeffs needs exactly 3 entries (edges, triangles, asymmetric)");
        }
        g.base_coeffs = Eigen::VectorXd::Map(generator.base_coeffs.data(), 3);
    }
    g.base_sweeps = generator.base_sweeps;
    g.burn_in = generator.burn_in;
    g.seed = seed;
    return g;
}

std::optional<simgen::AnomalySpec> RunConfig::anomaly_spec() const {
    if (anomaly.kind.empty()) return std::nullopt;
    if (anomaly.tau < 1) bad("anomaly.tau must be at least 1");
    if (anomaly.kind == "A") {
        const simgen::TransitionMatrix m1{anomaly.m1[0], anomaly.m1[1], anomaly.m1[2],
                                          anomaly.m1[3]};
        if (!m1.is_valid()) bad("anomaly.m1 rows must be probabilities summing to 1");
        return simgen::AnomalySpec::type_a(anomaly.tau, m1);
    }
    if (anomaly.kind == "B") {
        if (!(anomaly.phi1 >= 0.0 && anomaly.phi1 <= 1.0)) bad("anomaly.phi1 must lie in [0, 1]");
        return simgen::AnomalySpec::type_b(anomaly.tau, anomaly.phi1);
    }
    if (anomaly.kind == "C") {
        if (!(anomaly.zeta >= 0.0 && anomaly.zeta <= 1.0)) bad("anomaly.zeta must lie in [0, 1]");
        return simgen::AnomalySpec::type_c(anomaly.tau, anomaly.zeta);
    }
    bad("anomaly.kind must be \"\", \"A\", \"B\" or \"C\", got '" + anomaly.kind + "'");
}

calib::PipelineCfg RunConfig::pipeline_cfg() const {
    if (pipeline.terms.empty()) bad("pipeline.terms must name at least one statistic");
    std::vector<stats::Term> terms;
    terms.reserve(pipeline.terms.size());
    for (const std::string& name : pipeline.terms) {
        try {
            terms.push_back(stats::term_from_name(name));
        } catch (const Error& e) {
            bad(std::string("pipeline.terms: ") + e.what());
        }
    }
    if (pipeline.z < 1) bad("pipeline.z must be at least 1");
    if (pipeline.v != 1) bad("pipeline.v must be 1 (single-step memory)");
    if (pipeline.stride < 1) bad("pipeline.stride must be at least 1");

    tergm::EstimatorKind kind;
    try {
        kind = tergm::estimator_from_name(pipeline.estimator);
    } catch (const Error& e) {
        bad(std::string("pipeline.estimator: ") + e.what());
    }
    try {
        return calib::PipelineCfg{stats::TermSet(terms), pipeline.z, pipeline.v, kind};
    } catch (const Error& e) {
        bad(std::string("pipeline.terms: ") + e.what());
    }
}

calib::ChartCfg RunConfig::chart_cfg() const {
    charts::ChartKind kind;
    try {
        kind = charts::chart_from_name(chart.type);
    } catch (const Error& e) {
        bad(std::string("chart.type: ") + e.what());
    }
    if (kind == charts::ChartKind::Mcusum && !(chart.param > 0.0)) {
        bad("chart.param: allowance k must be positive for mcusum");
    }
    if (kind == charts::ChartKind::Mewma && !(chart.param > 0.0 && chart.param <= 1.0)) {
        bad("chart.param: smoothing weight lambda must lie in (0, 1] for mewma");
    }
    return calib::ChartCfg{kind, chart.param};
}

void RunConfig::check_calibration() const {
    if (!(std::isfinite(calibration.arl0)) || calibration.arl0 < 1.0) {
        bad("calibration.arl0 must be at least 1");
    }
    if (calibration.replications < 2) bad("calibration.replications must be at least 2");
    if (!(calibration.tolerance > 0.0) || calibration.tolerance > 0.2) {
        bad("calibration.tolerance must lie in (0, 0.2]");
    }
    if (calibration.horizon < 0) bad("calibration.horizon must be nonnegative");
    if (calibration.phase1_length < pipeline.z + pipeline.v + 1) {
        bad("calibration.phase1_length must cover at least z + v + 1 graphs");
    }
}

std::int64_t RunConfig::resolved_horizon() const {
    if (calibration.horizon > 0) return calibration.horizon;
    return static_cast<std::int64_t>(std::ceil(20.0 * std::max(1.0, calibration.arl0)));
}

} // namespace netwatch::config
