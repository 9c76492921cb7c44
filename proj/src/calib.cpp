#include "netwatch/calib.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "netwatch/parallel.hpp"
#include "netwatch/rng.hpp"

namespace netwatch::calib {

namespace {

constexpr double kConditionLimit = 1e12;

double mean_of(const std::vector<double>& xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

// standard error of the mean, unbiased variance
double se_of(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

/* One seeded replication: in-control (or anomalous) series of `length`
 * graphs pushed through the estimator pipeline at stride 1. */
std::vector<Eigen::VectorXd> replication_stream(const simgen::GenConfig& gen,
                                                const PipelineCfg& pipe, std::int64_t length,
                                                const std::optional<simgen::AnomalySpec>& anomaly,
                                                std::uint64_t seed) {
    Rng rng(seed);
    const graph::GraphSeries series = simgen::generate_series(gen, length, anomaly, rng);
    tergm::EstimateStream stream(pipe.terms, pipe.z, pipe.v, pipe.kind);
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(std::max<std::int64_t>(0, length - pipe.z - pipe.v + 1)));
    for (std::int64_t t = series.start_index(); t <= series.end_index(); ++t) {
        stream.feed(series.at_time(t), t);
        if (stream.ready()) out.push_back(stream.estimate().values);
    }
    return out;
}

std::vector<std::vector<Eigen::VectorXd>> replication_streams(
    const simgen::GenConfig& gen, const PipelineCfg& pipe, std::int64_t length,
    const std::optional<simgen::AnomalySpec>& anomaly, int replications, std::uint64_t seed,
    int jobs) {
    if (replications < 2) throw Error("need at least two replications");
    std::vector<std::vector<Eigen::VectorXd>> streams(replications);
    parallel_for(static_cast<std::size_t>(replications), jobs, [&](std::size_t r) {
        streams[r] = replication_stream(gen, pipe, length, anomaly,
                                        derive_seed(seed, static_cast<std::uint64_t>(r)));
    });
    return streams;
}

/* 1-based index of the first exceedance; 0 when the stream never signals.
 * Run-length scans never reset on signal: nothing after the first signal
 * matters, so the scan is exact for every limit on the same draws. */
std::int64_t first_signal(const ChartCfg& chart, const charts::ChartTarget& target,
                          const std::vector<Eigen::VectorXd>& stream, double ucl,
                          std::int64_t max_steps) {
    const std::int64_t limit =
        std::min<std::int64_t>(max_steps, static_cast<std::int64_t>(stream.size()));
    if (chart.kind == charts::ChartKind::Mcusum) {
        charts::McusumState state(target.p(), chart.param);
        for (std::int64_t i = 0; i < limit; ++i) {
            if (charts::mcusum_step(state, stream[static_cast<std::size_t>(i)], target, ucl, false)
                    .signal)
                return i + 1;
        }
    } else {
        charts::MewmaState state(target.p(), chart.param);
        for (std::int64_t i = 0; i < limit; ++i) {
            if (charts::mewma_step(state, stream[static_cast<std::size_t>(i)], target, ucl, false)
                    .signal)
                return i + 1;
        }
    }
    return 0;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace

PhaseISummary phase1_summary(const std::vector<Eigen::VectorXd>& values) {
    const std::int64_t n = static_cast<std::int64_t>(values.size());
    if (n < 2) throw Error("phase-one summary needs at least two estimates");
    const Eigen::Index p = values.front().size();
    for (const Eigen::VectorXd& v : values) {
        if (v.size() != p) {
            throw DimensionMismatch("phase-one estimates mix dimensions " + std::to_string(p) +
                                    " and " + std::to_string(v.size()));
        }
    }

    PhaseISummary out;
    out.n_samples = n;
    out.c_bar = Eigen::VectorXd::Zero(p);
    for (const Eigen::VectorXd& v : values) out.c_bar += v;
    out.c_bar /= static_cast<double>(n);

    out.s = Eigen::MatrixXd::Zero(p, p);
    for (const Eigen::VectorXd& v : values) {
        const Eigen::VectorXd d = v - out.c_bar;
        out.s += d * d.transpose();
    }
    out.s /= static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.s);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi > kConditionLimit * lo) {
        throw SingularCovariance(
            "phase-one covariance from " + std::to_string(n) +
            " samples is singular or ill-conditioned; gather more in-control estimates or add a "
            "small ridge such as 1e-8 * diag(s)");
    }
    return out;
}

PhaseISummary phase1_summary(const std::vector<tergm::CharEstimate>& estimates) {
    std::vector<Eigen::VectorXd> values;
    values.reserve(estimates.size());
    for (const tergm::CharEstimate& e : estimates) {
        if (!values.empty() && e.kind != estimates.front().kind) {
            throw Error("phase-one estimates mix estimator kinds");
        }
        values.push_back(e.values);
    }
    return phase1_summary(values);
}

charts::ChartTarget target_of(const PhaseISummary& summary) {
    return charts::ChartTarget(summary.c_bar, summary.s);
}

PhaseISummary phase1_from_generator(const simgen::GenConfig& gen, const PipelineCfg& pipe,
                                    std::int64_t length, std::uint64_t seed) {
    if (length < pipe.z + pipe.v + 1) {
        throw WindowTooShort("phase-one run of " + std::to_string(length) +
                             " graphs yields fewer than two estimates at window " +
                             std::to_string(pipe.z));
    }
    return phase1_summary(replication_stream(gen, pipe, length, std::nullopt, seed));
}

RunLength run_length(const ChartCfg& chart, const charts::ChartTarget& target,
                     const std::vector<Eigen::VectorXd>& stream, double ucl,
                     std::int64_t horizon) {
    if (horizon < 1) throw Error("run-length horizon must be at least 1");
    const std::int64_t hit = first_signal(chart, target, stream, ucl, horizon);
    if (hit > 0) return {hit, false};
    return {horizon, true};
}

ArlSimulator::ArlSimulator(const simgen::GenConfig& gen, const PipelineCfg& pipe,
                           charts::ChartTarget target, int replications, std::int64_t horizon,
                           std::uint64_t seed, int jobs)
    : target_(std::move(target)), horizon_(horizon), jobs_(jobs) {
    if (horizon_ < 1) throw Error("run-length horizon must be at least 1");
    // horizon monitored steps need z + v - 1 extra graphs in front
    streams_ = replication_streams(gen, pipe, horizon_ + pipe.z + pipe.v - 1, std::nullopt,
                                   replications, seed, jobs_);
}

ArlEstimate ArlSimulator::evaluate(const ChartCfg& chart, double ucl) const {
    const std::size_t reps = streams_.size();
    std::vector<double> lengths(reps);
    std::vector<std::uint8_t> censored(reps, 0);
    parallel_for(reps, jobs_, [&](std::size_t r) {
        const RunLength rl = run_length(chart, target_, streams_[r], ucl, horizon_);
        lengths[r] = static_cast<double>(rl.length);
        censored[r] = rl.censored ? 1 : 0;
    });

    ArlEstimate out;
    for (std::uint8_t c : censored) out.censored_runs += c;
    out.arl_hat = mean_of(lengths);
    out.se = se_of(lengths, out.arl_hat);
    out.unreliable = 5 * out.censored_runs >= static_cast<std::int64_t>(reps);
    return out;
}

ArlEstimate estimate_arl(const ChartCfg& chart, const simgen::GenConfig& gen,
                         const PipelineCfg& pipe, double ucl, int replications,
                         std::int64_t horizon, std::uint64_t seed, std::int64_t phase1_length,
                         int jobs) {
    const charts::ChartTarget target =
        target_of(phase1_from_generator(gen, pipe, phase1_length, derive_seed(seed, 0)));
    const ArlSimulator sim(gen, pipe, target, replications, horizon, derive_seed(seed, 1), jobs);
    return sim.evaluate(chart, ucl);
}

CalibResult calibrate_ucl(const ArlSimulator& sim, const ChartCfg& chart, double arl0,
                          double tolerance) {
    if (!std::isfinite(arl0) || arl0 < 1.0) {
        throw Error("target in-control ARL must be at least 1, got " + format_double(arl0));
    }
    if (!(tolerance > 0.0) || tolerance > 0.2) {
        throw Error("calibration tolerance must lie in (0, 0.2], got " + format_double(tolerance));
    }
    const auto close = [&](double arl) { return std::abs(arl - arl0) <= tolerance * arl0; };
    const auto result = [&](double ucl, const ArlEstimate& est, double lo, double hi, int steps) {
        CalibResult r;
        r.ucl = ucl;
        r.arl_hat = est.arl_hat;
        r.arl_se = est.se;
        r.replications = sim.replications();
        r.bracket_lo = lo;
        r.bracket_hi = hi;
        r.bisection_steps = steps;
        r.tolerance_met = close(est.arl_hat);
        return r;
    };

    // every statistic is nonnegative, so the chart signals immediately at 0
    ArlEstimate at_zero = sim.evaluate(chart, 0.0);
    if (close(at_zero.arl_hat)) return result(0.0, at_zero, 0.0, 0.0, 0);

    double lo = 0.0;
    double hi = 1.0;
    ArlEstimate hi_est = sim.evaluate(chart, hi);
    int doublings = 0;
    while (hi_est.arl_hat < arl0) {
        if (++doublings > 20) {
            throw BracketFailure("in-control ARL reaches only " + format_double(hi_est.arl_hat) +
                                 " at limit " + format_double(hi) + " after 20 doublings (target " +
                                 format_double(arl0) +
                                 "); raise the horizon or the replication count");
        }
        lo = hi;
        hi *= 2.0;
        hi_est = sim.evaluate(chart, hi);
    }
    if (close(hi_est.arl_hat)) return result(hi, hi_est, lo, hi * 2.0, 0);

    double ucl = hi;
    ArlEstimate current = hi_est;
    int steps = 0;
    while (steps < 30) {
        ++steps;
        ucl = 0.5 * (lo + hi);
        current = sim.evaluate(chart, ucl);
        if (close(current.arl_hat)) break;
        (current.arl_hat < arl0 ? lo : hi) = ucl;
    }
    return result(ucl, current, lo, hi, steps);
}

CalibResult calibrate_ucl(const ChartCfg& chart, const simgen::GenConfig& gen,
                          const PipelineCfg& pipe, double arl0, int replications, double tolerance,
                          std::uint64_t seed, std::int64_t phase1_length, std::int64_t horizon,
                          int jobs) {
    if (horizon <= 0) horizon = static_cast<std::int64_t>(std::ceil(20.0 * std::max(1.0, arl0)));
    const charts::ChartTarget target =
        target_of(phase1_from_generator(gen, pipe, phase1_length, derive_seed(seed, 0)));
    const ArlSimulator sim(gen, pipe, target, replications, horizon, derive_seed(seed, 1), jobs);
    return calibrate_ucl(sim, chart, arl0, tolerance);
}

CedSimulator::CedSimulator(const simgen::GenConfig& gen, const PipelineCfg& pipe,
                           const std::optional<simgen::AnomalySpec>& anomaly,
                           charts::ChartTarget target, std::int64_t tau, int replications,
                           std::int64_t horizon, std::uint64_t seed, int jobs)
    : target_(std::move(target)), tau_(tau), horizon_(horizon),
      first_t_(static_cast<std::int64_t>(pipe.z) + pipe.v), jobs_(jobs) {
    if (tau_ < 2) throw Error("change point tau must be at least 2");
    if (horizon_ < 1) throw Error("detection horizon must be at least 1");
    if (anomaly && anomaly->tau != tau_) {
        throw InvalidAnomaly("anomaly onset " + std::to_string(anomaly->tau) +
                             " disagrees with tau " + std::to_string(tau_));
    }
    // monitored times run from z+v up to tau - 1 + horizon
    const std::int64_t length = tau_ - 1 + horizon_;
    if (length < first_t_) {
        throw WindowTooShort("series of " + std::to_string(length) +
                             " graphs is shorter than the first monitorable step " +
                             std::to_string(first_t_));
    }
    streams_ = replication_streams(gen, pipe, length, anomaly, replications, seed, jobs_);
}

CedResult CedSimulator::evaluate(const ChartCfg& chart, double ucl) const {
    const std::size_t reps = streams_.size();
    // delay per replication; 0 = false alarm before tau, -1 = censored
    std::vector<std::int64_t> outcome(reps);
    parallel_for(reps, jobs_, [&](std::size_t r) {
        const auto& stream = streams_[r];
        const std::int64_t hit =
            first_signal(chart, target_, stream, ucl, static_cast<std::int64_t>(stream.size()));
        if (hit == 0) {
            outcome[r] = -1;
            return;
        }
        const std::int64_t t_signal = first_t_ + hit - 1;
        outcome[r] = t_signal < tau_ ? 0 : t_signal - tau_ + 1;
    });

    CedResult out;
    std::vector<double> delays;
    delays.reserve(reps);
    const double max_delay = static_cast<double>(horizon_);
    for (std::int64_t o : outcome) {
        if (o == 0) {
            ++out.discarded_false_alarm_runs;
        } else if (o < 0) {
            ++out.censored_runs;
            delays.push_back(max_delay);
        } else {
            delays.push_back(static_cast<double>(o));
        }
    }
    out.valid_runs = static_cast<int>(delays.size());
    if (out.valid_runs == 0) {
        throw NoValidRuns("every replication signalled before tau = " + std::to_string(tau_) +
                          "; lower the false-alarm rate or move the change point later");
    }
    out.ced = mean_of(delays);
    out.se = se_of(delays, out.ced);
    return out;
}

CedResult estimate_ced(const ChartCfg& chart, const simgen::GenConfig& gen,
                       const PipelineCfg& pipe, const std::optional<simgen::AnomalySpec>& anomaly,
                       std::int64_t tau, double ucl, int replications, std::uint64_t seed,
                       std::int64_t phase1_length, std::int64_t horizon, int jobs) {
    const charts::ChartTarget target =
        target_of(phase1_from_generator(gen, pipe, phase1_length, derive_seed(seed, 0)));
    const CedSimulator sim(gen, pipe, anomaly, target, tau, replications, horizon,
                           derive_seed(seed, 1), jobs);
    return sim.evaluate(chart, ucl);
}

std::vector<double> acf(const std::vector<double>& series, int max_lag) {
    if (max_lag < 0) throw Error("autocorrelation lag must be nonnegative");
    const std::int64_t n = static_cast<std::int64_t>(series.size());
    if (n <= max_lag) {
        throw Error("series of length " + std::to_string(n) +
                    " is too short for lag " + std::to_string(max_lag));
    }
    const double mean = mean_of(series);
    double denom = 0.0;
    for (double x : series) denom += (x - mean) * (x - mean);
    if (denom == 0.0) {
        throw UndefinedAcf("series is constant; autocorrelation is undefined");
    }
    std::vector<double> rho(static_cast<std::size_t>(max_lag) + 1);
    for (int h = 0; h <= max_lag; ++h) {
        double num = 0.0;
        for (std::int64_t t = 0; t + h < n; ++t) {
            num += (series[static_cast<std::size_t>(t)] - mean) *
                   (series[static_cast<std::size_t>(t + h)] - mean);
        }
        rho[static_cast<std::size_t>(h)] = num / denom;
    }
    return rho;
}

std::string UclTable::to_csv() const {
    if (arl0s.size() != cells.size()) throw DimensionMismatch("table has a row for every arl0");
    std::string out = "arl0";
    for (double p : params) out += "," + param_label + "=" + format_double(p);
    out += "\n";
    for (std::size_t r = 0; r < arl0s.size(); ++r) {
        if (cells[r].size() != params.size()) {
            throw DimensionMismatch("table row " + std::to_string(r) +
                                    " has a cell for every parameter");
        }
        out += format_double(arl0s[r]);
        for (const CalibResult& cell : cells[r]) out += "," + format_double(cell.ucl);
        out += "\n";
    }
    return out;
}

} // namespace netwatch::calib
