#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "netwatch/charts.hpp"
#include "netwatch/errors.hpp"
#include "netwatch/simgen.hpp"
#include "netwatch/tergm.hpp"

namespace netwatch::calib {

/* Mean vector and unbiased sample covariance of an in-control estimate
 * stream; the pair (c_bar, s) becomes the chart target. */
struct PhaseISummary {
    Eigen::VectorXd c_bar;
    Eigen::MatrixXd s;
    std::int64_t n_samples = 0;
};

PhaseISummary phase1_summary(const std::vector<Eigen::VectorXd>& values);
PhaseISummary phase1_summary(const std::vector<tergm::CharEstimate>& estimates);
charts::ChartTarget target_of(const PhaseISummary& summary);

// estimator pipeline shared by calibration and monitoring runs
struct PipelineCfg {
    stats::TermSet terms;
    int z = 7;
    int v = 1;
    tergm::EstimatorKind kind = tergm::EstimatorKind::ThetaHat;
};

// chart family plus its tuning parameter (allowance k or smoothing weight lambda)
struct ChartCfg {
    charts::ChartKind kind = charts::ChartKind::Mewma;
    double param = 0.5;
};

/* In-control series of `length` graphs -> stride-1 estimate stream ->
 * Phase-I summary. */
PhaseISummary phase1_from_generator(const simgen::GenConfig& gen, const PipelineCfg& pipe,
                                    std::int64_t length, std::uint64_t seed);

struct RunLength {
    std::int64_t length = 0;
    bool censored = false;
};

/* Steps a freshly initialized chart over the estimate stream and returns the
 * 1-based index of the first signal.  No signal within `horizon` monitored
 * steps (or before the stream runs out) censors the run at the horizon. */
RunLength run_length(const ChartCfg& chart, const charts::ChartTarget& target,
                     const std::vector<Eigen::VectorXd>& stream, double ucl, std::int64_t horizon);

struct ArlEstimate {
    double arl_hat = 0.0;
    double se = 0.0;
    std::int64_t censored_runs = 0;
    bool unreliable = false; // 20% or more of the runs were censored at the horizon
};

/* Caches one in-control estimate stream per replication so that every
 * evaluate() call reuses the same draws: the empirical ARL is then exactly
 * nondecreasing in the limit, which keeps bisection well-posed. */
class ArlSimulator {
  public:
    ArlSimulator(const simgen::GenConfig& gen, const PipelineCfg& pipe, charts::ChartTarget target,
                 int replications, std::int64_t horizon, std::uint64_t seed, int jobs = 1);

    ArlEstimate evaluate(const ChartCfg& chart, double ucl) const;

    const charts::ChartTarget& target() const { return target_; }
    std::int64_t horizon() const { return horizon_; }
    int replications() const { return static_cast<int>(streams_.size()); }

  private:
    charts::ChartTarget target_;
    std::int64_t horizon_;
    int jobs_;
    std::vector<std::vector<Eigen::VectorXd>> streams_;
};

ArlEstimate estimate_arl(const ChartCfg& chart, const simgen::GenConfig& gen,
                         const PipelineCfg& pipe, double ucl, int replications,
                         std::int64_t horizon, std::uint64_t seed,
                         std::int64_t phase1_length = 500, int jobs = 1);

struct CalibResult {
    double ucl = 0.0;
    double arl_hat = 0.0;
    double arl_se = 0.0;
    int replications = 0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    int bisection_steps = 0;
    bool tolerance_met = false;
};

/* Geometric bracket expansion (at most 20 doublings, else BracketFailure)
 * followed by bisection (at most 30 steps) on the cached-stream ARL until the
 * achieved ARL is within tolerance*arl0 of the target. */
CalibResult calibrate_ucl(const ArlSimulator& sim, const ChartCfg& chart, double arl0,
                          double tolerance);
CalibResult calibrate_ucl(const ChartCfg& chart, const simgen::GenConfig& gen,
                          const PipelineCfg& pipe, double arl0, int replications, double tolerance,
                          std::uint64_t seed, std::int64_t phase1_length = 500,
                          std::int64_t horizon = 0, int jobs = 1); // horizon 0 -> 20 * arl0

struct CedResult {
    double ced = 0.0;
    double se = 0.0;
    int valid_runs = 0;
    int discarded_false_alarm_runs = 0;
    int censored_runs = 0; // valid runs with no signal inside the horizon
};

/* Caches one Phase-II estimate stream (anomaly at tau, or none for control
 * experiments) per replication; evaluate() scans for the first signal,
 * discards runs that alarm before tau and averages delay = t - tau + 1 over
 * the rest.  A signal exactly at tau counts as delay 1. */
class CedSimulator {
  public:
    CedSimulator(const simgen::GenConfig& gen, const PipelineCfg& pipe,
                 const std::optional<simgen::AnomalySpec>& anomaly, charts::ChartTarget target,
                 std::int64_t tau, int replications, std::int64_t horizon, std::uint64_t seed,
                 int jobs = 1);

    CedResult evaluate(const ChartCfg& chart, double ucl) const;

    const charts::ChartTarget& target() const { return target_; }
    std::int64_t tau() const { return tau_; }

  private:
    charts::ChartTarget target_;
    std::int64_t tau_;
    std::int64_t horizon_;
    std::int64_t first_t_;
    int jobs_;
    std::vector<std::vector<Eigen::VectorXd>> streams_;
};

CedResult estimate_ced(const ChartCfg& chart, const simgen::GenConfig& gen,
                       const PipelineCfg& pipe, const std::optional<simgen::AnomalySpec>& anomaly,
                       std::int64_t tau, double ucl, int replications, std::uint64_t seed,
                       std::int64_t phase1_length = 500, std::int64_t horizon = 1000, int jobs = 1);

/* Sample autocorrelation rho(h) for h = 0..max_lag, mean-centered and
 * normalized by lag 0. */
std::vector<double> acf(const std::vector<double>& series, int max_lag);

/* Control-limit grid in the layout of the calibration tables: one row per
 * ARL0, one column per chart parameter. */
struct UclTable {
    std::string param_label; // "lambda" or "k"
    std::vector<double> params;
    std::vector<double> arl0s;
    std::vector<std::vector<CalibResult>> cells; // [row][column]

    std::string to_csv() const;
};

} // namespace netwatch::calib
