#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "netwatch/errors.hpp"

namespace netwatch::charts {

enum class ChartKind { Mcusum, Mewma };

const char* chart_name(ChartKind k);
ChartKind chart_from_name(const std::string& name);

/* Phase-I target: center c0 and covariance Sigma with a cached Cholesky
 * factorization.  Construction rejects asymmetric, non-positive-definite or
 * numerically singular covariances (condition estimate above 1e12) --
 * regularize such a matrix with a small ridge (e.g. 1e-8 * diag(Sigma))
 * before retrying. */
class ChartTarget {
  public:
    ChartTarget(Eigen::VectorXd center, Eigen::MatrixXd sigma);

    const Eigen::VectorXd& center() const { return center_; }
    const Eigen::MatrixXd& sigma() const { return sigma_; }
    std::size_t p() const { return static_cast<std::size_t>(center_.size()); }

    // Sigma^{-1} x via the cached factorization
    Eigen::VectorXd solve(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd sigma_inverse() const;

    // squared Mahalanobis distance (value - c0)' Sigma^{-1} (value - c0)
    double mahalanobis(const Eigen::VectorXd& value) const;

  private:
    Eigen::VectorXd center_;
    Eigen::MatrixXd sigma_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

struct StepOutcome {
    double statistic = 0.0;
    bool signal = false;
    std::int64_t t = 0; // chart step index (1 at the first step after a restart)
};

/* Crosier cumulative-sum state.  r accumulates shrunken deviations; the
 * chart statistic is the Mahalanobis norm of r, reported as sqrt(D2) and
 * compared directly against the UCL. */
struct McusumState {
    Eigen::VectorXd r;
    double k = 0.5;
    std::int64_t t = 0;

    McusumState(std::size_t p, double k);
};

/* Exponentially weighted moving-average state.  t feeds the finite-horizon
 * covariance Sigma_{l_t} = [lambda/(2-lambda)][1 - (1-lambda)^{2t}] Sigma and
 * restarts together with l on a signal reset. */
struct MewmaState {
    Eigen::VectorXd l;
    double lambda = 0.1;
    std::int64_t t = 0;

    MewmaState(std::size_t p, double lambda);
};

/* One chart update.  statistic = sqrt(D2) = ||r_t||_Sigma; signal when
 * statistic >= ucl; on signal with reset_on_signal the accumulator returns
 * to zero. */
StepOutcome mcusum_step(McusumState& state, const Eigen::VectorXd& c_hat, const ChartTarget& target,
                        double ucl, bool reset_on_signal);

/* One chart update.  statistic = D3 = l_t' Sigma_{l_t}^{-1} l_t; signal when
 * statistic >= ucl; on signal with reset_on_signal both l and the time
 * index restart.  With lambda = 1 the statistic equals the squared
 * Mahalanobis distance at every step. */
StepOutcome mewma_step(MewmaState& state, const Eigen::VectorXd& c_hat, const ChartTarget& target,
                       double ucl, bool reset_on_signal);

} // namespace netwatch::charts
