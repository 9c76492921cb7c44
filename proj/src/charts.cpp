#include "netwatch/charts.hpp"

#include <cmath>
#include <utility>

namespace netwatch::charts {

const char* chart_name(ChartKind k) {
    return k == ChartKind::Mcusum ? "mcusum" : "mewma";
}

ChartKind chart_from_name(const std::string& name) {
    if (name == "mcusum") return ChartKind::Mcusum;
    if (name == "mewma") return ChartKind::Mewma;
    throw Error("unknown chart kind '" + name + "' (expected mcusum or mewma)");
}

ChartTarget::ChartTarget(Eigen::VectorXd center, Eigen::MatrixXd sigma)
    : center_(std::move(center)), sigma_(std::move(sigma)) {
    const Eigen::Index p = center_.size();
    if (p < 1) throw DimensionMismatch("chart target needs at least one dimension");
    if (sigma_.rows() != p || sigma_.cols() != p) {
        throw DimensionMismatch("covariance is " + std::to_string(sigma_.rows()) + "x" +
                                std::to_string(sigma_.cols()) + " but the center has " +
                                std::to_string(p) + " entries");
    }
    if (!center_.allFinite() || !sigma_.allFinite()) {
        throw Error("chart target contains non-finite entries");
    }
    const double scale = std::max(1.0, sigma_.cwiseAbs().maxCoeff());
    if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
        throw Error("covariance matrix is not symmetric");
    }
    // condition check on the exact symmetric part, then factorize
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (sigma_ + sigma_.transpose()));
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi > 1e12 * lo) {
        throw SingularCovariance(
            "covariance is singular or ill-conditioned (eigenvalues in [" + std::to_string(lo) +
            ", " + std::to_string(hi) +
            "]); add a small ridge such as 1e-8 * diag(sigma) and retry");
    }
    llt_.compute(sigma_);
    if (llt_.info() != Eigen::Success) {
        throw SingularCovariance(
            "Cholesky factorization of the covariance failed; add a small ridge such as "
            "1e-8 * diag(sigma) and retry");
    }
}

Eigen::VectorXd ChartTarget::solve(const Eigen::VectorXd& x) const {
    if (x.size() != center_.size()) {
        throw DimensionMismatch("vector has " + std::to_string(x.size()) + " entries, target has " +
                                std::to_string(center_.size()));
    }
    return llt_.solve(x);
}

Eigen::MatrixXd ChartTarget::sigma_inverse() const {
    return llt_.solve(Eigen::MatrixXd::Identity(sigma_.rows(), sigma_.cols()));
}

double ChartTarget::mahalanobis(const Eigen::VectorXd& value) const {
    if (value.size() != center_.size()) {
        throw DimensionMismatch("value has " + std::to_string(value.size()) + " entries, target has " +
                                std::to_string(center_.size()));
    }
    const Eigen::VectorXd d = value - center_;
    return d.dot(solve(d));
}

McusumState::McusumState(std::size_t p, double k_in)
    : r(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p))), k(k_in) {
    if (p == 0) throw DimensionMismatch("chart state needs at least one dimension");
    if (!(k > 0.0) || !std::isfinite(k)) {
        throw Error("allowance k must be positive, got " + std::to_string(k));
    }
}

MewmaState::MewmaState(std::size_t p, double lambda_in)
    : l(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p))), lambda(lambda_in) {
    if (p == 0) throw DimensionMismatch("chart state needs at least one dimension");
    if (!(lambda > 0.0) || !(lambda <= 1.0)) {
        throw Error("smoothing weight lambda must lie in (0, 1], got " + std::to_string(lambda));
    }
}

namespace {

void check_step_dims(Eigen::Index state_p, const Eigen::VectorXd& c_hat, const ChartTarget& target) {
    if (c_hat.size() != state_p || target.center().size() != state_p) {
        throw DimensionMismatch("chart state has " + std::to_string(state_p) +
                                " dimensions, estimate has " + std::to_string(c_hat.size()) +
                                ", target has " + std::to_string(target.center().size()));
    }
}

} // namespace

StepOutcome mcusum_step(McusumState& state, const Eigen::VectorXd& c_hat, const ChartTarget& target,
                        double ucl, bool reset_on_signal) {
    check_step_dims(state.r.size(), c_hat, target);
    state.t += 1;

    const Eigen::VectorXd s = state.r + (c_hat - target.center());
    const double c = std::sqrt(std::max(0.0, s.dot(target.solve(s))));
    double statistic = 0.0;
    if (c <= state.k) {
        state.r.setZero();
    } else {
        state.r = s * (1.0 - state.k / c);
        statistic = c - state.k; // equals the Mahalanobis norm of the shrunken r
    }

    StepOutcome out{statistic, statistic >= ucl, state.t};
    if (out.signal && reset_on_signal) state.r.setZero();
    return out;
}

StepOutcome mewma_step(MewmaState& state, const Eigen::VectorXd& c_hat, const ChartTarget& target,
                       double ucl, bool reset_on_signal) {
    check_step_dims(state.l.size(), c_hat, target);
    state.t += 1;

    state.l = state.lambda * (c_hat - target.center()) + (1.0 - state.lambda) * state.l;
    // Sigma_{l_t} = [lambda/(2-lambda)] [1 - (1-lambda)^{2t}] Sigma
    const double shrink =
        state.lambda / (2.0 - state.lambda) * (1.0 - std::pow(1.0 - state.lambda, 2.0 * static_cast<double>(state.t)));
    const double statistic = state.l.dot(target.solve(state.l)) / shrink;

    StepOutcome out{statistic, statistic >= ucl, state.t};
    if (out.signal && reset_on_signal) {
        state.l.setZero();
        state.t = 0; // the finite-horizon covariance restarts with the accumulator
    }
    return out;
}

} // namespace netwatch::charts
