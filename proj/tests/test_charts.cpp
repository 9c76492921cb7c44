#include <cmath>
#include <vector>

#include <doctest.h>

#include "netwatch/charts.hpp"
#include "netwatch/errors.hpp"
#include "netwatch/rng.hpp"

using namespace netwatch;
using namespace netwatch::charts;

namespace {

// independent dense solver (partial-pivot Gaussian elimination) so the
// Mahalanobis values are not checked against another Cholesky
Eigen::VectorXd eliminate(Eigen::MatrixXd a, Eigen::VectorXd b) {
    const int n = static_cast<int>(a.rows());
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        a.row(col).swap(a.row(piv));
        std::swap(b(col), b(piv));
        for (int r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            a.row(r) -= f * a.row(col);
            b(r) -= f * b(col);
        }
    }
    Eigen::VectorXd x(n);
    for (int r = n - 1; r >= 0; --r) {
        const int tail = n - 1 - r;
        x(r) = (b(r) - a.row(r).tail(tail).dot(x.tail(tail))) / a(r, r);
    }
    return x;
}

Eigen::MatrixXd random_spd(int p, Rng& rng) {
    Eigen::MatrixXd m(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) m(i, j) = 2.0 * rng.uniform01() - 1.0;
    return m * m.transpose() + 0.5 * Eigen::MatrixXd::Identity(p, p);
}

Eigen::VectorXd random_vec(int p, Rng& rng, double scale = 1.0) {
    Eigen::VectorXd v(p);
    for (int i = 0; i < p; ++i) v(i) = scale * (2.0 * rng.uniform01() - 1.0);
    return v;
}

} // namespace

TEST_CASE("chart names round-trip") {
    CHECK(chart_name(ChartKind::Mcusum) == std::string("mcusum"));
    CHECK(chart_name(ChartKind::Mewma) == std::string("mewma"));
    CHECK(chart_from_name("mcusum") == ChartKind::Mcusum);
    CHECK(chart_from_name("mewma") == ChartKind::Mewma);
    CHECK_THROWS_AS(chart_from_name("shewhart"), Error);
}

TEST_CASE("target construction validates the covariance") {
    const Eigen::VectorXd c0 = Eigen::VectorXd::Zero(2);

    CHECK_THROWS_AS(ChartTarget(c0, Eigen::MatrixXd::Identity(3, 3)), DimensionMismatch);
    CHECK_THROWS_AS(ChartTarget(c0, Eigen::MatrixXd::Zero(2, 3)), DimensionMismatch);
    CHECK_THROWS_AS(ChartTarget(Eigen::VectorXd(), Eigen::MatrixXd()), DimensionMismatch);

    Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(2, 2);
    asym(0, 1) = 0.1;
    asym(1, 0) = 0.1 + 1e-5;
    CHECK_THROWS_WITH_AS(ChartTarget(c0, asym), doctest::Contains("symmetric"), Error);

    Eigen::MatrixXd indefinite = Eigen::MatrixXd::Identity(2, 2);
    indefinite(1, 1) = -0.5;
    CHECK_THROWS_AS(ChartTarget(c0, indefinite), SingularCovariance);

    Eigen::MatrixXd flat = Eigen::MatrixXd::Identity(2, 2);
    flat(1, 1) = 0.0;
    CHECK_THROWS_AS(ChartTarget(c0, flat), SingularCovariance);

    // conditioning guard trips before the factorization loses all accuracy,
    // and the message tells the caller how to regularize
    Eigen::MatrixXd nearly = Eigen::MatrixXd::Identity(2, 2);
    nearly(1, 1) = 1e-13;
    CHECK_THROWS_WITH_AS(ChartTarget(c0, nearly), doctest::Contains("ridge"), SingularCovariance);
    CHECK_THROWS_WITH_AS(ChartTarget(c0, nearly), doctest::Contains("1e-8"), SingularCovariance);

    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(ChartTarget(c0, bad), Error);

    Rng rng(401);
    const Eigen::MatrixXd sigma = random_spd(4, rng);
    const ChartTarget target(random_vec(4, rng), sigma);
    CHECK(target.p() == 4);
    CHECK(target.sigma() == sigma);
    CHECK((target.sigma_inverse() * sigma - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <
          1e-8);
    const Eigen::VectorXd x = random_vec(4, rng);
    CHECK((target.sigma_inverse() * x - target.solve(x)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("mahalanobis distance") {
    Rng rng(402);

    SUBCASE("zero at the center") {
        const Eigen::VectorXd c0 = random_vec(3, rng, 5.0);
        const ChartTarget target(c0, random_spd(3, rng));
        CHECK(target.mahalanobis(c0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
    }

    SUBCASE("identity covariance gives squared Euclidean distance") {
        const ChartTarget target(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
        for (int axis = 0; axis < 3; ++axis) {
            const Eigen::VectorXd e = Eigen::VectorXd::Unit(3, axis);
            CHECK(target.mahalanobis(e) == doctest::Approx(1.0).epsilon(1e-12));
        }
        Eigen::VectorXd v(3);
        v << 0.3, -0.4, 1.2;
        CHECK(target.mahalanobis(v) == doctest::Approx(v.squaredNorm()).epsilon(1e-12));
    }

    SUBCASE("agrees with an independent linear solve") {
        for (int rep = 0; rep < 10; ++rep) {
            const Eigen::MatrixXd sigma = random_spd(3, rng);
            const Eigen::VectorXd c0 = random_vec(3, rng);
            const Eigen::VectorXd value = random_vec(3, rng, 2.0);
            const ChartTarget target(c0, sigma);
            const Eigen::VectorXd d = value - c0;
            const double expected = d.dot(eliminate(sigma, d));
            CHECK(target.mahalanobis(value) == doctest::Approx(expected).epsilon(1e-10));
        }
    }

    SUBCASE("rejects mismatched dimensions") {
        const ChartTarget target(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
        CHECK_THROWS_AS(target.mahalanobis(Eigen::VectorXd::Zero(2)), DimensionMismatch);
        CHECK_THROWS_AS(target.solve(Eigen::VectorXd::Zero(4)), DimensionMismatch);
    }
}

TEST_CASE("cusum chart follows the shrinkage recursion") {
    const double inf = std::numeric_limits<double>::infinity();

    SUBCASE("stays at zero when the process sits on target") {
        Rng rng(403);
        const Eigen::VectorXd c0 = random_vec(3, rng);
        const ChartTarget target(c0, random_spd(3, rng));
        McusumState state(3, 0.5);
        for (int t = 1; t <= 10; ++t) {
            const StepOutcome out = mcusum_step(state, c0, target, inf, true);
            CHECK(out.statistic == 0.0);
            CHECK_FALSE(out.signal);
            CHECK(out.t == t);
        }
        CHECK(state.r.isZero(0.0));
    }

    SUBCASE("single step is the positive part of distance minus allowance") {
        const ChartTarget target(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
        Eigen::VectorXd c_hat(2);
        c_hat << 0.3, 0.4; // Mahalanobis norm exactly 0.5

        McusumState slack(2, 0.6);
        CHECK(mcusum_step(slack, c_hat, target, inf, true).statistic == 0.0);
        CHECK(slack.r.isZero(0.0));

        McusumState boundary(2, 0.5); // ties shrink to zero
        CHECK(mcusum_step(boundary, c_hat, target, inf, true).statistic == 0.0);

        McusumState tight(2, 0.2);
        CHECK(mcusum_step(tight, c_hat, target, inf, true).statistic == doctest::Approx(0.3).epsilon(1e-12));
    }

    SUBCASE("matches a hand-computed scalar run") {
        const ChartTarget target(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
        McusumState state(1, 0.5);
        const std::vector<double> xs = {1.2, -0.3, 0.8, 0.1, 2.0};
        const std::vector<double> want = {0.7, 0.0, 0.3, 0.0, 1.5};
        for (std::size_t i = 0; i < xs.size(); ++i) {
            Eigen::VectorXd c_hat(1);
            c_hat << xs[i];
            const StepOutcome out = mcusum_step(state, c_hat, target, inf, true);
            CHECK(out.statistic == doctest::Approx(want[i]).epsilon(1e-12));
            CHECK(out.t == static_cast<std::int64_t>(i + 1));
        }
    }

    SUBCASE("statistic equals the Mahalanobis norm of the accumulator") {
        Rng rng(404);
        const Eigen::VectorXd c0 = random_vec(3, rng);
        const ChartTarget target(c0, random_spd(3, rng));
        McusumState state(3, 0.3);
        for (int t = 0; t < 20; ++t) {
            const Eigen::VectorXd c_hat = c0 + random_vec(3, rng, 0.8);
            const StepOutcome out = mcusum_step(state, c_hat, target, inf, true);
            const double r_norm = std::sqrt(state.r.dot(target.solve(state.r)));
            CHECK(out.statistic == doctest::Approx(r_norm).epsilon(1e-12).scale(1.0));
        }
    }

    SUBCASE("validates its inputs") {
        CHECK_THROWS_AS(McusumState(2, 0.0), Error);
        CHECK_THROWS_AS(McusumState(2, -1.0), Error);
        CHECK_THROWS_AS(McusumState(2, std::numeric_limits<double>::quiet_NaN()), Error);
        CHECK_THROWS_AS(McusumState(0, 0.5), DimensionMismatch);

        const ChartTarget target(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
        McusumState state(2, 0.5);
        CHECK_THROWS_AS(mcusum_step(state, Eigen::VectorXd::Zero(2), target, inf, true),
                        DimensionMismatch);
        CHECK_THROWS_AS(mcusum_step(state, Eigen::VectorXd::Zero(3), target, inf, true),
                        DimensionMismatch);
    }
}

TEST_CASE("cusum signal and reset semantics") {
    const ChartTarget target(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
    Eigen::VectorXd first(1), second(1);
    first << 1.2;
    second << 0.6;

    McusumState with_reset(1, 0.5);
    StepOutcome out = mcusum_step(with_reset, first, target, 0.65, true);
    CHECK(out.statistic == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(out.signal);
    CHECK(with_reset.r.isZero(0.0));
    out = mcusum_step(with_reset, second, target, 0.65, true);
    CHECK(out.statistic == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_FALSE(out.signal);
    CHECK(out.t == 2); // the step counter is not restarted by a signal

    McusumState without_reset(1, 0.5);
    out = mcusum_step(without_reset, first, target, 0.65, false);
    CHECK(out.signal);
    out = mcusum_step(without_reset, second, target, 0.65, false);
    CHECK(out.statistic == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(out.signal);

    // signal comparison is >=, so a statistic exactly at the limit signals
    McusumState edge(1, 0.5);
    CHECK(mcusum_step(edge, first, target, 0.7, false).signal);
}

TEST_CASE("ewma chart matches the closed-form covariance") {
    const double inf = std::numeric_limits<double>::infinity();

    SUBCASE("matches a hand-computed scalar run") {
        const ChartTarget target(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
        MewmaState state(1, 0.5);
        const std::vector<double> xs = {1.0, -0.5, 0.25};
        const std::vector<double> want = {1.0, 0.0, 1.0 / 21.0};
        for (std::size_t i = 0; i < xs.size(); ++i) {
            Eigen::VectorXd c_hat(1);
            c_hat << xs[i];
            const StepOutcome out = mewma_step(state, c_hat, target, inf, true);
            CHECK(out.statistic == doctest::Approx(want[i]).epsilon(1e-12).scale(1.0));
            CHECK(out.t == static_cast<std::int64_t>(i + 1));
        }
    }

    SUBCASE("first step equals the squared Mahalanobis distance for any weight") {
        Rng rng(405);
        const Eigen::VectorXd c0 = random_vec(3, rng);
        const ChartTarget target(c0, random_spd(3, rng));
        const Eigen::VectorXd c_hat = c0 + random_vec(3, rng);
        for (double lambda : {0.05, 0.3, 0.7, 1.0}) {
            MewmaState state(3, lambda);
            const StepOutcome out = mewma_step(state, c_hat, target, inf, true);
            CHECK(out.statistic == doctest::Approx(target.mahalanobis(c_hat)).epsilon(1e-12));
        }
    }

    SUBCASE("weight one reproduces the squared distance at every step") {
        Rng rng(406);
        const Eigen::VectorXd c0 = random_vec(4, rng);
        const ChartTarget target(c0, random_spd(4, rng));
        MewmaState state(4, 1.0);
        for (int t = 0; t < 50; ++t) {
            const Eigen::VectorXd c_hat = c0 + random_vec(4, rng, 1.5);
            const StepOutcome out = mewma_step(state, c_hat, target, inf, true);
            CHECK(out.statistic == doctest::Approx(target.mahalanobis(c_hat)).epsilon(1e-12));
        }
    }

    SUBCASE("stays at zero when the process sits on target") {
        Rng rng(407);
        const Eigen::VectorXd c0 = random_vec(2, rng);
        const ChartTarget target(c0, random_spd(2, rng));
        MewmaState state(2, 0.2);
        for (int t = 0; t < 10; ++t) {
            CHECK(mewma_step(state, c0, target, inf, true).statistic == 0.0);
        }
    }

    SUBCASE("finite-horizon factor converges to the asymptotic covariance") {
        Rng rng(408);
        const double lambda = 0.3;
        const Eigen::VectorXd c0 = random_vec(3, rng);
        const ChartTarget target(c0, random_spd(3, rng));
        MewmaState state(3, lambda);
        StepOutcome out{};
        for (int t = 0; t < 45; ++t) {
            out = mewma_step(state, c0 + random_vec(3, rng, 0.7), target, inf, true);
        }
        // (1 - lambda)^(2 * 45) ~ 1e-14, so the finite and limiting forms agree
        const double asymptotic =
            state.l.dot(target.solve(state.l)) * (2.0 - lambda) / lambda;
        CHECK(out.statistic == doctest::Approx(asymptotic).epsilon(1e-9));
    }

    SUBCASE("validates its inputs") {
        CHECK_THROWS_AS(MewmaState(2, 0.0), Error);
        CHECK_THROWS_AS(MewmaState(2, -0.2), Error);
        CHECK_THROWS_AS(MewmaState(2, 1.0 + 1e-9), Error);
        CHECK_THROWS_AS(MewmaState(0, 0.5), DimensionMismatch);

        const ChartTarget target(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
        MewmaState state(3, 0.5);
        CHECK_THROWS_AS(mewma_step(state, Eigen::VectorXd::Zero(3), target, inf, true),
                        DimensionMismatch);
    }
}

TEST_CASE("ewma reset restarts the accumulator and the time index") {
    const ChartTarget target(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
    Eigen::VectorXd spike(1), probe(1);
    spike << 5.0;
    probe << 3.0;

    MewmaState fresh(1, 0.5);
    const double fresh_first = mewma_step(fresh, probe, target, 1e9, true).statistic;

    MewmaState state(1, 0.5);
    StepOutcome out = mewma_step(state, spike, target, 10.0, true);
    CHECK(out.signal); // 25 >= 10
    CHECK(state.t == 0);
    CHECK(state.l.isZero(0.0));

    out = mewma_step(state, probe, target, 1e9, true);
    CHECK(out.t == 1);
    CHECK(out.statistic == doctest::Approx(fresh_first).epsilon(1e-14));

    // without the reset the horizon keeps growing and history carries over
    MewmaState keep(1, 0.5);
    out = mewma_step(keep, spike, target, 10.0, false);
    CHECK(out.signal);
    out = mewma_step(keep, probe, target, 1e9, false);
    CHECK(out.t == 2);
    CHECK(out.statistic != doctest::Approx(fresh_first).epsilon(1e-12));
}

TEST_CASE("chart statistics are invariant to affine reparameterization") {
    Rng rng(409);
    const int p = 3;
    Eigen::MatrixXd a(p, p);
    a << 2.0, 0.3, -0.5, //
        0.1, 1.5, 0.2,   //
        -0.3, 0.4, 1.2;
    const Eigen::VectorXd shift = random_vec(p, rng, 3.0);

    const Eigen::VectorXd c0 = random_vec(p, rng);
    const Eigen::MatrixXd sigma = random_spd(p, rng);
    const ChartTarget plain(c0, sigma);
    const ChartTarget mapped(a * c0 + shift, a * sigma * a.transpose());

    std::vector<Eigen::VectorXd> series;
    for (int t = 0; t < 30; ++t) series.push_back(c0 + random_vec(p, rng, 1.2));

    McusumState cu_plain(p, 0.5), cu_mapped(p, 0.5);
    MewmaState ew_plain(p, 0.4), ew_mapped(p, 0.4);
    for (const Eigen::VectorXd& c_hat : series) {
        const Eigen::VectorXd c_mapped = a * c_hat + shift;
        CHECK(mapped.mahalanobis(c_mapped) ==
              doctest::Approx(plain.mahalanobis(c_hat)).epsilon(1e-8));

        const StepOutcome cu1 = mcusum_step(cu_plain, c_hat, plain, 1.5, true);
        const StepOutcome cu2 = mcusum_step(cu_mapped, c_mapped, mapped, 1.5, true);
        CHECK(cu2.statistic == doctest::Approx(cu1.statistic).epsilon(1e-8).scale(1.0));
        CHECK(cu2.signal == cu1.signal);

        const StepOutcome ew1 = mewma_step(ew_plain, c_hat, plain, 4.0, true);
        const StepOutcome ew2 = mewma_step(ew_mapped, c_mapped, mapped, 4.0, true);
        CHECK(ew2.statistic == doctest::Approx(ew1.statistic).epsilon(1e-8).scale(1.0));
        CHECK(ew2.signal == ew1.signal);
        CHECK(ew2.t == ew1.t);
    }
}

TEST_CASE("chart steps are deterministic") {
    Rng rng(410);
    const Eigen::VectorXd c0 = random_vec(2, rng);
    const Eigen::MatrixXd sigma = random_spd(2, rng);
    std::vector<Eigen::VectorXd> series;
    for (int t = 0; t < 12; ++t) series.push_back(c0 + random_vec(2, rng));

    auto run = [&] {
        const ChartTarget target(c0, sigma);
        McusumState cu(2, 0.4);
        MewmaState ew(2, 0.25);
        std::vector<double> stats;
        for (const Eigen::VectorXd& c_hat : series) {
            stats.push_back(mcusum_step(cu, c_hat, target, 2.0, true).statistic);
            stats.push_back(mewma_step(ew, c_hat, target, 7.0, true).statistic);
        }
        return stats;
    };
    CHECK(run() == run());
}
