#include <doctest.h>

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "netwatch/tergm.hpp"
#include "oracles.hpp"

using netwatch::DimensionMismatch;
using netwatch::Error;
using netwatch::NonConvergence;
using netwatch::OrderMismatch;
using netwatch::Rng;
using netwatch::WindowTooShort;
using netwatch::graph::DirectedGraph;
using netwatch::graph::GraphSeries;
using netwatch::stats::Term;
using netwatch::stats::TermSet;
using namespace netwatch::tergm;

namespace {

GraphSeries make_series(std::vector<DirectedGraph> graphs, std::int64_t start = 1) {
    return GraphSeries(std::move(graphs), start);
}

GraphSeries random_series(int n, std::size_t length, double density, std::uint64_t seed,
                          std::int64_t start = 1) {
    Rng rng(seed);
    std::vector<DirectedGraph> gs;
    for (std::size_t i = 0; i < length; ++i) gs.push_back(oracle::random_graph(n, density, rng));
    return make_series(std::move(gs), start);
}

// pooled pseudo-log-likelihood computed the slow way: one Bernoulli per cell
// per transition, design rows from literal statistic differences
double raw_pll(const GraphSeries& w, const TermSet& terms, const Eigen::VectorXd& th) {
    double ll = 0.0;
    for (std::size_t u = 1; u < w.length(); ++u) {
        const DirectedGraph& y = w.at_offset(u);
        const DirectedGraph& prev = w.at_offset(u - 1);
        for (int i = 0; i < y.order(); ++i)
            for (int j = 0; j < y.order(); ++j) {
                if (i == j) continue;
                const Eigen::VectorXd d = oracle::change_by_difference(terms, y, &prev, i, j);
                const double eta = th.dot(d);
                const double softplus = std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta)));
                ll += (y.edge(i, j) ? eta : 0.0) - softplus;
            }
    }
    return ll;
}

Eigen::VectorXd raw_pll_gradient(const GraphSeries& w, const TermSet& terms, const Eigen::VectorXd& th) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(th.size());
    for (std::size_t u = 1; u < w.length(); ++u) {
        const DirectedGraph& y = w.at_offset(u);
        const DirectedGraph& prev = w.at_offset(u - 1);
        for (int i = 0; i < y.order(); ++i)
            for (int j = 0; j < y.order(); ++j) {
                if (i == j) continue;
                const Eigen::VectorXd d = oracle::change_by_difference(terms, y, &prev, i, j);
                const double p = 1.0 / (1.0 + std::exp(-th.dot(d)));
                g += ((y.edge(i, j) ? 1.0 : 0.0) - p) * d;
            }
    }
    return g;
}

} // namespace

TEST_CASE("estimator names round-trip") {
    CHECK(std::string(estimator_name(EstimatorKind::ThetaHat)) == "theta_hat");
    CHECK(std::string(estimator_name(EstimatorKind::SBar)) == "sbar");
    CHECK(estimator_from_name("theta_hat") == EstimatorKind::ThetaHat);
    CHECK(estimator_from_name("sbar") == EstimatorKind::SBar);
    CHECK_THROWS_AS(estimator_from_name("mcmc"), Error);
}

TEST_CASE("edges-only fit is the logit of the pooled density") {
    const TermSet terms({Term::Edges});

    SUBCASE("balanced window lands exactly on zero") {
        // targets hold 2+4 = 6 ones out of 12 cells -> pooled density 1/2
        DirectedGraph g1(3), g2(3), g3(3);
        g2.set_edge(0, 1, true);
        g2.set_edge(1, 2, true);
        g3.set_edge(0, 1, true);
        g3.set_edge(1, 0, true);
        g3.set_edge(2, 0, true);
        g3.set_edge(2, 1, true);
        const auto fit = mple_fit(make_series({g1, g2, g3}), terms);
        CHECK(fit.theta[0] == 0.0);
        CHECK(fit.converged);
        CHECK(fit.iterations == 0); // gradient vanishes at the starting point
        CHECK(fit.pooled_dyads == 12);
    }

    SUBCASE("9 of 12 ones gives log 3") {
        DirectedGraph g1(3), g2(3), g3(3);
        const std::vector<std::pair<int, int>> e2{{0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 0}};
        const std::vector<std::pair<int, int>> e3{{0, 1}, {1, 0}, {1, 2}, {2, 1}};
        for (auto [i, j] : e2) g2.set_edge(i, j, true);
        for (auto [i, j] : e3) g3.set_edge(i, j, true);
        const auto fit = mple_fit(make_series({g1, g2, g3}), terms);
        CHECK(fit.theta[0] == doctest::Approx(std::log(3.0)).epsilon(1e-7));
    }

    SUBCASE("random windows match the analytic intercept") {
        for (std::uint64_t seed : {11u, 12u, 13u}) {
            const auto window = random_series(6, 4, 0.35, seed);
            std::int64_t ones = 0;
            for (std::size_t u = 1; u < window.length(); ++u)
                ones += oracle::edges(window.at_offset(u));
            const double dbar =
                static_cast<double>(ones) / (30.0 * static_cast<double>(window.length() - 1));
            const auto fit = mple_fit(window, terms);
            CHECK(fit.theta[0] == doctest::Approx(std::log(dbar / (1.0 - dbar))).epsilon(1e-8));
            CHECK(fit.converged);
            CHECK(fit.pooled_dyads == 90);
        }
    }
}

TEST_CASE("fit input validation") {
    const TermSet terms({Term::Edges});
    Rng rng(5);
    const auto one = make_series({oracle::random_graph(4, 0.4, rng)});
    CHECK_THROWS_AS(mple_fit(one, terms), WindowTooShort);
    const auto two = random_series(4, 2, 0.4, 6);
    CHECK_THROWS_AS(mple_fit(two, terms, 0), Error);
    CHECK_THROWS_AS(mple_fit(two, terms, 2), Error);
}

TEST_CASE("all-equal responses report separation") {
    const TermSet terms({Term::Edges});
    DirectedGraph full(5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            if (i != j) full.set_edge(i, j, true);

    CHECK_THROWS_AS(mple_fit(make_series({full, full, full}), terms), NonConvergence);
    CHECK_THROWS_WITH_AS(mple_fit(make_series({full, full}), terms),
                         doctest::Contains("separable"), NonConvergence);
    CHECK_THROWS_AS(mple_fit(make_series({DirectedGraph(5), DirectedGraph(5)}), terms),
                    NonConvergence);
}

TEST_CASE("dyad-separable fit equals the exact conditional likelihood optimum") {
    // with only Edges and Stability the cells are independent given the
    // previous graph, so the pseudolikelihood IS the likelihood; maximize it
    // independently with a hand-rolled two-parameter Newton solver
    const TermSet terms({Term::Edges, Term::Stability});
    const auto window = random_series(4, 4, 0.45, 91);

    double t0 = 0.0, t1 = 0.0;
    for (int it = 0; it < 200; ++it) {
        double g0 = 0, g1 = 0, h00 = 0, h01 = 0, h11 = 0;
        for (std::size_t u = 1; u < window.length(); ++u) {
            const DirectedGraph& y = window.at_offset(u);
            const DirectedGraph& prev = window.at_offset(u - 1);
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) {
                    if (i == j) continue;
                    const double x1 = prev.edge(i, j) ? 1.0 : -1.0;
                    const double p = 1.0 / (1.0 + std::exp(-(t0 + t1 * x1)));
                    const double r = (y.edge(i, j) ? 1.0 : 0.0) - p;
                    g0 += r;
                    g1 += x1 * r;
                    const double w = p * (1.0 - p);
                    h00 += w;
                    h01 += w * x1;
                    h11 += w * x1 * x1;
                }
        }
        if (std::max(std::abs(g0), std::abs(g1)) < 1e-12) break;
        const double det = h00 * h11 - h01 * h01;
        t0 += (h11 * g0 - h01 * g1) / det;
        t1 += (-h01 * g0 + h00 * g1) / det;
    }

    const auto fit = mple_fit(window, terms);
    CHECK(fit.theta[0] == doctest::Approx(t0).epsilon(1e-6));
    CHECK(fit.theta[1] == doctest::Approx(t1).epsilon(1e-6));
    CHECK(fit.converged);
}

TEST_CASE("gradient vanishes and the estimate is a local maximum") {
    const TermSet terms({Term::Edges, Term::Triangles, Term::AsymmetricDyads, Term::Stability});
    const auto window = random_series(7, 5, 0.3, 404);
    const auto fit = mple_fit(window, terms);
    REQUIRE(fit.converged);

    // gradient recomputed from literal per-cell statistic differences
    const Eigen::VectorXd g = raw_pll_gradient(window, terms, fit.theta);
    CHECK(g.lpNorm<Eigen::Infinity>() < 1e-6);

    const double best = raw_pll(window, terms, fit.theta);
    Rng rng(7);
    for (int k = 0; k < 8; ++k) {
        Eigen::VectorXd bump(4);
        for (int d = 0; d < 4; ++d) bump[d] = 0.05 * (2.0 * rng.uniform01() - 1.0);
        CHECK(raw_pll(window, terms, fit.theta + bump) <= best + 1e-12);
    }
}

TEST_CASE("window statistic averages") {
    const TermSet terms({Term::Edges, Term::MutualDyads, Term::Stability});

    SUBCASE("z=1 is the single transition statistic") {
        const auto ctx = random_series(5, 2, 0.4, 21);
        const auto est = sbar_estimate(ctx, terms);
        const DirectedGraph& prev = ctx.at_offset(0);
        const Eigen::VectorXd want = oracle::stats_of(terms, ctx.at_offset(1), &prev);
        CHECK((est.values - want).lpNorm<Eigen::Infinity>() == 0.0);
        CHECK(est.kind == EstimatorKind::SBar);
        CHECK(est.z == 1);
        CHECK(est.v == 1);
        CHECK(est.t == ctx.end_index());
    }

    SUBCASE("constant series reproduces single-graph values") {
        Rng rng(22);
        const auto g = oracle::random_graph(6, 0.4, rng);
        const auto est = sbar_estimate(make_series(std::vector<DirectedGraph>(5, g)), terms);
        CHECK(est.values[0] == doctest::Approx(static_cast<double>(oracle::edges(g))));
        CHECK(est.values[1] == doctest::Approx(static_cast<double>(oracle::mutual_dyads(g))));
        CHECK(est.values[2] == doctest::Approx(30.0)); // identical lag: all cells stable
        CHECK(est.z == 4);
    }

    SUBCASE("z=2 is the mean of the two transition statistics") {
        const auto ctx = random_series(5, 3, 0.5, 23);
        const auto est = sbar_estimate(ctx, terms);
        const DirectedGraph& p0 = ctx.at_offset(0);
        const DirectedGraph& p1 = ctx.at_offset(1);
        const Eigen::VectorXd want = 0.5 * (oracle::stats_of(terms, ctx.at_offset(1), &p0) +
                                            oracle::stats_of(terms, ctx.at_offset(2), &p1));
        CHECK((est.values - want).lpNorm<Eigen::Infinity>() < 1e-12);
    }

    SUBCASE("too-short context") {
        Rng rng(24);
        const auto g = oracle::random_graph(4, 0.3, rng);
        CHECK_THROWS_AS(sbar_estimate(make_series({g}), terms), WindowTooShort);
    }
}

TEST_CASE("rolling estimate counts and time labels") {
    const TermSet terms({Term::Edges});
    const auto series = random_series(5, 15, 0.4, 31);

    const auto dense = estimate_series(series, terms, 7, 1, EstimatorKind::ThetaHat, 1);
    REQUIRE(dense.size() == 8); // T - z - v + 1
    CHECK(dense.front().t == 8);
    CHECK(dense.back().t == 15);
    for (const auto& e : dense) {
        CHECK(e.z == 7);
        CHECK(e.v == 1);
        CHECK(e.kind == EstimatorKind::ThetaHat);
    }

    const auto sparse = estimate_series(series, terms, 7, 1, EstimatorKind::SBar, 7);
    REQUIRE(sparse.size() == 2); // floor((T-v)/z)
    CHECK(sparse[0].t == 8);
    CHECK(sparse[1].t == 15);

    CHECK(estimate_count(15, 7, 1, 1) == 8);
    CHECK(estimate_count(15, 7, 1, 7) == 2);
    CHECK(estimate_count(8, 7, 1, 1) == 1);
    CHECK(estimate_count(7, 7, 1, 1) == 0);

    CHECK_THROWS_AS(estimate_series(series, terms, 15, 1, EstimatorKind::ThetaHat, 1), WindowTooShort);
    CHECK_THROWS_AS(estimate_series(series, terms, 7, 1, EstimatorKind::ThetaHat, 0), Error);
}

TEST_CASE("constant series gives identical statistic estimates") {
    const TermSet terms = TermSet::monitoring_default();
    Rng rng(32);
    const auto g = oracle::random_graph(6, 0.35, rng);
    const auto series = make_series(std::vector<DirectedGraph>(9, g));
    const auto ests = estimate_series(series, terms, 3, 1, EstimatorKind::SBar);
    REQUIRE(ests.size() == 6); // T - z - v + 1
    for (const auto& e : ests)
        CHECK((e.values - ests.front().values).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("stride variants agree on shared time points") {
    const auto series = random_series(6, 17, 0.35, 33);
    for (EstimatorKind kind : {EstimatorKind::ThetaHat, EstimatorKind::SBar}) {
        const TermSet terms = kind == EstimatorKind::ThetaHat
                                  ? TermSet({Term::Edges, Term::Stability})
                                  : TermSet::monitoring_default();
        const auto dense = estimate_series(series, terms, 4, 1, kind, 1);
        const auto sparse = estimate_series(series, terms, 4, 1, kind, 4);
        REQUIRE(!sparse.empty());
        for (const auto& s : sparse) {
            bool found = false;
            for (const auto& d : dense)
                if (d.t == s.t) {
                    CHECK((d.values - s.values).lpNorm<Eigen::Infinity>() == 0.0);
                    found = true;
                }
            CHECK(found);
        }
    }
}

TEST_CASE("rolling estimates equal direct per-window fits") {
    const auto series = random_series(6, 12, 0.4, 34);

    SUBCASE("coefficients") {
        const TermSet terms({Term::Edges, Term::Triangles, Term::Stability});
        const int z = 5;
        for (const auto& est : estimate_series(series, terms, z, 1, EstimatorKind::ThetaHat)) {
            const auto direct = mple_fit(series.slice(est.t - z + 1, est.t), terms);
            CHECK((est.values - direct.theta).lpNorm<Eigen::Infinity>() < 1e-12);
        }
    }

    SUBCASE("statistic averages") {
        const TermSet terms = TermSet::monitoring_default();
        const int z = 5;
        for (const auto& est : estimate_series(series, terms, z, 1, EstimatorKind::SBar)) {
            const auto direct = sbar_estimate(series.slice(est.t - z, est.t), terms);
            CHECK((est.values - direct.values).lpNorm<Eigen::Infinity>() < 1e-12);
        }
    }
}

TEST_CASE("estimates are invariant to node relabeling") {
    const TermSet terms({Term::Edges, Term::Triangles, Term::AsymmetricDyads, Term::Stability});
    const auto series = random_series(8, 6, 0.3, 35);
    const std::vector<int> perm{3, 7, 0, 5, 1, 6, 2, 4};
    std::vector<DirectedGraph> relabeled;
    for (std::size_t u = 0; u < series.length(); ++u)
        relabeled.push_back(oracle::permuted(series.at_offset(u), perm));

    const auto a = mple_fit(series.slice(1, 6), terms);
    const auto b = mple_fit(make_series(std::move(relabeled)), terms);
    CHECK((a.theta - b.theta).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("stream interface matches batch estimation") {
    const auto series = random_series(5, 11, 0.4, 36);
    const TermSet terms({Term::Edges, Term::Stability});

    for (EstimatorKind kind : {EstimatorKind::ThetaHat, EstimatorKind::SBar}) {
        EstimateStream stream(terms, 4, 1, kind);
        const auto batch = estimate_series(series, terms, 4, 1, kind, 1);
        std::size_t next = 0;
        for (std::size_t o = 0; o < series.length(); ++o) {
            stream.feed(series.at_offset(o), series.start_index() + static_cast<std::int64_t>(o));
            if (stream.ready()) {
                REQUIRE(next < batch.size());
                const auto est = stream.estimate();
                CHECK(est.t == batch[next].t);
                CHECK((est.values - batch[next].values).lpNorm<Eigen::Infinity>() == 0.0);
                ++next;
            }
        }
        CHECK(next == batch.size());
    }
}

TEST_CASE("stream validation") {
    const TermSet terms({Term::Edges});
    EstimateStream stream(terms, 3, 1, EstimatorKind::ThetaHat);
    Rng rng(37);
    stream.feed(oracle::random_graph(4, 0.4, rng), 1);
    CHECK(!stream.ready());
    CHECK_THROWS_AS(stream.estimate(), WindowTooShort);
    CHECK_THROWS_AS(stream.feed(oracle::random_graph(5, 0.4, rng), 2), OrderMismatch);
    CHECK(stream.graphs_seen() == 1);

    CHECK_THROWS_AS(EstimateStream(terms, 1, 1, EstimatorKind::ThetaHat), WindowTooShort);
    CHECK_NOTHROW(EstimateStream(terms, 1, 1, EstimatorKind::SBar));
}

TEST_CASE("iteration budget returns a non-converged fit") {
    DirectedGraph g1(3), g2(3), g3(3);
    const std::vector<std::pair<int, int>> e2{{0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 0}};
    const std::vector<std::pair<int, int>> e3{{0, 1}, {1, 0}, {1, 2}, {2, 1}};
    for (auto [i, j] : e2) g2.set_edge(i, j, true);
    for (auto [i, j] : e3) g3.set_edge(i, j, true);
    FitOptions opts;
    opts.max_iterations = 1;
    const auto fit = mple_fit(make_series({g1, g2, g3}), TermSet({Term::Edges}), 1, opts);
    CHECK(!fit.converged);
    CHECK(fit.iterations == 1);
    CHECK(std::isfinite(fit.theta[0]));
}

TEST_CASE("gibbs draws hit analytic densities") {
    Rng rng(41);

    SUBCASE("zero coefficients toggle every cell to a fair coin") {
        const TermSet terms = TermSet::monitoring_default();
        const Eigen::VectorXd theta = Eigen::VectorXd::Zero(4);
        const DirectedGraph start(20);
        double total = 0.0;
        const int draws = 200;
        for (int d = 0; d < draws; ++d)
            total += static_cast<double>(simulate_from_fit(theta, terms, start, 2, rng).edge_count());
        const double mean = total / draws;
        const double se = std::sqrt(380.0 * 0.25 / draws);
        CHECK(std::abs(mean - 190.0) < 3.0 * se);
    }

    SUBCASE("edges-only with logit(0.2) targets density 0.2") {
        const TermSet terms({Term::Edges});
        Eigen::VectorXd theta(1);
        theta[0] = std::log(0.2 / 0.8);
        const DirectedGraph start(20);
        double total = 0.0;
        const int draws = 200;
        for (int d = 0; d < draws; ++d)
            total += static_cast<double>(simulate_from_fit(theta, terms, start, 2, rng).edge_count());
        const double mean = total / draws / 380.0;
        const double se = std::sqrt(0.2 * 0.8 / (380.0 * draws));
        CHECK(std::abs(mean - 0.2) < 3.0 * se);
    }

    SUBCASE("strongly negative edges coefficient empties the graph") {
        const TermSet terms({Term::Edges});
        Eigen::VectorXd theta(1);
        theta[0] = -10.0;
        Rng dense_rng(42);
        const auto start = oracle::random_graph(20, 0.5, dense_rng);
        const auto y = simulate_from_fit(theta, terms, start, 3, dense_rng);
        CHECK(static_cast<double>(y.edge_count()) / 380.0 < 0.001);
    }

    SUBCASE("validation and determinism") {
        const TermSet terms({Term::Edges});
        Eigen::VectorXd theta(2);
        theta << 0.0, 0.0;
        const DirectedGraph start(4);
        CHECK_THROWS_AS(simulate_from_fit(theta, terms, start, 1, rng), DimensionMismatch);
        Eigen::VectorXd ok(1);
        ok << 0.3;
        CHECK_THROWS_AS(simulate_from_fit(ok, terms, start, 0, rng), Error);
        Rng r1(77), r2(77);
        const auto a = simulate_from_fit(ok, terms, start, 5, r1);
        const auto b = simulate_from_fit(ok, terms, start, 5, r2);
        CHECK(a == b);
    }
}

TEST_CASE("gibbs matches the exact three-node conditional law") {
    // Edges + MutualDyads does not involve the lag, so the conditional model
    // is a static exponential family over the 64 labeled graphs
    const TermSet terms({Term::Edges, Term::MutualDyads});
    Eigen::VectorXd theta(2);
    theta << -0.3, 0.8;

    std::array<double, 64> exact{};
    double zsum = 0.0;
    for (unsigned code = 0; code < 64; ++code) {
        const auto g = oracle::graph_from_code3(code);
        exact[code] = std::exp(theta[0] * static_cast<double>(oracle::edges(g)) +
                               theta[1] * static_cast<double>(oracle::mutual_dyads(g)));
        zsum += exact[code];
    }
    for (auto& p : exact) p /= zsum;

    Rng rng(2025);
    const DirectedGraph start(3);
    std::array<double, 64> freq{};
    const int draws = 60000;
    for (int d = 0; d < draws; ++d)
        freq[oracle::code_of_graph3(simulate_from_fit(theta, terms, start, 10, rng))] += 1.0;

    double tv = 0.0;
    for (unsigned code = 0; code < 64; ++code) tv += std::abs(freq[code] / draws - exact[code]);
    CHECK(tv / 2.0 < 0.02);
}

TEST_CASE("triad census") {
    SUBCASE("pinned three-node configurations") {
        auto census_of = [](std::initializer_list<std::pair<int, int>> edges) {
            DirectedGraph g(3);
            for (auto [i, j] : edges) g.set_edge(i, j, true);
            return triad_census(g);
        };
        auto expect_single = [](const std::vector<std::int64_t>& census, std::size_t cls) {
            for (std::size_t c = 0; c < 16; ++c) CHECK(census[c] == (c == cls ? 1 : 0));
        };
        expect_single(census_of({}), 0);                                            // 003
        expect_single(census_of({{0, 1}}), 1);                                      // 012
        expect_single(census_of({{0, 1}, {1, 0}}), 2);                              // 102
        expect_single(census_of({{1, 0}, {1, 2}}), 3);                              // 021D
        expect_single(census_of({{0, 1}, {2, 1}}), 4);                              // 021U
        expect_single(census_of({{0, 1}, {1, 2}}), 5);                              // 021C
        expect_single(census_of({{0, 1}, {1, 0}, {2, 1}}), 6);                      // 111D
        expect_single(census_of({{0, 1}, {1, 0}, {1, 2}}), 7);                      // 111U
        expect_single(census_of({{0, 1}, {0, 2}, {2, 1}}), 8);                      // 030T
        expect_single(census_of({{0, 1}, {1, 2}, {2, 0}}), 9);                      // 030C
        expect_single(census_of({{0, 1}, {1, 0}, {1, 2}, {2, 1}}), 10);             // 201
        expect_single(census_of({{1, 0}, {1, 2}, {0, 2}, {2, 0}}), 11);             // 120D
        expect_single(census_of({{0, 1}, {2, 1}, {0, 2}, {2, 0}}), 12);             // 120U
        expect_single(census_of({{0, 1}, {1, 2}, {0, 2}, {2, 0}}), 13);             // 120C
        expect_single(census_of({{0, 1}, {1, 2}, {2, 1}, {0, 2}, {2, 0}}), 14);     // 210
        expect_single(census_of({{0, 1}, {1, 0}, {0, 2}, {2, 0}, {1, 2}, {2, 1}}), 15); // 300
    }

    SUBCASE("the 64 labeled graphs split into known class sizes") {
        const std::vector<std::int64_t> want{1, 6, 3, 3, 3, 6, 6, 6, 6, 2, 3, 3, 3, 6, 6, 1};
        std::vector<std::int64_t> got(16, 0);
        for (unsigned code = 0; code < 64; ++code) {
            const auto census = triad_census(oracle::graph_from_code3(code));
            std::int64_t placed = 0;
            for (std::size_t c = 0; c < 16; ++c) {
                got[c] += census[c];
                placed += census[c];
            }
            CHECK(placed == 1);
        }
        CHECK(got == want);
    }

    SUBCASE("census sums to the number of triples") {
        Rng rng(51);
        for (int rep = 0; rep < 10; ++rep) {
            const auto g = oracle::random_graph(8, 0.4, rng);
            std::int64_t total = 0;
            for (std::int64_t c : triad_census(g)) total += c;
            CHECK(total == 56); // C(8,3)
        }
        DirectedGraph full(5);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j)
                if (i != j) full.set_edge(i, j, true);
        const auto census = triad_census(full);
        CHECK(census[15] == 10);
        CHECK(triad_class_names().size() == 16);
        CHECK(triad_class_names()[15] == "300");
    }
}

TEST_CASE("goodness of fit") {
    const TermSet terms({Term::Edges, Term::Stability});
    Eigen::VectorXd truth(2);
    truth << -1.2, 0.8;

    // evolve a short series from the model itself (cells are independent
    // given the lag, so one sweep is an exact draw)
    Rng gen(61);
    std::vector<DirectedGraph> gs{oracle::random_graph(30, 0.17, gen)};
    for (int u = 1; u < 8; ++u)
        gs.push_back(simulate_from_fit(truth, terms, gs.back(), 1, gen));
    const auto observed = make_series(std::move(gs));

    SUBCASE("self-consistency covers most bins") {
        const auto fit = mple_fit(observed, terms);
        Rng rng(62);
        const auto report = gof_summary(fit, terms, observed, 60, rng, 3);
        CHECK(report.transitions == 7);
        CHECK(report.n_sims == 60);
        REQUIRE(report.families.size() == 5);
        CHECK(report.families[0].name == "in_degree");
        CHECK(report.families[4].name == "triad_census");
        CHECK(report.families[4].bins.size() == 16);
        CHECK(report.bin_count() >= 20);
        CHECK(report.coverage() >= 0.8);
    }

    SUBCASE("single simulation gives degenerate boxes") {
        const auto fit = mple_fit(observed, terms);
        Rng rng(63);
        const auto report = gof_summary(fit, terms, observed.slice(1, 2), 1, rng, 2);
        for (const auto& fam : report.families)
            for (const auto& bin : fam.bins) {
                CHECK(bin.min == bin.max);
                CHECK(bin.q1 == bin.median);
            }
    }

    SUBCASE("empty graphs put every pair at infinite distance") {
        TergmFit fit;
        fit.theta = Eigen::VectorXd::Constant(1, -8.0);
        const TermSet edges_only({Term::Edges});
        const auto empty_series = make_series({DirectedGraph(8), DirectedGraph(8)});
        Rng rng(64);
        const auto report = gof_summary(fit, edges_only, empty_series, 30, rng, 2);
        const GofFamily* geo = nullptr;
        for (const auto& fam : report.families)
            if (fam.name == "geodesic") geo = &fam;
        REQUIRE(geo != nullptr);
        CHECK(geo->bins.back().label == "Inf");
        CHECK(geo->bins.back().observed_median == 56.0); // all 8*7 ordered pairs
        CHECK(geo->bins.back().covered);
    }

    SUBCASE("reports are reproducible and job-count independent") {
        const auto fit = mple_fit(observed, terms);
        Rng r1(65), r2(65), r3(65);
        const auto a = gof_summary(fit, terms, observed.slice(1, 4), 10, r1, 2, 1);
        const auto b = gof_summary(fit, terms, observed.slice(1, 4), 10, r2, 2, 1);
        const auto c = gof_summary(fit, terms, observed.slice(1, 4), 10, r3, 2, 3);
        CHECK(a.to_json() == b.to_json());
        CHECK(a.to_json() == c.to_json());
    }

    SUBCASE("validation") {
        const auto fit = mple_fit(observed, terms);
        Rng rng(66);
        CHECK_THROWS_AS(gof_summary(fit, terms, observed, 0, rng), Error);
        CHECK_THROWS_AS(gof_summary(fit, terms, observed.slice(1, 1), 5, rng), WindowTooShort);
        TergmFit bad;
        bad.theta = Eigen::VectorXd::Zero(3);
        CHECK_THROWS_AS(gof_summary(bad, terms, observed, 5, rng), DimensionMismatch);
    }
}
