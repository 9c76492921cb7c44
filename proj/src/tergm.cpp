#include "netwatch/tergm.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <utility>

#include <json.hpp>

#include "netwatch/parallel.hpp"

namespace netwatch::tergm {

using graph::DirectedGraph;
using graph::GraphSeries;
using stats::Term;
using stats::TermSet;
using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* estimator_name(EstimatorKind k) {
    return k == EstimatorKind::ThetaHat ? "theta_hat" : "sbar";
}

EstimatorKind estimator_from_name(const std::string& name) {
    if (name == "theta_hat") return EstimatorKind::ThetaHat;
    if (name == "sbar") return EstimatorKind::SBar;
    throw Error("unknown estimator kind: " + name + " (expected theta_hat or sbar)");
}

namespace {

void check_lag(int v) {
    if (v != 1)
        throw Error("only lag v=1 is supported (got v=" + std::to_string(v) + ")");
}

/* Covariate-class layout for the pooled logistic regression.  Every dyad row
 * is determined by (triangle change, reverse-tie bit, previous-value bit),
 * so responses aggregate into at most (4(n-2)+1)*4 weighted classes instead
 * of n(n-1)*(z-v) individual rows. */
struct AggLayout {
    bool use_tri = false, use_rev = false, use_prev = false;
    int classes = 4;

    AggLayout() = default;
    AggLayout(const TermSet& terms, int n) {
        use_tri = terms.contains(Term::Triangles);
        use_rev = terms.contains(Term::AsymmetricDyads) || terms.contains(Term::MutualDyads);
        use_prev = terms.contains(Term::Stability);
        const int tri_levels = use_tri ? 4 * (n - 2) + 1 : 1;
        classes = tri_levels * 4;
    }
};

struct TransitionAgg {
    std::vector<std::int32_t> total, ones;

    void reset(int classes) {
        total.assign(classes, 0);
        ones.assign(classes, 0);
    }
};

void aggregate_transition(const DirectedGraph& y, const DirectedGraph& prev, const AggLayout& lay,
                          TransitionAgg& agg) {
    const int n = y.order();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const int tri = lay.use_tri ? static_cast<int>(stats::triangle_change(y, i, j)) : 0;
            const int rev = lay.use_rev && y.edge(j, i) ? 1 : 0;
            const int pv = lay.use_prev && prev.edge(i, j) ? 1 : 0;
            const int cls = (tri * 2 + rev) * 2 + pv;
            ++agg.total[cls];
            if (y.edge(i, j)) ++agg.ones[cls];
        }
    }
}

// pooled counts expanded into dense regression inputs
struct PooledDesign {
    MatrixXd x;      // one row per populated class
    VectorXd total, ones;
    std::int64_t pooled = 0;
};

PooledDesign expand_design(const std::vector<std::int64_t>& total, const std::vector<std::int64_t>& ones,
                           const TermSet& terms) {
    std::ptrdiff_t rows = 0;
    for (std::int64_t c : total)
        if (c > 0) ++rows;

    PooledDesign d;
    const auto p = static_cast<std::ptrdiff_t>(terms.p());
    d.x.resize(rows, p);
    d.total.resize(rows);
    d.ones.resize(rows);

    std::ptrdiff_t r = 0;
    for (std::size_t cls = 0; cls < total.size(); ++cls) {
        if (total[cls] <= 0) continue;
        const int pv = static_cast<int>(cls) & 1;
        const int rev = (static_cast<int>(cls) >> 1) & 1;
        const int tri = static_cast<int>(cls) >> 2;
        for (std::ptrdiff_t k = 0; k < p; ++k) {
            switch (terms.terms()[static_cast<std::size_t>(k)]) {
                case Term::Edges: d.x(r, k) = 1.0; break;
                case Term::Triangles: d.x(r, k) = tri; break;
                case Term::AsymmetricDyads: d.x(r, k) = rev ? -1.0 : 1.0; break;
                case Term::MutualDyads: d.x(r, k) = rev ? 1.0 : 0.0; break;
                case Term::Stability: d.x(r, k) = pv ? 1.0 : -1.0; break;
            }
        }
        d.total[r] = static_cast<double>(total[cls]);
        d.ones[r] = static_cast<double>(ones[cls]);
        d.pooled += total[cls];
        ++r;
    }
    return d;
}

double pooled_loglik(const PooledDesign& d, const VectorXd& theta) {
    const VectorXd eta = d.x * theta;
    // log(1+e^eta) computed stably
    const Eigen::ArrayXd softplus =
        eta.array().max(0.0) + (-eta.array().abs()).exp().log1p();
    return d.ones.dot(eta) - d.total.dot(softplus.matrix());
}

TergmFit newton_fit(const PooledDesign& d, const TermSet& terms, const FitOptions& opts) {
    const auto p = static_cast<std::ptrdiff_t>(terms.p());
    VectorXd theta = VectorXd::Zero(p);
    double ll = pooled_loglik(d, theta);

    auto iteration_log = [&](int iter, double gnorm) {
        return " (after " + std::to_string(iter) + " iterations, gradient max-norm " +
               std::to_string(gnorm) + ", log-pseudolikelihood " + std::to_string(ll) + ")";
    };

    int iter = 0;
    bool converged = false;
    for (; iter < opts.max_iterations; ++iter) {
        const VectorXd eta = d.x * theta;
        const Eigen::ArrayXd prob = ((-eta.array()).exp() + 1.0).inverse();
        const VectorXd resid = d.ones - d.total.cwiseProduct(prob.matrix());
        const VectorXd grad = d.x.transpose() * resid;
        const double gnorm = grad.lpNorm<Eigen::Infinity>();
        if (gnorm < opts.grad_tol) {
            converged = true;
            break;
        }

        const VectorXd w = (d.total.array() * prob * (1.0 - prob)).matrix();
        const MatrixXd info = d.x.transpose() * w.asDiagonal() * d.x; // negated Hessian
        Eigen::LDLT<MatrixXd> ldlt(info);
        const VectorXd step = ldlt.solve(grad);
        if (ldlt.info() != Eigen::Success || !step.allFinite() || grad.dot(step) <= 0.0)
            throw NonConvergence("pseudolikelihood information matrix is singular" +
                                 iteration_log(iter, gnorm));

        double alpha = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opts.max_halvings; ++h) {
            const VectorXd cand = theta + alpha * step;
            const double cand_ll = pooled_loglik(d, cand);
            if (std::isfinite(cand_ll) && cand_ll >= ll - 1e-10 * (std::abs(ll) + 1.0)) {
                theta = cand;
                ll = cand_ll;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted)
            throw NonConvergence("step halving failed to improve the pseudolikelihood" +
                                 iteration_log(iter, gnorm));
        if (theta.lpNorm<Eigen::Infinity>() > opts.theta_cap)
            throw NonConvergence("coefficient escaped to " +
                                 std::to_string(theta.lpNorm<Eigen::Infinity>()) +
                                 "; responses are likely separable" + iteration_log(iter + 1, gnorm));
    }

    TergmFit fit;
    fit.theta = std::move(theta);
    fit.iterations = iter;
    fit.converged = converged;
    fit.pooled_dyads = d.pooled;
    return fit;
}

// accumulate transitions (window[u-1] -> window[u]) for u = v..z-1
PooledDesign pooled_window_design(const GraphSeries& window, const TermSet& terms, int v) {
    const AggLayout lay(terms, window.order());
    TransitionAgg agg;
    agg.reset(lay.classes);
    std::vector<std::int64_t> total(static_cast<std::size_t>(lay.classes), 0);
    std::vector<std::int64_t> ones(static_cast<std::size_t>(lay.classes), 0);
    const auto z = static_cast<std::int64_t>(window.length());
    for (std::int64_t u = v; u < z; ++u) {
        std::fill(agg.total.begin(), agg.total.end(), 0);
        std::fill(agg.ones.begin(), agg.ones.end(), 0);
        aggregate_transition(window.at_offset(u), window.at_offset(u - 1), lay, agg);
        for (int c = 0; c < lay.classes; ++c) {
            total[static_cast<std::size_t>(c)] += agg.total[static_cast<std::size_t>(c)];
            ones[static_cast<std::size_t>(c)] += agg.ones[static_cast<std::size_t>(c)];
        }
    }
    return expand_design(total, ones, terms);
}

} // namespace

TergmFit mple_fit(const GraphSeries& window, const TermSet& terms, int v, const FitOptions& opts) {
    check_lag(v);
    if (static_cast<std::int64_t>(window.length()) < v + 1)
        throw WindowTooShort("pseudolikelihood window has " + std::to_string(window.length()) +
                             " graphs; need at least " + std::to_string(v + 1));
    return newton_fit(pooled_window_design(window, terms, v), terms, opts);
}

CharEstimate sbar_estimate(const GraphSeries& context, const TermSet& terms, int v) {
    check_lag(v);
    const auto ctx_len = static_cast<std::int64_t>(context.length());
    if (ctx_len < v + 1)
        throw WindowTooShort("statistic window has " + std::to_string(context.length()) +
                             " graphs; need at least " + std::to_string(v + 1) +
                             " (the leading " + std::to_string(v) + " supply predecessors)");
    const std::int64_t z = ctx_len - v;
    VectorXd sum = VectorXd::Zero(static_cast<std::ptrdiff_t>(terms.p()));
    for (std::int64_t u = v; u < ctx_len; ++u) {
        const DirectedGraph& prev = context.at_offset(u - 1);
        sum += stats::compute_stats(terms, context.at_offset(u), &prev);
    }
    CharEstimate est;
    est.values = sum / static_cast<double>(z);
    est.kind = EstimatorKind::SBar;
    est.t = context.end_index();
    est.z = static_cast<int>(z);
    est.v = v;
    return est;
}

struct EstimateStream::Impl {
    TermSet terms;
    int z, v;
    EstimatorKind kind;
    FitOptions opts;

    int n = 0;
    AggLayout lay;
    std::int64_t seen = 0;
    std::int64_t last_t = 0;
    std::optional<DirectedGraph> prev;
    std::deque<TransitionAgg> ring;     // ThetaHat: last z-v transition classes
    std::deque<VectorXd> stat_ring;     // SBar: last z transition statistics

    Impl(TermSet terms_, int z_, int v_, EstimatorKind kind_, FitOptions opts_)
        : terms(std::move(terms_)), z(z_), v(v_), kind(kind_), opts(opts_) {
        check_lag(v);
        // a coefficient window needs at least one transition inside it; a
        // statistic window only needs one term in the average
        const int min_z = kind == EstimatorKind::ThetaHat ? v + 1 : 1;
        if (z < min_z)
            throw WindowTooShort("window size " + std::to_string(z) + " is below " +
                                 std::to_string(min_z));
    }

    void feed(const DirectedGraph& y, std::int64_t t) {
        if (n == 0) {
            n = y.order();
            lay = AggLayout(terms, n);
        } else if (y.order() != n) {
            throw OrderMismatch("stream graph order changed from " + std::to_string(n) + " to " +
                                std::to_string(y.order()));
        }
        if (prev) {
            if (kind == EstimatorKind::ThetaHat) {
                const std::size_t cap = static_cast<std::size_t>(z - v);
                TransitionAgg agg;
                if (ring.size() == cap) { // recycle the evicted buffer
                    agg = std::move(ring.front());
                    ring.pop_front();
                    std::fill(agg.total.begin(), agg.total.end(), 0);
                    std::fill(agg.ones.begin(), agg.ones.end(), 0);
                } else {
                    agg.reset(lay.classes);
                }
                aggregate_transition(y, *prev, lay, agg);
                ring.push_back(std::move(agg));
            } else {
                stat_ring.push_back(stats::compute_stats(terms, y, &*prev));
                if (stat_ring.size() > static_cast<std::size_t>(z)) stat_ring.pop_front();
            }
        }
        prev = y;
        last_t = t;
        ++seen;
    }

    bool ready() const { return seen >= z + v; }

    CharEstimate estimate() const {
        if (!ready())
            throw WindowTooShort("stream has seen " + std::to_string(seen) + " graphs; needs " +
                                 std::to_string(z + v));
        CharEstimate est;
        est.kind = kind;
        est.t = last_t;
        est.z = z;
        est.v = v;
        if (kind == EstimatorKind::ThetaHat) {
            std::vector<std::int64_t> total(static_cast<std::size_t>(lay.classes), 0);
            std::vector<std::int64_t> ones(static_cast<std::size_t>(lay.classes), 0);
            for (const TransitionAgg& agg : ring)
                for (int c = 0; c < lay.classes; ++c) {
                    total[static_cast<std::size_t>(c)] += agg.total[static_cast<std::size_t>(c)];
                    ones[static_cast<std::size_t>(c)] += agg.ones[static_cast<std::size_t>(c)];
                }
            est.values = newton_fit(expand_design(total, ones, terms), terms, opts).theta;
        } else {
            VectorXd sum = VectorXd::Zero(static_cast<std::ptrdiff_t>(terms.p()));
            for (const VectorXd& s : stat_ring) sum += s;
            est.values = sum / static_cast<double>(z);
        }
        return est;
    }
};

EstimateStream::EstimateStream(const TermSet& terms, int z, int v, EstimatorKind kind, FitOptions opts)
    : impl_(std::make_unique<Impl>(terms, z, v, kind, opts)) {}

EstimateStream::~EstimateStream() = default;
EstimateStream::EstimateStream(EstimateStream&&) noexcept = default;
EstimateStream& EstimateStream::operator=(EstimateStream&&) noexcept = default;

void EstimateStream::feed(const DirectedGraph& y, std::int64_t t) { impl_->feed(y, t); }
bool EstimateStream::ready() const { return impl_->ready(); }
CharEstimate EstimateStream::estimate() const { return impl_->estimate(); }
std::int64_t EstimateStream::graphs_seen() const { return impl_->seen; }

std::int64_t estimate_count(std::int64_t series_length, int z, int v, int stride) {
    if (stride < 1) throw Error("stride must be >= 1");
    if (series_length < z + v) return 0;
    return 1 + (series_length - (z + v)) / stride;
}

std::vector<CharEstimate> estimate_series(const GraphSeries& series, const TermSet& terms, int z, int v,
                                          EstimatorKind kind, int stride) {
    check_lag(v);
    if (stride < 1) throw Error("stride must be >= 1");
    const auto len = static_cast<std::int64_t>(series.length());
    if (len < z + v)
        throw WindowTooShort("series length " + std::to_string(len) +
                             " is below z+v = " + std::to_string(z + v));

    EstimateStream stream(terms, z, v, kind);
    std::vector<CharEstimate> out;
    out.reserve(static_cast<std::size_t>(estimate_count(len, z, v, stride)));
    const std::int64_t first = z + v - 1;
    for (std::int64_t o = 0; o < len; ++o) {
        stream.feed(series.at_offset(o), series.start_index() + o);
        if (o >= first && (o - first) % stride == 0) out.push_back(stream.estimate());
    }
    return out;
}

DirectedGraph simulate_from_fit(const VectorXd& theta, const TermSet& terms, const DirectedGraph& y_prev,
                                int sweeps, Rng& rng) {
    if (sweeps < 1)
        throw Error("sweeps must be >= 1");
    if (theta.size() != static_cast<std::ptrdiff_t>(terms.p()))
        throw DimensionMismatch("coefficient length " + std::to_string(theta.size()) +
                                " != term count " + std::to_string(terms.p()));
    if (!theta.allFinite())
        throw Error("coefficients must be finite");

    DirectedGraph y = y_prev;
    const int n = y.order();
    const std::int64_t cells = y.dyad_cells();
    std::vector<std::int64_t> order(static_cast<std::size_t>(cells));
    for (std::int64_t c = 0; c < cells; ++c) order[static_cast<std::size_t>(c)] = c;

    for (int s = 0; s < sweeps; ++s) {
        rng.shuffle(order);
        for (std::int64_t c : order) {
            const int i = static_cast<int>(c / (n - 1));
            int j = static_cast<int>(c % (n - 1));
            if (j >= i) ++j;
            double eta = 0.0;
            for (std::size_t k = 0; k < terms.p(); ++k) {
                const double th = theta[static_cast<std::ptrdiff_t>(k)];
                switch (terms.terms()[k]) {
                    case Term::Edges: eta += th; break;
                    case Term::Triangles:
                        eta += th * static_cast<double>(stats::triangle_change(y, i, j));
                        break;
                    case Term::AsymmetricDyads: eta += y.edge(j, i) ? -th : th; break;
                    case Term::MutualDyads: eta += y.edge(j, i) ? th : 0.0; break;
                    case Term::Stability: eta += y_prev.edge(i, j) ? th : -th; break;
                }
            }
            const double p = 1.0 / (1.0 + std::exp(-eta));
            y.set_edge(i, j, rng.uniform01() < p);
        }
    }
    return y;
}

DirectedGraph simulate_from_fit(const TergmFit& fit, const TermSet& terms, const DirectedGraph& y_prev,
                                int sweeps, Rng& rng) {
    return simulate_from_fit(fit.theta, terms, y_prev, sweeps, rng);
}

namespace {

const std::array<std::uint8_t, 64>& triad_table() {
    // class membership of each labeled 3-node digraph, bit layout
    // (0->1, 1->0, 0->2, 2->0, 1->2, 2->1)
    static const std::array<std::uint8_t, 64> table = [] {
        using Edge = std::pair<int, int>;
        static const std::vector<std::vector<Edge>> patterns = {
            {},                                                // 003
            {{0, 1}},                                          // 012
            {{0, 1}, {1, 0}},                                  // 102
            {{1, 0}, {1, 2}},                                  // 021D
            {{0, 1}, {2, 1}},                                  // 021U
            {{0, 1}, {1, 2}},                                  // 021C
            {{0, 1}, {1, 0}, {2, 1}},                          // 111D
            {{0, 1}, {1, 0}, {1, 2}},                          // 111U
            {{0, 1}, {2, 1}, {0, 2}},                          // 030T
            {{1, 0}, {2, 1}, {0, 2}},                          // 030C
            {{0, 1}, {1, 0}, {1, 2}, {2, 1}},                  // 201
            {{1, 0}, {1, 2}, {0, 2}, {2, 0}},                  // 120D
            {{0, 1}, {2, 1}, {0, 2}, {2, 0}},                  // 120U
            {{0, 1}, {1, 2}, {0, 2}, {2, 0}},                  // 120C
            {{0, 1}, {1, 2}, {2, 1}, {0, 2}, {2, 0}},          // 210
            {{0, 1}, {1, 0}, {0, 2}, {2, 0}, {1, 2}, {2, 1}},  // 300
        };
        auto bit_of = [](int a, int b) {
            if (a == 0 && b == 1) return 0;
            if (a == 1 && b == 0) return 1;
            if (a == 0 && b == 2) return 2;
            if (a == 2 && b == 0) return 3;
            if (a == 1 && b == 2) return 4;
            return 5; // (2,1)
        };
        static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                        {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
        std::array<std::uint8_t, 64> t{};
        for (int code = 0; code < 64; ++code) {
            int cls = -1;
            for (std::size_t c = 0; c < patterns.size() && cls < 0; ++c) {
                for (const auto& perm : perms) {
                    int mapped = 0;
                    for (const Edge& e : patterns[c]) mapped |= 1 << bit_of(perm[e.first], perm[e.second]);
                    if (mapped == code) {
                        cls = static_cast<int>(c);
                        break;
                    }
                }
            }
            t[static_cast<std::size_t>(code)] = static_cast<std::uint8_t>(cls);
        }
        return t;
    }();
    return table;
}

} // namespace

const std::vector<std::string>& triad_class_names() {
    static const std::vector<std::string> names = {"003",  "012",  "102",  "021D", "021U", "021C",
                                                   "111D", "111U", "030T", "030C", "201",  "120D",
                                                   "120U", "120C", "210",  "300"};
    return names;
}

std::vector<std::int64_t> triad_census(const DirectedGraph& y) {
    const auto& table = triad_table();
    std::vector<std::int64_t> counts(16, 0);
    const int n = y.order();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                const int code = (y.edge(i, j) ? 1 : 0) | (y.edge(j, i) ? 2 : 0) |
                                 (y.edge(i, k) ? 4 : 0) | (y.edge(k, i) ? 8 : 0) |
                                 (y.edge(j, k) ? 16 : 0) | (y.edge(k, j) ? 32 : 0);
                ++counts[table[static_cast<std::size_t>(code)]];
            }
    return counts;
}

namespace {

struct NetCounts {
    std::vector<double> in_deg, out_deg, esp, geo, triads;
};

std::int64_t shared_partners(const DirectedGraph& y, int i, int j) {
    auto a = y.out_row(i);
    auto b = y.in_row(j);
    std::int64_t c = 0;
    for (std::size_t w = 0; w < a.size(); ++w) c += std::popcount(a[w] & b[w]);
    return c;
}

NetCounts extract_counts(const DirectedGraph& y) {
    const int n = y.order();
    NetCounts nc;
    nc.in_deg.assign(static_cast<std::size_t>(n), 0.0);
    nc.out_deg.assign(static_cast<std::size_t>(n), 0.0);
    nc.esp.assign(static_cast<std::size_t>(n - 1), 0.0);
    nc.geo.assign(static_cast<std::size_t>(n), 0.0); // distances 1..n-1, then unreachable

    for (int i = 0; i < n; ++i) {
        nc.in_deg[static_cast<std::size_t>(y.in_degree(i))] += 1.0;
        nc.out_deg[static_cast<std::size_t>(y.out_degree(i))] += 1.0;
    }

    for (int i = 0; i < n; ++i) {
        auto row = y.out_row(i);
        for (std::size_t w = 0; w < row.size(); ++w) {
            std::uint64_t bits = row[w];
            while (bits) {
                const int j = static_cast<int>(w) * 64 + std::countr_zero(bits);
                bits &= bits - 1;
                nc.esp[static_cast<std::size_t>(shared_partners(y, i, j))] += 1.0;
            }
        }
    }

    std::vector<int> dist(static_cast<std::size_t>(n));
    std::vector<int> frontier, next;
    for (int src = 0; src < n; ++src) {
        std::fill(dist.begin(), dist.end(), -1);
        dist[static_cast<std::size_t>(src)] = 0;
        frontier.assign(1, src);
        int d = 0;
        while (!frontier.empty()) {
            ++d;
            next.clear();
            for (int u : frontier) {
                auto row = y.out_row(u);
                for (std::size_t w = 0; w < row.size(); ++w) {
                    std::uint64_t bits = row[w];
                    while (bits) {
                        const int t = static_cast<int>(w) * 64 + std::countr_zero(bits);
                        bits &= bits - 1;
                        if (dist[static_cast<std::size_t>(t)] < 0) {
                            dist[static_cast<std::size_t>(t)] = d;
                            next.push_back(t);
                        }
                    }
                }
            }
            frontier.swap(next);
        }
        for (int j = 0; j < n; ++j) {
            if (j == src) continue;
            const int dj = dist[static_cast<std::size_t>(j)];
            nc.geo[static_cast<std::size_t>(dj > 0 ? dj - 1 : n - 1)] += 1.0;
        }
    }

    const auto census = triad_census(y);
    nc.triads.assign(census.begin(), census.end());
    return nc;
}

double sorted_quantile(const std::vector<double>& sorted, double q) {
    const auto m = sorted.size();
    if (m == 1) return sorted[0];
    const double h = q * static_cast<double>(m - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= m) return sorted[m - 1];
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

GofFamily build_family(const std::string& name, const std::vector<const NetCounts*>& sims,
                       const std::vector<const NetCounts*>& obs,
                       std::vector<double> NetCounts::* member,
                       const std::vector<std::string>* labels, int label_base, bool trim,
                       bool last_is_overflow) {
    const std::size_t nbins = ((*sims.front()).*member).size();

    std::size_t keep = nbins;
    if (trim) {
        std::size_t last_nonzero = 0;
        const std::size_t scan = last_is_overflow ? nbins - 1 : nbins;
        auto scan_nets = [&](const std::vector<const NetCounts*>& nets) {
            for (const NetCounts* nc : nets)
                for (std::size_t b = 0; b < scan; ++b)
                    if ((nc->*member)[b] != 0.0 && b + 1 > last_nonzero) last_nonzero = b + 1;
        };
        scan_nets(sims);
        scan_nets(obs);
        keep = std::max<std::size_t>(last_nonzero, 1);
    }

    GofFamily fam;
    fam.name = name;
    std::vector<double> sim_vals(sims.size()), obs_vals(obs.size());
    auto emit = [&](std::size_t b, const std::string& label) {
        for (std::size_t s = 0; s < sims.size(); ++s) sim_vals[s] = (sims[s]->*member)[b];
        for (std::size_t s = 0; s < obs.size(); ++s) obs_vals[s] = (obs[s]->*member)[b];
        std::sort(sim_vals.begin(), sim_vals.end());
        std::sort(obs_vals.begin(), obs_vals.end());
        GofBin bin;
        bin.label = label;
        bin.min = sim_vals.front();
        bin.q1 = sorted_quantile(sim_vals, 0.25);
        bin.median = sorted_quantile(sim_vals, 0.5);
        bin.q3 = sorted_quantile(sim_vals, 0.75);
        bin.max = sim_vals.back();
        bin.observed_median = sorted_quantile(obs_vals, 0.5);
        bin.covered = bin.q1 <= bin.observed_median && bin.observed_median <= bin.q3;
        fam.bins.push_back(std::move(bin));
    };

    for (std::size_t b = 0; b < keep; ++b)
        emit(b, labels ? (*labels)[b] : std::to_string(b + static_cast<std::size_t>(label_base)));
    if (last_is_overflow) emit(nbins - 1, "Inf");
    return fam;
}

} // namespace

std::size_t GofReport::bin_count() const {
    std::size_t c = 0;
    for (const GofFamily& f : families) c += f.bins.size();
    return c;
}

double GofReport::coverage() const {
    std::size_t covered = 0, total = 0;
    for (const GofFamily& f : families)
        for (const GofBin& b : f.bins) {
            ++total;
            if (b.covered) ++covered;
        }
    return total == 0 ? 1.0 : static_cast<double>(covered) / static_cast<double>(total);
}

std::string GofReport::to_json() const {
    nlohmann::json j;
    j["n_sims"] = n_sims;
    j["sweeps"] = sweeps;
    j["transitions"] = transitions;
    j["coverage"] = coverage();
    j["families"] = nlohmann::json::array();
    for (const GofFamily& f : families) {
        nlohmann::json jf;
        jf["name"] = f.name;
        jf["bins"] = nlohmann::json::array();
        for (const GofBin& b : f.bins) {
            jf["bins"].push_back({{"label", b.label},
                                  {"min", b.min},
                                  {"q1", b.q1},
                                  {"median", b.median},
                                  {"q3", b.q3},
                                  {"max", b.max},
                                  {"observed_median", b.observed_median},
                                  {"covered", b.covered}});
        }
        j["families"].push_back(std::move(jf));
    }
    return j.dump(2);
}

GofReport gof_summary(const TergmFit& fit, const TermSet& terms, const GraphSeries& observed,
                      int n_sims, Rng& rng, int sweeps, int jobs) {
    if (n_sims < 1) throw Error("n_sims must be >= 1");
    if (sweeps < 1) throw Error("sweeps must be >= 1");
    if (observed.length() < 2)
        throw WindowTooShort("goodness of fit needs at least 2 graphs (one transition)");
    if (fit.theta.size() != static_cast<std::ptrdiff_t>(terms.p()))
        throw DimensionMismatch("coefficient length " + std::to_string(fit.theta.size()) +
                                " != term count " + std::to_string(terms.p()));

    const std::int64_t transitions = static_cast<std::int64_t>(observed.length()) - 1;
    const std::uint64_t base_seed = rng.next();

    std::vector<NetCounts> sim_counts(static_cast<std::size_t>(transitions * n_sims));
    parallel_for(transitions * n_sims, jobs, [&](std::int64_t slot) {
        const std::int64_t u = slot / n_sims + 1;
        Rng draw_rng(derive_seed(base_seed, static_cast<std::uint64_t>(slot)));
        const DirectedGraph sim =
            simulate_from_fit(fit.theta, terms, observed.at_offset(u - 1), sweeps, draw_rng);
        sim_counts[static_cast<std::size_t>(slot)] = extract_counts(sim);
    });

    std::vector<NetCounts> obs_counts;
    obs_counts.reserve(static_cast<std::size_t>(transitions));
    for (std::int64_t u = 1; u <= transitions; ++u)
        obs_counts.push_back(extract_counts(observed.at_offset(u)));

    std::vector<const NetCounts*> sims, obs;
    for (const NetCounts& nc : sim_counts) sims.push_back(&nc);
    for (const NetCounts& nc : obs_counts) obs.push_back(&nc);

    GofReport report;
    report.n_sims = n_sims;
    report.sweeps = sweeps;
    report.transitions = transitions;
    report.families.push_back(
        build_family("in_degree", sims, obs, &NetCounts::in_deg, nullptr, 0, true, false));
    report.families.push_back(
        build_family("out_degree", sims, obs, &NetCounts::out_deg, nullptr, 0, true, false));
    report.families.push_back(build_family("esp", sims, obs, &NetCounts::esp, nullptr, 0, true, false));
    report.families.push_back(build_family("geodesic", sims, obs, &NetCounts::geo, nullptr, 1, true, true));
    report.families.push_back(
        build_family("triad_census", sims, obs, &NetCounts::triads, &triad_class_names(), 0, false, false));
    return report;
}

} // namespace netwatch::tergm
