#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netwatch/errors.hpp"
#include "netwatch/graph.hpp"
#include "netwatch/rng.hpp"
#include "netwatch/stats.hpp"

namespace netwatch::tergm {

enum class EstimatorKind { ThetaHat, SBar };

const char* estimator_name(EstimatorKind k);
EstimatorKind estimator_from_name(const std::string& name);

// one windowed characterization of the network at time t: either fitted
// coefficients (ThetaHat) or window-averaged transition statistics (SBar)
struct CharEstimate {
    Eigen::VectorXd values;
    EstimatorKind kind = EstimatorKind::ThetaHat;
    std::int64_t t = 0;
    int z = 1;
    int v = 1;
};

struct TergmFit {
    Eigen::VectorXd theta;
    int iterations = 0;
    bool converged = false;
    std::int64_t pooled_dyads = 0; // rows in the pooled logistic regression
};

struct FitOptions {
    double grad_tol = 1e-8;   // max-norm convergence threshold
    int max_iterations = 100;
    int max_halvings = 20;    // step halvings per Newton iteration
    double theta_cap = 15.0;  // |theta| beyond this is treated as separation
};

/* Pooled maximum pseudolikelihood over the transitions inside `window`
 * (a window of z graphs contributes z-v transitions; nothing outside the
 * window is touched).  One Bernoulli observation per ordered dyad per
 * transition, success probability logistic(theta' * change_stats).
 * Newton-Raphson with step halving; identical responses (separation) or a
 * non-finite step raise NonConvergence. */
TergmFit mple_fit(const graph::GraphSeries& window, const stats::TermSet& terms, int v = 1,
                  const FitOptions& opts = {});

/* Window average of transition statistics.  `context` holds z+v graphs:
 * the leading v supply the predecessors of the window's first element, so
 * the average has exactly z terms:
 *     sbar_t = (1/z) * sum_{u=0}^{z-1} s(Y_{t-u}, Y_{t-u-1}).
 * t is the label of the last graph. */
CharEstimate sbar_estimate(const graph::GraphSeries& context, const stats::TermSet& terms, int v = 1);

/* Incremental version of the rolling estimators: feed graphs in time order,
 * ask for the current estimate once enough history has accumulated.  Keeps
 * only the live window (a ring of per-transition aggregates), so a stream
 * of any length runs in O(window) memory. */
class EstimateStream {
  public:
    EstimateStream(const stats::TermSet& terms, int z, int v, EstimatorKind kind, FitOptions opts = {});
    ~EstimateStream();
    EstimateStream(EstimateStream&&) noexcept;
    EstimateStream& operator=(EstimateStream&&) noexcept;

    void feed(const graph::DirectedGraph& y, std::int64_t t);
    bool ready() const;           // true once z+v graphs have been fed
    CharEstimate estimate() const; // estimate at the last fed time label
    std::int64_t graphs_seen() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/* Rolling estimates over a whole series: one CharEstimate at each time
 * t = start+z+v-1, start+z+v-1+stride, ...  ThetaHat windows are the
 * trailing z graphs; SBar contexts are the trailing z+v graphs.  Estimates
 * are bitwise independent of stride on shared time points. */
std::vector<CharEstimate> estimate_series(const graph::GraphSeries& series, const stats::TermSet& terms,
                                          int z, int v, EstimatorKind kind, int stride = 1);

/* Number of estimates estimate_series will produce (0 if the series is too
 * short would throw -- callers check length >= z+v first). */
std::int64_t estimate_count(std::int64_t series_length, int z, int v, int stride = 1);

/* One draw from the conditional model given y_prev: Gibbs sampling over all
 * n(n-1) cells in random order, `sweeps` full passes, starting from y_prev. */
graph::DirectedGraph simulate_from_fit(const TergmFit& fit, const stats::TermSet& terms,
                                       const graph::DirectedGraph& y_prev, int sweeps, Rng& rng);
graph::DirectedGraph simulate_from_fit(const Eigen::VectorXd& theta, const stats::TermSet& terms,
                                       const graph::DirectedGraph& y_prev, int sweeps, Rng& rng);

// quantile box for one bin of a goodness-of-fit family
struct GofBin {
    std::string label;
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
    double observed_median = 0.0;
    bool covered = false; // q1 <= observed_median <= q3
};

struct GofFamily {
    std::string name;
    std::vector<GofBin> bins;
};

struct GofReport {
    std::vector<GofFamily> families;
    int n_sims = 0;
    int sweeps = 0;
    std::int64_t transitions = 0;

    std::size_t bin_count() const;
    double coverage() const; // fraction of bins with observed median inside [q1,q3]
    std::string to_json() const;
};

/* Goodness of fit: for every transition (Y_{u-1} -> Y_u) in `observed`,
 * draw n_sims networks from the fitted conditional model and compare the
 * simulated distributions of in/out-degree, edgewise shared partners
 * (outgoing two-path convention), geodesic distances (directed BFS, with an
 * infinity bucket) and the 16-class triad census against the observed
 * graphs.  Per-draw seeds derive from one value taken from `rng`, so
 * results are reproducible and independent of `jobs`. */
GofReport gof_summary(const TergmFit& fit, const stats::TermSet& terms,
                      const graph::GraphSeries& observed, int n_sims, Rng& rng,
                      int sweeps = 30, int jobs = 1);

// 16-class triad census (003, 012, 102, 021D, ..., 300) over unordered triples
std::vector<std::int64_t> triad_census(const graph::DirectedGraph& y);
const std::vector<std::string>& triad_class_names();

} // namespace netwatch::tergm
