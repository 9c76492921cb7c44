#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "netwatch/graph.hpp"
#include "netwatch/rng.hpp"
#include "netwatch/stats.hpp"

namespace netwatch::simgen {

/* Row-stochastic 2x2 matrix driving per-cell tie dynamics: row 0 is the
 * transition law of an absent tie, row 1 of a present tie. */
struct TransitionMatrix {
    double m00 = 1.0, m01 = 0.0;
    double m10 = 0.0, m11 = 1.0;

    bool is_valid() const;
    void require_valid() const; // throws Error with the offending row

    static TransitionMatrix in_control() { return {0.9, 0.1, 0.4, 0.6}; }
};

/* (pi0, pi1) with pi1 = m01/(m01+m10); both off-diagonal rates zero means
 * every mixture of the two absorbing laws is stationary -> NoUniqueStationary. */
std::pair<double, double> stationary_distribution(const TransitionMatrix& m);

struct GenConfig {
    int n_nodes = 100;
    double phi = 0.01;                       // fraction of cells refreshed per step
    TransitionMatrix m = TransitionMatrix::in_control();
    Eigen::VectorXd base_coeffs = default_base_coeffs();
    int base_sweeps = 50;
    int burn_in = 1000;
    std::uint64_t seed = 0;

    // edges coefficient at logit(0.2), triangles and asymmetric-dyads at 0,
    // so the base draw already sits at the chain's stationary density
    static Eigen::VectorXd default_base_coeffs();
};

struct AnomalySpec {
    enum class Kind { A, B, C };
    Kind kind = Kind::A;
    std::int64_t tau = 0;       // first anomalous time (retained labels start at 1)
    TransitionMatrix m1;        // Kind::A — replacement tie dynamics from tau on
    double phi1 = 0.0;          // Kind::B — replacement refresh fraction from tau on
    double zeta = 0.0;          // Kind::C — fraction of asymmetric dyads mutualized at tau

    static AnomalySpec type_a(std::int64_t tau, const TransitionMatrix& m1);
    static AnomalySpec type_b(std::int64_t tau, double phi1);
    static AnomalySpec type_c(std::int64_t tau, double zeta);

    void validate(std::int64_t series_length) const; // throws InvalidAnomaly
};

/* One Metropolis sweep of the single-cell-toggle sampler for the static model
 * {edges, triangles, asymmetric}; cells are visited in random order. */
void metropolis_sweep(graph::DirectedGraph& y, const Eigen::VectorXd& coeffs, Rng& rng);

// base network: `base_sweeps` sweeps from the empty graph
graph::DirectedGraph sample_base_network(const GenConfig& cfg, Rng& rng);

/* One step of the cell-refresh chain: round(phi * n(n-1)) distinct
 * off-diagonal cells are redrawn from their row of m, everything else copies. */
graph::DirectedGraph step_markov(const graph::DirectedGraph& prev, double phi,
                                 const TransitionMatrix& m, Rng& rng);

/* Add the missing reverse tie on round(zeta * #asymmetric) dyads chosen
 * uniformly without replacement; zeta == 0 consumes no randomness. */
graph::DirectedGraph convert_asym_to_mutual(const graph::DirectedGraph& y, double zeta, Rng& rng);

/* Burn-in then `length` retained states labelled 1..length.  With an anomaly:
 * Type A swaps in m1 and Type B swaps in phi1 for every step from tau on;
 * Type C applies the one-off conversion to the state at tau only. */
graph::GraphSeries generate_series(const GenConfig& cfg, std::int64_t length,
                                   const std::optional<AnomalySpec>& anomaly = std::nullopt);
graph::GraphSeries generate_series(const GenConfig& cfg, std::int64_t length,
                                   const std::optional<AnomalySpec>& anomaly, Rng& rng);

} // namespace netwatch::simgen
