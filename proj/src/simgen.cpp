#include "netwatch/simgen.hpp"

#include <bit>
#include <cmath>

namespace netwatch::simgen {

using graph::DirectedGraph;
using graph::GraphSeries;

namespace {

constexpr double kRowTol = 1e-9;

bool row_ok(double a, double b) {
    return a >= -kRowTol && a <= 1.0 + kRowTol && b >= -kRowTol && b <= 1.0 + kRowTol &&
           std::abs(a + b - 1.0) <= kRowTol;
}

} // namespace

bool TransitionMatrix::is_valid() const {
    return row_ok(m00, m01) && row_ok(m10, m11);
}

void TransitionMatrix::require_valid() const {
    if (!row_ok(m00, m01))
        throw Error("transition matrix row 0 invalid: (" + std::to_string(m00) + "," + std::to_string(m01) + ")");
    if (!row_ok(m10, m11))
        throw Error("transition matrix row 1 invalid: (" + std::to_string(m10) + "," + std::to_string(m11) + ")");
}

std::pair<double, double> stationary_distribution(const TransitionMatrix& m) {
    m.require_valid();
    const double denom = m.m01 + m.m10;
    if (denom <= 0.0)
        throw NoUniqueStationary("both switch rates are zero; any tie density is stationary");
    return {m.m10 / denom, m.m01 / denom};
}

Eigen::VectorXd GenConfig::default_base_coeffs() {
    Eigen::VectorXd c(3);
    c << std::log(0.2 / 0.8), 0.0, 0.0;
    return c;
}

AnomalySpec AnomalySpec::type_a(std::int64_t tau, const TransitionMatrix& m1) {
    AnomalySpec a;
    a.kind = Kind::A;
    a.tau = tau;
    a.m1 = m1;
    return a;
}

AnomalySpec AnomalySpec::type_b(std::int64_t tau, double phi1) {
    AnomalySpec a;
    a.kind = Kind::B;
    a.tau = tau;
    a.phi1 = phi1;
    return a;
}

AnomalySpec AnomalySpec::type_c(std::int64_t tau, double zeta) {
    AnomalySpec a;
    a.kind = Kind::C;
    a.tau = tau;
    a.zeta = zeta;
    return a;
}

void AnomalySpec::validate(std::int64_t series_length) const {
    if (tau < 1 || tau > series_length)
        throw InvalidAnomaly("tau " + std::to_string(tau) + " outside retained range [1," +
                             std::to_string(series_length) + "]");
    switch (kind) {
        case Kind::A:
            if (!m1.is_valid())
                throw InvalidAnomaly("anomalous transition matrix rows must be probabilities summing to 1");
            break;
        case Kind::B:
            if (!(phi1 >= 0.0 && phi1 <= 1.0))
                throw InvalidAnomaly("phi1 must lie in [0,1], got " + std::to_string(phi1));
            break;
        case Kind::C:
            if (!(zeta >= 0.0 && zeta <= 1.0))
                throw InvalidAnomaly("zeta must lie in [0,1], got " + std::to_string(zeta));
            break;
    }
}

void metropolis_sweep(DirectedGraph& y, const Eigen::VectorXd& coeffs, Rng& rng) {
    if (coeffs.size() != 3)
        throw DimensionMismatch("base model has 3 terms, got " + std::to_string(coeffs.size()) + " coefficients");
    const int n = y.order();
    const std::int64_t cells = y.dyad_cells();
    std::vector<std::uint64_t> order(static_cast<std::size_t>(cells));
    for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
    rng.shuffle(order);

    auto and_count = [&](std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
        std::int64_t s = 0;
        for (std::size_t w = 0; w < a.size(); ++w) s += std::popcount(a[w] & b[w]);
        return s;
    };

    for (std::uint64_t c : order) {
        const int i = static_cast<int>(c / (n - 1));
        int j = static_cast<int>(c % (n - 1));
        if (j >= i) ++j;
        // change statistic of cell (i,j) for {edges, triangles, asymmetric}
        const double d_tri = static_cast<double>(
            and_count(y.out_row(i), y.out_row(j)) + and_count(y.in_row(i), y.in_row(j)) +
            and_count(y.out_row(i), y.in_row(j)) + and_count(y.out_row(j), y.in_row(i)));
        const double d_asym = y.edge(j, i) ? -1.0 : 1.0;
        const double delta = coeffs[0] + coeffs[1] * d_tri + coeffs[2] * d_asym;
        const bool present = y.edge(i, j);
        const double log_acc = present ? -delta : delta;
        if (log_acc >= 0.0 || rng.uniform01() < std::exp(log_acc))
            y.set_edge(i, j, !present);
    }
}

DirectedGraph sample_base_network(const GenConfig& cfg, Rng& rng) {
    DirectedGraph y = graph::new_graph(cfg.n_nodes);
    for (int s = 0; s < cfg.base_sweeps; ++s) metropolis_sweep(y, cfg.base_coeffs, rng);
    return y;
}

DirectedGraph step_markov(const DirectedGraph& prev, double phi, const TransitionMatrix& m, Rng& rng) {
    m.require_valid();
    if (!(phi >= 0.0 && phi <= 1.0))
        throw Error("phi must lie in [0,1], got " + std::to_string(phi));
    const int n = prev.order();
    const std::int64_t cells = prev.dyad_cells();
    const auto k = static_cast<std::uint64_t>(std::floor(phi * static_cast<double>(cells) + 0.5));

    DirectedGraph next = prev;
    for (std::uint64_t c : rng.sample_distinct(static_cast<std::uint64_t>(cells), k)) {
        const int i = static_cast<int>(c / (n - 1));
        int j = static_cast<int>(c % (n - 1));
        if (j >= i) ++j;
        const double p_one = next.edge(i, j) ? m.m11 : m.m01;
        next.set_edge(i, j, rng.bernoulli(p_one));
    }
    return next;
}

DirectedGraph convert_asym_to_mutual(const DirectedGraph& y, double zeta, Rng& rng) {
    if (!(zeta >= 0.0 && zeta <= 1.0))
        throw InvalidAnomaly("zeta must lie in [0,1], got " + std::to_string(zeta));
    // asymmetric dyads in lexicographic order so the draw is well-defined
    std::vector<std::pair<int, int>> asym;
    const int n = y.order();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (y.edge(i, j) != y.edge(j, i)) asym.emplace_back(i, j);

    const auto k = static_cast<std::uint64_t>(std::floor(zeta * static_cast<double>(asym.size()) + 0.5));
    DirectedGraph out = y;
    for (std::uint64_t idx : rng.sample_distinct(asym.size(), k)) {
        auto [i, j] = asym[static_cast<std::size_t>(idx)];
        if (out.edge(i, j))
            out.set_edge(j, i, true);
        else
            out.set_edge(i, j, true);
    }
    return out;
}

GraphSeries generate_series(const GenConfig& cfg, std::int64_t length,
                            const std::optional<AnomalySpec>& anomaly) {
    Rng rng(cfg.seed);
    return generate_series(cfg, length, anomaly, rng);
}

GraphSeries generate_series(const GenConfig& cfg, std::int64_t length,
                            const std::optional<AnomalySpec>& anomaly, Rng& rng) {
    if (length < 1)
        throw Error("series length must be positive, got " + std::to_string(length));
    if (cfg.burn_in < 0)
        throw Error("burn-in cannot be negative");
    cfg.m.require_valid();
    if (anomaly) anomaly->validate(length);

    DirectedGraph state = sample_base_network(cfg, rng);
    for (int b = 0; b < cfg.burn_in; ++b)
        state = step_markov(state, cfg.phi, cfg.m, rng);

    std::vector<DirectedGraph> states;
    states.reserve(static_cast<std::size_t>(length));
    for (std::int64_t t = 1; t <= length; ++t) {
        const bool anomalous = anomaly && t >= anomaly->tau;
        double phi = cfg.phi;
        TransitionMatrix m = cfg.m;
        if (anomalous && anomaly->kind == AnomalySpec::Kind::A) m = anomaly->m1;
        if (anomalous && anomaly->kind == AnomalySpec::Kind::B) phi = anomaly->phi1;
        state = step_markov(state, phi, m, rng);
        if (anomaly && anomaly->kind == AnomalySpec::Kind::C && t == anomaly->tau)
            state = convert_asym_to_mutual(state, anomaly->zeta, rng);
        states.push_back(state);
    }
    return GraphSeries(std::move(states), 1);
}

} // namespace netwatch::simgen
