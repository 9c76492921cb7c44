#include "netwatch/stats.hpp"

#include <bit>

namespace netwatch::stats {

using graph::DirectedGraph;

const char* term_name(Term t) {
    switch (t) {
        case Term::Edges: return "edges";
        case Term::Triangles: return "triangles";
        case Term::AsymmetricDyads: return "asymmetric";
        case Term::MutualDyads: return "mutual";
        case Term::Stability: return "stability";
    }
    return "?";
}

Term term_from_name(const std::string& name) {
    for (Term t : {Term::Edges, Term::Triangles, Term::AsymmetricDyads, Term::MutualDyads, Term::Stability})
        if (name == term_name(t)) return t;
    throw Error("unknown term name: " + name);
}

TermSet::TermSet(std::vector<Term> terms) : terms_(std::move(terms)) {
    if (terms_.empty())
        throw Error("term set cannot be empty");
    for (std::size_t a = 0; a < terms_.size(); ++a)
        for (std::size_t b = a + 1; b < terms_.size(); ++b)
            if (terms_[a] == terms_[b])
                throw Error(std::string("duplicate term in set: ") + term_name(terms_[a]));
}

bool TermSet::contains(Term t) const {
    for (Term x : terms_)
        if (x == t) return true;
    return false;
}

std::vector<std::string> TermSet::names() const {
    std::vector<std::string> out;
    out.reserve(terms_.size());
    for (Term t : terms_) out.emplace_back(term_name(t));
    return out;
}

TermSet TermSet::monitoring_default() {
    return TermSet({Term::Edges, Term::Triangles, Term::AsymmetricDyads, Term::Stability});
}

TermSet TermSet::base_model() {
    return TermSet({Term::Edges, Term::Triangles, Term::AsymmetricDyads});
}

namespace {

inline std::int64_t and_count(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    std::int64_t c = 0;
    for (std::size_t w = 0; w < a.size(); ++w) c += std::popcount(a[w] & b[w]);
    return c;
}

// dyad tallies: (#asymmetric, #mutual) over unordered pairs
std::pair<std::int64_t, std::int64_t> dyad_census(const DirectedGraph& y) {
    std::int64_t mutual2 = 0; // counts each mutual pair twice
    for (int i = 0; i < y.order(); ++i) mutual2 += and_count(y.out_row(i), y.in_row(i));
    const std::int64_t mutual = mutual2 / 2;
    const std::int64_t asym = y.edge_count() - 2 * mutual;
    return {asym, mutual};
}

std::int64_t stability_count(const DirectedGraph& y, const DirectedGraph& prev) {
    std::int64_t differing = 0;
    for (int i = 0; i < y.order(); ++i) {
        auto a = y.out_row(i);
        auto b = prev.out_row(i);
        for (std::size_t w = 0; w < a.size(); ++w) differing += std::popcount(a[w] ^ b[w]);
    }
    return y.dyad_cells() - differing;
}

void check_pair(const TermSet& terms, const DirectedGraph& y, const DirectedGraph* y_prev) {
    if (terms.needs_predecessor()) {
        if (!y_prev)
            throw MissingPredecessor("stability term needs the lag-1 graph");
        if (y_prev->order() != y.order())
            throw OrderMismatch("predecessor order " + std::to_string(y_prev->order()) +
                                " != graph order " + std::to_string(y.order()));
    }
}

} // namespace

std::int64_t triangle_count(const DirectedGraph& y) {
    // transitive: one per ordered (a,b,c) with a->b, b->c, a->c, counted per
    // closing edge (a,c); cyclic: each 3-cycle shows up once per edge, so /3
    std::int64_t transitive = 0, cyclic3 = 0;
    const int n = y.order();
    for (int a = 0; a < n; ++a) {
        auto row = y.out_row(a);
        for (std::size_t w = 0; w < row.size(); ++w) {
            std::uint64_t bits = row[w];
            while (bits) {
                const int c = static_cast<int>(w) * 64 + std::countr_zero(bits);
                bits &= bits - 1;
                transitive += and_count(y.out_row(a), y.in_row(c));
                cyclic3 += and_count(y.out_row(c), y.in_row(a));
            }
        }
    }
    return transitive + cyclic3 / 3;
}

StatVector compute_stats(const TermSet& terms, const DirectedGraph& y, const DirectedGraph* y_prev) {
    check_pair(terms, y, y_prev);
    StatVector s(terms.p());
    std::int64_t asym = -1, mutual = -1;
    for (std::size_t idx = 0; idx < terms.p(); ++idx) {
        switch (terms.terms()[idx]) {
            case Term::Edges:
                s[idx] = static_cast<double>(y.edge_count());
                break;
            case Term::Triangles:
                s[idx] = static_cast<double>(triangle_count(y));
                break;
            case Term::AsymmetricDyads:
            case Term::MutualDyads:
                if (asym < 0) std::tie(asym, mutual) = dyad_census(y);
                s[idx] = static_cast<double>(terms.terms()[idx] == Term::AsymmetricDyads ? asym : mutual);
                break;
            case Term::Stability:
                s[idx] = static_cast<double>(stability_count(y, *y_prev));
                break;
        }
    }
    return s;
}

std::int64_t triangle_change(const DirectedGraph& y, int i, int j) {
    // third-node configurations the cell (i,j) completes; none of these
    // involve the cell itself (diagonal bits are zero)
    return and_count(y.out_row(i), y.out_row(j))  // i->k and j->k
         + and_count(y.in_row(i), y.in_row(j))    // k->i and k->j
         + and_count(y.out_row(i), y.in_row(j))   // i->k->j
         + and_count(y.out_row(j), y.in_row(i));  // j->k->i (closes a cycle)
}

StatVector change_stats(const TermSet& terms, const DirectedGraph& y, const DirectedGraph* y_prev,
                        int i, int j) {
    check_pair(terms, y, y_prev);
    if (i == j)
        throw SelfLoopRejected("change statistic undefined on the diagonal");
    if (i < 0 || i >= y.order() || j < 0 || j >= y.order())
        throw IndexError("dyad (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");

    StatVector d(terms.p());
    for (std::size_t idx = 0; idx < terms.p(); ++idx) {
        switch (terms.terms()[idx]) {
            case Term::Edges:
                d[idx] = 1.0;
                break;
            case Term::Triangles:
                d[idx] = static_cast<double>(triangle_change(y, i, j));
                break;
            case Term::AsymmetricDyads:
                d[idx] = y.edge(j, i) ? -1.0 : 1.0;
                break;
            case Term::MutualDyads:
                d[idx] = y.edge(j, i) ? 1.0 : 0.0;
                break;
            case Term::Stability:
                d[idx] = y_prev->edge(i, j) ? 1.0 : -1.0;
                break;
        }
    }
    return d;
}

Descriptives descriptive(const DirectedGraph& y) {
    Descriptives out;
    const auto cells = static_cast<double>(y.dyad_cells());
    out.density = static_cast<double>(y.edge_count()) / cells;

    if (y.edge_count() == 0) {
        out.reciprocity = 1.0;
        out.reciprocity_vacuous = true;
    } else {
        auto [asym, mutual] = dyad_census(y);
        (void)asym;
        out.reciprocity = static_cast<double>(2 * mutual) / static_cast<double>(y.edge_count());
    }

    // 2-paths i->j->k (i != k) and how many are closed by i->k
    std::int64_t paths = 0, closed = 0;
    const int n = y.order();
    for (int a = 0; a < n; ++a) {
        auto row = y.out_row(a);
        for (std::size_t w = 0; w < row.size(); ++w) {
            std::uint64_t bits = row[w];
            while (bits) {
                const int b = static_cast<int>(w) * 64 + std::countr_zero(bits);
                bits &= bits - 1;
                paths += y.out_degree(b) - (y.edge(b, a) ? 1 : 0);
                closed += and_count(y.out_row(a), y.out_row(b));
            }
        }
    }
    if (paths == 0) {
        out.transitivity = 1.0;
        out.transitivity_vacuous = true;
    } else {
        out.transitivity = static_cast<double>(closed) / static_cast<double>(paths);
    }
    return out;
}

} // namespace netwatch::stats
