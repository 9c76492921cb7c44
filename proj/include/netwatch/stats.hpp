#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "netwatch/graph.hpp"

namespace netwatch::stats {

using StatVector = Eigen::VectorXd;

enum class Term { Edges, Triangles, AsymmetricDyads, MutualDyads, Stability };

const char* term_name(Term t);
Term term_from_name(const std::string& name);

/* Ordered, duplicate-free list of model terms.  Stability is the one memory
 * term: it compares the graph with its lag-1 predecessor, so any TermSet
 * containing it needs that predecessor wherever statistics are evaluated. */
class TermSet {
  public:
    explicit TermSet(std::vector<Term> terms);

    std::size_t p() const { return terms_.size(); }
    const std::vector<Term>& terms() const { return terms_; }
    bool contains(Term t) const;
    bool needs_predecessor() const { return contains(Term::Stability); }
    std::vector<std::string> names() const;

    // edges + triangles + asymmetric + stability: the monitoring default
    static TermSet monitoring_default();
    // edges + triangles + asymmetric: the base-network model
    static TermSet base_model();

  private:
    std::vector<Term> terms_;
};

/* s(y, y_prev): one value per term, counted exactly in integers.
 *   Edges            sum of all cells
 *   Triangles        transitive triples (i->j->k plus i->k) + cycles/3
 *   AsymmetricDyads  unordered pairs with exactly one tie
 *   MutualDyads      unordered pairs with both ties
 *   Stability        cells identical to the predecessor (ordered, off-diagonal)
 * y_prev must be non-null iff the TermSet contains Stability. */
StatVector compute_stats(const TermSet& terms, const graph::DirectedGraph& y,
                         const graph::DirectedGraph* y_prev = nullptr);

/* Change statistics d(i,j) = s(y with y_ij=1) - s(y with y_ij=0), all other
 * cells held at their current state.  O(words) per dyad via the transpose. */
StatVector change_stats(const TermSet& terms, const graph::DirectedGraph& y,
                        const graph::DirectedGraph* y_prev, int i, int j);

struct Descriptives {
    double density = 0.0;
    double reciprocity = 0.0;  // reciprocated ties / ties; 1.0 by convention when edgeless
    double transitivity = 0.0; // closed 2-paths / 2-paths; 1.0 by convention when no 2-paths
    bool reciprocity_vacuous = false;
    bool transitivity_vacuous = false;
};

Descriptives descriptive(const graph::DirectedGraph& y);

// exact triangle-configuration count (transitive + cyclic/3) as an integer
std::int64_t triangle_count(const graph::DirectedGraph& y);

/* Triangle part of the change statistic for cell (i,j): the number of
 * third-node configurations the tie would complete.  Shared kernel for
 * change_stats, the pseudolikelihood design and the Gibbs sampler; does not
 * depend on the current value of the cell itself. */
std::int64_t triangle_change(const graph::DirectedGraph& y, int i, int j);

} // namespace netwatch::stats
