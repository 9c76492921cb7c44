#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netwatch/errors.hpp"

namespace netwatch::graph {

/* Directed graph on a fixed node set, no self-loops, dense storage.
 *
 * Adjacency lives in two bit matrices: `out_` holds row i = successors of i,
 * `in_` holds row j = predecessors of j (the transpose).  Keeping both lets
 * the statistics layer count triangle configurations with AND+popcount
 * instead of O(n) scans.  Diagonal bits are never set. */
class DirectedGraph {
  public:
    explicit DirectedGraph(int n_nodes);

    int order() const { return n_; }
    std::int64_t edge_count() const { return edge_count_; }
    std::int64_t dyad_cells() const { return static_cast<std::int64_t>(n_) * (n_ - 1); }

    bool edge(int src, int dst) const {
        check_index(src, dst);
        return test_bit(out_, src, dst);
    }

    // set or clear the cell (src,dst); setting src==dst is rejected
    void set_edge(int src, int dst, bool present);

    // packed successor row / predecessor row, words() words each
    std::span<const std::uint64_t> out_row(int i) const { return {&out_[static_cast<std::size_t>(i) * words_], words_}; }
    std::span<const std::uint64_t> in_row(int j) const { return {&in_[static_cast<std::size_t>(j) * words_], words_}; }
    std::size_t words() const { return words_; }

    int out_degree(int i) const;
    int in_degree(int j) const;

    bool operator==(const DirectedGraph& other) const {
        return n_ == other.n_ && out_ == other.out_;
    }

  private:
    void check_index(int i, int j) const {
        if (i < 0 || i >= n_ || j < 0 || j >= n_)
            throw IndexError("node index out of range: (" + std::to_string(i) + "," + std::to_string(j) +
                             ") for order " + std::to_string(n_));
    }
    int n_;
    std::size_t words_;
    std::vector<std::uint64_t> out_;
    std::vector<std::uint64_t> in_;
    std::int64_t edge_count_ = 0;

    bool test_bit(const std::vector<std::uint64_t>& m, int r, int c) const {
        return (m[static_cast<std::size_t>(r) * words_ + static_cast<std::size_t>(c) / 64] >> (c % 64)) & 1u;
    }
    friend class GraphBits;
};

// the validated constructor used by public call sites: orders below 2 are useless
DirectedGraph new_graph(int n_nodes);

/* Consecutive sequence of equal-order graphs Y_start, Y_{start+1}, ... */
class GraphSeries {
  public:
    GraphSeries(std::vector<DirectedGraph> graphs, std::int64_t start_index);

    std::int64_t start_index() const { return start_; }
    std::int64_t end_index() const { return start_ + static_cast<std::int64_t>(graphs_.size()) - 1; }
    std::size_t length() const { return graphs_.size(); }
    int order() const { return graphs_.front().order(); }

    const DirectedGraph& at_time(std::int64_t t) const;
    const DirectedGraph& at_offset(std::size_t i) const { return graphs_.at(i); }

    // new series holding graphs for t in [from, to], labels preserved
    GraphSeries slice(std::int64_t from, std::int64_t to) const;

  private:
    std::vector<DirectedGraph> graphs_;
    std::int64_t start_;
};

struct EdgeRecord {
    std::int64_t t;
    std::string src;
    std::string dst;
};

struct IngestResult {
    GraphSeries series;
    std::vector<std::string> node_ids;   // index -> external id
    std::int64_t dropped_self_loops = 0;
    std::int64_t duplicate_records = 0;
};

/* Build a series from (t, src, dst) records.  Node set is the union of all
 * endpoints (plus any preset registry); self-loops are dropped and counted;
 * duplicate records collapse.  Time labels must form a contiguous range once
 * sorted, otherwise NonContiguousSeries lists what is missing. */
IngestResult from_edge_list(const std::vector<EdgeRecord>& records,
                            const std::optional<std::vector<std::string>>& node_map = std::nullopt);

/* Parse `t,src,dst` lines (header optional, blank lines skipped).  Integer
 * time labels are used as-is; ISO dates (YYYY-MM-DD) are mapped to day
 * numbers, which the contiguity check then requires to be consecutive. */
std::vector<EdgeRecord> parse_edge_list(const std::string& text);
std::vector<EdgeRecord> read_edge_list_file(const std::string& path);

// inverse of ingestion: one `t,src,dst` line per edge, days ascending
std::string to_edge_list(const GraphSeries& series, const std::vector<std::string>& node_ids);

} // namespace netwatch::graph
