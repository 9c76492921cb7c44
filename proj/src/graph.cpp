#include "netwatch/graph.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace netwatch::graph {

DirectedGraph::DirectedGraph(int n_nodes) : n_(n_nodes) {
    if (n_nodes < 1)
        throw InvalidOrder("graph order must be positive, got " + std::to_string(n_nodes));
    words_ = (static_cast<std::size_t>(n_) + 63) / 64;
    out_.assign(static_cast<std::size_t>(n_) * words_, 0);
    in_.assign(static_cast<std::size_t>(n_) * words_, 0);
}

DirectedGraph new_graph(int n_nodes) {
    if (n_nodes < 2)
        throw InvalidOrder("a usable network needs at least 2 nodes, got " + std::to_string(n_nodes));
    return DirectedGraph(n_nodes);
}

void DirectedGraph::set_edge(int src, int dst, bool present) {
    check_index(src, dst);
    if (src == dst)
        throw SelfLoopRejected("self-loop (" + std::to_string(src) + "," + std::to_string(dst) + ") rejected");
    const std::uint64_t bit_dst = 1ULL << (dst % 64);
    const std::uint64_t bit_src = 1ULL << (src % 64);
    std::uint64_t& ow = out_[static_cast<std::size_t>(src) * words_ + static_cast<std::size_t>(dst) / 64];
    const bool had = (ow & bit_dst) != 0;
    if (had == present) return;
    std::uint64_t& iw = in_[static_cast<std::size_t>(dst) * words_ + static_cast<std::size_t>(src) / 64];
    if (present) {
        ow |= bit_dst;
        iw |= bit_src;
        ++edge_count_;
    } else {
        ow &= ~bit_dst;
        iw &= ~bit_src;
        --edge_count_;
    }
}

int DirectedGraph::out_degree(int i) const {
    check_index(i, 0);
    int d = 0;
    for (std::uint64_t w : out_row(i)) d += std::popcount(w);
    return d;
}

int DirectedGraph::in_degree(int j) const {
    check_index(j, 0);
    int d = 0;
    for (std::uint64_t w : in_row(j)) d += std::popcount(w);
    return d;
}

GraphSeries::GraphSeries(std::vector<DirectedGraph> graphs, std::int64_t start_index)
    : graphs_(std::move(graphs)), start_(start_index) {
    if (graphs_.empty())
        throw EmptyIngest("a graph series needs at least one graph");
    const int n = graphs_.front().order();
    for (const auto& g : graphs_)
        if (g.order() != n)
            throw OrderMismatch("series mixes graph orders " + std::to_string(n) + " and " +
                                std::to_string(g.order()));
}

const DirectedGraph& GraphSeries::at_time(std::int64_t t) const {
    if (t < start_ || t > end_index())
        throw IndexError("time " + std::to_string(t) + " outside series [" + std::to_string(start_) +
                         "," + std::to_string(end_index()) + "]");
    return graphs_[static_cast<std::size_t>(t - start_)];
}

GraphSeries GraphSeries::slice(std::int64_t from, std::int64_t to) const {
    if (from < start_ || to > end_index() || from > to)
        throw IndexError("slice [" + std::to_string(from) + "," + std::to_string(to) +
                         "] outside series [" + std::to_string(start_) + "," + std::to_string(end_index()) + "]");
    std::vector<DirectedGraph> part(graphs_.begin() + (from - start_), graphs_.begin() + (to - start_ + 1));
    return GraphSeries(std::move(part), from);
}

IngestResult from_edge_list(const std::vector<EdgeRecord>& records,
                            const std::optional<std::vector<std::string>>& node_map) {
    if (records.empty())
        throw EmptyIngest("no edge records to ingest");

    std::vector<std::string> ids;
    std::unordered_map<std::string, int> index;
    auto intern = [&](const std::string& name) {
        auto it = index.find(name);
        if (it != index.end()) return it->second;
        int id = static_cast<int>(ids.size());
        ids.push_back(name);
        index.emplace(name, id);
        return id;
    };
    if (node_map)
        for (const auto& name : *node_map) intern(name);

    std::int64_t dropped = 0;
    std::int64_t t_min = records.front().t, t_max = records.front().t;
    for (const auto& r : records) {
        t_min = std::min(t_min, r.t);
        t_max = std::max(t_max, r.t);
        if (r.src == r.dst) {
            intern(r.src); // the node still exists even if its only record is a loop
            ++dropped;
            continue;
        }
        intern(r.src);
        intern(r.dst);
    }

    std::unordered_set<std::int64_t> seen_t;
    for (const auto& r : records) seen_t.insert(r.t);
    if (static_cast<std::int64_t>(seen_t.size()) != t_max - t_min + 1) {
        std::string missing;
        int listed = 0;
        for (std::int64_t t = t_min; t <= t_max && listed < 10; ++t)
            if (!seen_t.count(t)) {
                missing += (listed ? "," : "") + std::to_string(t);
                ++listed;
            }
        throw NonContiguousSeries("time labels not contiguous in [" + std::to_string(t_min) + "," +
                                  std::to_string(t_max) + "]; missing: " + missing);
    }

    const int n = static_cast<int>(ids.size());
    std::vector<DirectedGraph> graphs(static_cast<std::size_t>(t_max - t_min + 1), DirectedGraph(n));
    std::int64_t duplicates = 0;
    for (const auto& r : records) {
        if (r.src == r.dst) continue;
        auto& g = graphs[static_cast<std::size_t>(r.t - t_min)];
        const int i = index[r.src], j = index[r.dst];
        if (g.edge(i, j))
            ++duplicates;
        else
            g.set_edge(i, j, true);
    }

    return IngestResult{GraphSeries(std::move(graphs), t_min), std::move(ids), dropped, duplicates};
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

bool parse_int(const std::string& s, std::int64_t& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [p, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && p == last;
}

// YYYY-MM-DD -> days since 1970-01-01; contiguity then means consecutive days
bool parse_iso_date(const std::string& s, std::int64_t& out) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    int y, m, d;
    auto digits = [&](int a, int b, int& v) {
        v = 0;
        for (int i = a; i < b; ++i) {
            if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
            v = v * 10 + (s[i] - '0');
        }
        return true;
    };
    if (!digits(0, 4, y) || !digits(5, 7, m) || !digits(8, 10, d)) return false;
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                    std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return false;
    out = std::chrono::sys_days{ymd}.time_since_epoch().count();
    return true;
}

bool parse_time_label(const std::string& s, std::int64_t& out) {
    return parse_int(s, out) || parse_iso_date(s, out);
}

} // namespace

std::vector<EdgeRecord> parse_edge_list(const std::string& text) {
    std::vector<EdgeRecord> records;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        std::size_t c1 = line.find(',');
        std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos)
            throw IngestError("line " + std::to_string(line_no) + ": expected `t,src,dst`, got `" + line + "`");
        EdgeRecord r;
        std::string t_field = trim(line.substr(0, c1));
        r.src = trim(line.substr(c1 + 1, c2 - c1 - 1));
        r.dst = trim(line.substr(c2 + 1));
        if (!parse_time_label(t_field, r.t)) {
            if (first_content) { first_content = false; continue; } // header row
            throw IngestError("line " + std::to_string(line_no) + ": bad time label `" + t_field + "`");
        }
        if (r.src.empty() || r.dst.empty())
            throw IngestError("line " + std::to_string(line_no) + ": empty node id");
        first_content = false;
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<EdgeRecord> read_edge_list_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open edge list: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_edge_list(buf.str());
}

std::string to_edge_list(const GraphSeries& series, const std::vector<std::string>& node_ids) {
    if (static_cast<int>(node_ids.size()) != series.order())
        throw DimensionMismatch("node id registry has " + std::to_string(node_ids.size()) +
                                " entries for order-" + std::to_string(series.order()) + " series");
    std::string out = "t,src,dst\n";
    for (std::int64_t t = series.start_index(); t <= series.end_index(); ++t) {
        const auto& g = series.at_time(t);
        for (int i = 0; i < g.order(); ++i)
            for (int j = 0; j < g.order(); ++j)
                if (i != j && g.edge(i, j))
                    out += std::to_string(t) + "," + node_ids[i] + "," + node_ids[j] + "\n";
    }
    return out;
}

} // namespace netwatch::graph
