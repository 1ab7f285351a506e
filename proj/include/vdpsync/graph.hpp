#pragma once

#include "vdpsync/common.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>
#include <utility>
#include <vector>

namespace vdpsync {

/// Directed edge: information flows from node `j` into node `i`,
/// i.e. j is an in-neighbor of i. Stored as the ordered pair (i, j).
struct Edge {
    int i = 0;
    int j = 0;

    friend bool operator==(const Edge& a, const Edge& b) {
        return a.i == b.i && a.j == b.j;
    }
    friend bool operator<(const Edge& a, const Edge& b) {
        return std::tie(a.i, a.j) < std::tie(b.i, b.j);
    }
};

/// True iff every node reaches every other node along directed edges.
/// Edge (i, j) is traversable from j to i.
inline bool is_strongly_connected(int n, const std::vector<Edge>& edges) {
    if (n <= 0) return false;
    if (n == 1) return true;

    // Reachability from node 0 along forward edges and along reversed edges;
    // both covering all nodes is equivalent to strong connectivity.
    auto reaches_all = [n, &edges](bool reversed) {
        std::vector<std::vector<int>> adj(static_cast<size_t>(n));
        for (const Edge& e : edges) {
            if (reversed)
                adj[static_cast<size_t>(e.i)].push_back(e.j);
            else
                adj[static_cast<size_t>(e.j)].push_back(e.i);
        }
        std::vector<char> seen(static_cast<size_t>(n), 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        int count = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v : adj[static_cast<size_t>(u)]) {
                if (!seen[static_cast<size_t>(v)]) {
                    seen[static_cast<size_t>(v)] = 1;
                    ++count;
                    stack.push_back(v);
                }
            }
        }
        return count == n;
    };
    return reaches_all(false) && reaches_all(true);
}

/// Directed, strongly connected coupling topology. Immutable once built.
class CouplingGraph {
public:
    CouplingGraph(int n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
        if (n_ < 2) throw std::invalid_argument("graph: need at least 2 nodes");
        std::sort(edges_.begin(), edges_.end());
        edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
        for (const Edge& e : edges_) {
            if (e.i < 0 || e.i >= n_ || e.j < 0 || e.j >= n_)
                throw std::invalid_argument("graph: edge index out of range");
            if (e.i == e.j) throw std::invalid_argument("graph: self-loop not allowed");
        }
        if (!is_strongly_connected(n_, edges_))
            throw std::invalid_argument("graph: not strongly connected");
        in_neighbors_.resize(static_cast<size_t>(n_));
        for (const Edge& e : edges_) in_neighbors_[static_cast<size_t>(e.i)].push_back(e.j);
    }

    /// Bidirectional chain 0 - 1 - ... - n-1 (2(n-1) directed edges).
    static CouplingGraph chain(int n) {
        if (n < 2) throw std::invalid_argument("chain: need n >= 2");
        std::vector<Edge> edges;
        for (int k = 0; k + 1 < n; ++k) {
            edges.push_back({k, k + 1});
            edges.push_back({k + 1, k});
        }
        return {n, std::move(edges)};
    }

    /// All n(n-1) directed edges.
    static CouplingGraph complete(int n) {
        if (n < 2) throw std::invalid_argument("complete: need n >= 2");
        std::vector<Edge> edges;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) edges.push_back({i, j});
        return {n, std::move(edges)};
    }

    [[nodiscard]] int node_count() const { return n_; }
    [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }
    [[nodiscard]] int edge_count() const { return static_cast<int>(edges_.size()); }
    [[nodiscard]] const std::vector<int>& in_neighbors(int i) const {
        return in_neighbors_[static_cast<size_t>(i)];
    }

    /// Index of edge (i, j) in edges(), or -1 if absent.
    [[nodiscard]] int edge_index(int i, int j) const {
        auto it = std::lower_bound(edges_.begin(), edges_.end(), Edge{i, j});
        if (it == edges_.end() || !(*it == Edge{i, j})) return -1;
        return static_cast<int>(it - edges_.begin());
    }

    /// Graph Laplacian: diagonal in-degree, -1 at (i, j) for each edge.
    /// Rows sum to zero.
    [[nodiscard]] Mat laplacian() const {
        Mat L = Mat::Zero(n_, n_);
        for (const Edge& e : edges_) {
            L(e.i, e.i) += 1.0;
            L(e.i, e.j) -= 1.0;
        }
        return L;
    }

    /// Canonical text form, used for content hashing of cached artifacts.
    [[nodiscard]] std::string signature() const {
        std::ostringstream os;
        os << "n=" << n_ << ";edges=";
        for (const Edge& e : edges_) os << e.i << "<" << e.j << ",";
        return os.str();
    }

    friend bool operator==(const CouplingGraph& a, const CouplingGraph& b) {
        return a.n_ == b.n_ && a.edges_ == b.edges_;
    }

private:
    int n_;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> in_neighbors_;
};

/// One diagonal 2x2 gain per directed edge, stored as the diagonal pair,
/// index-aligned with CouplingGraph::edges(). Entries are nonnegative.
class EdgeGainSet {
public:
    EdgeGainSet() = default;

    EdgeGainSet(const CouplingGraph& g, std::vector<Vec2> entries)
        : entries_(std::move(entries)) {
        if (static_cast<int>(entries_.size()) != g.edge_count())
            throw std::invalid_argument("gains: entry count does not match edge count");
        check_nonneg();
    }

    static EdgeGainSet zero(const CouplingGraph& g) {
        return EdgeGainSet(g, std::vector<Vec2>(static_cast<size_t>(g.edge_count()),
                                                Vec2::Zero()));
    }

    static EdgeGainSet uniform(const CouplingGraph& g, double k) {
        if (k < 0.0) throw std::invalid_argument("gains: negative uniform gain");
        return EdgeGainSet(g, std::vector<Vec2>(static_cast<size_t>(g.edge_count()),
                                                Vec2::Constant(k)));
    }

    /// Build from explicit (i, j) -> (k1, k2) assignments. The key set must
    /// equal the graph's edge set exactly.
    static EdgeGainSet from_pairs(
        const CouplingGraph& g,
        const std::vector<std::tuple<int, int, double, double>>& assignments) {
        if (static_cast<int>(assignments.size()) != g.edge_count())
            throw std::invalid_argument("gains: assignment count does not match edge count");
        std::vector<Vec2> entries(static_cast<size_t>(g.edge_count()),
                                  Vec2::Constant(-1.0));
        for (const auto& [i, j, k1, k2] : assignments) {
            int e = g.edge_index(i, j);
            if (e < 0) throw std::invalid_argument("gains: no such edge (" + std::to_string(i) +
                                                   ", " + std::to_string(j) + ")");
            if (entries[static_cast<size_t>(e)][0] >= 0.0)
                throw std::invalid_argument("gains: duplicate edge assignment");
            entries[static_cast<size_t>(e)] = Vec2(k1, k2);
        }
        return EdgeGainSet(g, std::move(entries));
    }

    [[nodiscard]] int size() const { return static_cast<int>(entries_.size()); }
    [[nodiscard]] const Vec2& operator[](int e) const { return entries_[static_cast<size_t>(e)]; }
    [[nodiscard]] const std::vector<Vec2>& entries() const { return entries_; }

    [[nodiscard]] double max_entry() const {
        double m = 0.0;
        for (const Vec2& v : entries_) m = std::max(m, v.maxCoeff());
        return m;
    }

    friend bool operator==(const EdgeGainSet& a, const EdgeGainSet& b) {
        return a.entries_ == b.entries_;
    }

private:
    void check_nonneg() const {
        for (const Vec2& v : entries_)
            if (!(v[0] >= 0.0) || !(v[1] >= 0.0))
                throw std::invalid_argument("gains: entries must be nonnegative and finite");
    }

    std::vector<Vec2> entries_;
};

/// Gain-weighted block Laplacian: diagonal block i sums the gains of the
/// in-edges of i, block (i, j) is minus the gain of edge (i, j). Block rows
/// sum to the 2x2 zero matrix.
inline Mat build_LK(const CouplingGraph& g, const EdgeGainSet& gains) {
    if (gains.size() != g.edge_count())
        throw std::invalid_argument("build_LK: gain/edge mismatch");
    const int n = g.node_count();
    Mat M = Mat::Zero(2 * n, 2 * n);
    const auto& edges = g.edges();
    for (int e = 0; e < g.edge_count(); ++e) {
        const Edge& ed = edges[static_cast<size_t>(e)];
        const Vec2& k = gains[e];
        for (int d = 0; d < 2; ++d) {
            M(2 * ed.i + d, 2 * ed.i + d) += k[d];
            M(2 * ed.i + d, 2 * ed.j + d) -= k[d];
        }
    }
    return M;
}

}  // namespace vdpsync
