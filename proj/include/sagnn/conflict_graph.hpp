#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sagnn/matrix.hpp"

namespace sagnn {

struct Point {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

/// Unordered node pair, stored with first < second.
using Edge = std::pair<std::size_t, std::size_t>;

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Agents placed on cell centers of a square workspace, connected within a radius.
struct CommGraph {
    std::size_t n_nodes = 0;
    std::vector<Point> positions;
    std::vector<Edge> edges;  // lexicographically sorted
    std::uint64_t seed = 0;

    std::vector<std::size_t> degrees() const;
    friend bool operator==(const CommGraph&, const CommGraph&) = default;
};

/// Links as nodes; two links conflict when they share an agent.
///
/// The adjacency is held as sorted neighbor lists; `adjacent(i, j)` is the
/// binary matrix entry A[i][j]. Symmetry and a zero diagonal are enforced on
/// construction.
class ConflictGraph {
public:
    ConflictGraph() = default;

    /// Builds from an edge list. Throws GraphError on self loops, out of range
    /// ids, pairs not stored as i < j, duplicates, or endpoint inconsistency.
    static ConflictGraph from_edges(std::size_t n_links, std::span<const Edge> edges,
                                    std::vector<Edge> link_endpoints = {}, std::uint64_t source_seed = 0);

    std::size_t n_links() const { return neighbors_.size(); }
    std::span<const std::size_t> neighbors(std::size_t i) const { return neighbors_[i]; }
    std::size_t degree(std::size_t i) const { return neighbors_[i].size(); }
    bool adjacent(std::size_t i, std::size_t j) const;

    /// Each conflict edge once, i < j, sorted.
    std::vector<Edge> edges() const;
    std::size_t n_edges() const;

    const std::vector<Edge>& link_endpoints() const { return link_endpoints_; }
    std::uint64_t source_seed() const { return source_seed_; }

    /// Same graph with node i relabeled perm[i].
    ConflictGraph permuted(std::span<const std::size_t> perm) const;

    friend bool operator==(const ConflictGraph&, const ConflictGraph&) = default;

private:
    std::vector<std::vector<std::size_t>> neighbors_;
    std::vector<Edge> link_endpoints_;
    std::uint64_t source_seed_ = 0;
};

/// Places n_nodes agents on distinct cells of a ceil(sqrt(n)) x ceil(sqrt(n))
/// grid over a square workspace of side sqrt(n) and connects pairs within
/// radius_factor cell widths.
CommGraph generate_comm_graph(std::size_t n_nodes, double radius_factor, std::uint64_t seed);

/// Cell side used by the generator: sqrt(n) / ceil(sqrt(n)).
double cell_side(std::size_t n_nodes);

/// One link per communication edge, conflicting when links share an endpoint.
ConflictGraph line_graph(const CommGraph& comm);

enum class ShiftKind { Raw, SymmetricNormalized };

/// Graph shift operator in sparse form: A, or D^-1/2 A D^-1/2 with isolated
/// nodes mapped to zero rows.
CsrMatrix shift_operator(const ConflictGraph& graph, ShiftKind kind);

/// A * signal.
std::vector<double> shift(const ConflictGraph& graph, std::span<const double> signal);
std::vector<double> shift(const ConflictGraph& graph, std::span<const double> signal, ShiftKind kind);

struct GraphStats {
    std::size_t n_links = 0;
    double mean_degree = 0.0;
    std::vector<std::size_t> degree_histogram;  // index = degree
};

GraphStats graph_stats(const ConflictGraph& graph);

// JSON files: {"type": "comm"|"conflict", "n", "edges", "positions"?, "link_endpoints"?, "seed"}
void save_graph(const std::filesystem::path& path, const CommGraph& graph);
void save_graph(const std::filesystem::path& path, const ConflictGraph& graph);
CommGraph load_comm_graph(const std::filesystem::path& path);
ConflictGraph load_conflict_graph(const std::filesystem::path& path);

}  // namespace sagnn
