#include "sagnn/conflict_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sagnn/kernels.hpp"
#include "sagnn/random.hpp"

namespace sagnn {
namespace {

using nlohmann::json;

std::size_t ceil_sqrt(std::size_t n) {
    auto c = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
    while (c * c < n) ++c;
    while (c > 0 && (c - 1) * (c - 1) >= n) --c;
    return c;
}

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& field, const std::string& msg) {
    throw GraphError(path.string() + ": " + field + ": " + msg);
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw GraphError(path.string() + ": cannot open");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw GraphError(path.string() + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& doc) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw GraphError(path.string() + ": cannot write");
    out << doc.dump() << '\n';
}

template <typename T>
T get_field(const std::filesystem::path& path, const json& doc, const char* key) {
    if (!doc.contains(key)) fail(path, key, "missing");
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(path, key, e.what());
    }
}

std::vector<Edge> read_pairs(const std::filesystem::path& path, const json& doc, const char* key) {
    if (!doc.contains(key)) fail(path, key, "missing");
    const json& arr = doc.at(key);
    if (!arr.is_array()) fail(path, key, "expected an array of pairs");
    std::vector<Edge> pairs;
    pairs.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const json& p = arr[i];
        const std::string where = std::string(key) + "[" + std::to_string(i) + "]";
        if (!p.is_array() || p.size() != 2 || !p[0].is_number_unsigned() || !p[1].is_number_unsigned())
            fail(path, where, "expected [i, j] with nonnegative integers");
        pairs.emplace_back(p[0].get<std::size_t>(), p[1].get<std::size_t>());
    }
    return pairs;
}

json pairs_json(std::span<const Edge> pairs) {
    json arr = json::array();
    for (const auto& [a, b] : pairs) arr.push_back({a, b});
    return arr;
}

}  // namespace

std::vector<std::size_t> CommGraph::degrees() const {
    std::vector<std::size_t> deg(n_nodes, 0);
    for (const auto& [u, v] : edges) {
        ++deg[u];
        ++deg[v];
    }
    return deg;
}

ConflictGraph ConflictGraph::from_edges(std::size_t n_links, std::span<const Edge> edges,
                                        std::vector<Edge> link_endpoints, std::uint64_t source_seed) {
    ConflictGraph g;
    g.neighbors_.assign(n_links, {});
    for (const auto& [i, j] : edges) {
        if (i >= n_links || j >= n_links)
            throw GraphError("edge (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
        if (i == j) throw GraphError("self loop on link " + std::to_string(i) + " (nonzero diagonal)");
        if (i > j)
            throw GraphError("edge (" + std::to_string(i) + "," + std::to_string(j) +
                             ") not stored as i<j (asymmetric listing)");
        g.neighbors_[i].push_back(j);
        g.neighbors_[j].push_back(i);
    }
    for (std::size_t i = 0; i < n_links; ++i) {
        auto& nb = g.neighbors_[i];
        std::sort(nb.begin(), nb.end());
        if (std::adjacent_find(nb.begin(), nb.end()) != nb.end())
            throw GraphError("duplicate edge at link " + std::to_string(i));
    }
    if (!link_endpoints.empty()) {
        if (link_endpoints.size() != n_links) throw GraphError("link_endpoints size differs from n");
        for (std::size_t i = 0; i < n_links; ++i) {
            const auto [a, b] = link_endpoints[i];
            if (a == b) throw GraphError("link " + std::to_string(i) + " has identical endpoints");
        }
        // Adjacency must coincide with endpoint sharing.
        std::vector<std::vector<std::size_t>> by_node;
        for (std::size_t i = 0; i < n_links; ++i) {
            const auto [a, b] = link_endpoints[i];
            const std::size_t hi = std::max(a, b);
            if (by_node.size() <= hi) by_node.resize(hi + 1);
            by_node[a].push_back(i);
            by_node[b].push_back(i);
        }
        std::size_t expected = 0;
        for (const auto& incident : by_node)
            for (std::size_t x = 0; x < incident.size(); ++x)
                for (std::size_t y = x + 1; y < incident.size(); ++y) {
                    if (!g.adjacent(incident[x], incident[y]))
                        throw GraphError("links " + std::to_string(incident[x]) + " and " +
                                         std::to_string(incident[y]) + " share an endpoint but are not adjacent");
                    ++expected;
                }
        if (expected != edges.size()) throw GraphError("conflict edges not explained by shared endpoints");
    }
    g.link_endpoints_ = std::move(link_endpoints);
    g.source_seed_ = source_seed;
    return g;
}

bool ConflictGraph::adjacent(std::size_t i, std::size_t j) const {
    const auto& nb = neighbors_[i];
    return std::binary_search(nb.begin(), nb.end(), j);
}

std::vector<Edge> ConflictGraph::edges() const {
    std::vector<Edge> out;
    for (std::size_t i = 0; i < neighbors_.size(); ++i)
        for (std::size_t j : neighbors_[i])
            if (i < j) out.emplace_back(i, j);
    return out;
}

std::size_t ConflictGraph::n_edges() const {
    std::size_t total = 0;
    for (const auto& nb : neighbors_) total += nb.size();
    return total / 2;
}

ConflictGraph ConflictGraph::permuted(std::span<const std::size_t> perm) const {
    if (perm.size() != n_links()) throw GraphError("permutation size mismatch");
    std::vector<Edge> mapped;
    for (const auto& [i, j] : edges()) {
        const auto a = perm[i], b = perm[j];
        mapped.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::vector<Edge> endpoints;
    if (!link_endpoints_.empty()) {
        endpoints.resize(n_links());
        for (std::size_t i = 0; i < n_links(); ++i) endpoints[perm[i]] = link_endpoints_[i];
    }
    return from_edges(n_links(), mapped, std::move(endpoints), source_seed_);
}

double cell_side(std::size_t n_nodes) {
    return std::sqrt(static_cast<double>(n_nodes)) / static_cast<double>(ceil_sqrt(n_nodes));
}

CommGraph generate_comm_graph(std::size_t n_nodes, double radius_factor, std::uint64_t seed) {
    if (n_nodes < 2) throw GraphError("n_nodes must be at least 2");
    if (!(radius_factor > 0.0)) throw GraphError("radius_factor must be positive");

    const std::size_t side = ceil_sqrt(n_nodes);
    const double l_cell = cell_side(n_nodes);

    std::vector<std::size_t> cells(side * side);
    std::iota(cells.begin(), cells.end(), std::size_t{0});
    Rng rng = make_rng(seed, 1);
    std::shuffle(cells.begin(), cells.end(), rng);
    cells.resize(n_nodes);
    std::sort(cells.begin(), cells.end());

    CommGraph g;
    g.n_nodes = n_nodes;
    g.seed = seed;
    g.positions.reserve(n_nodes);
    for (std::size_t c : cells) {
        const double col = static_cast<double>(c % side);
        const double row = static_cast<double>(c / side);
        g.positions.push_back({(col + 0.5) * l_cell, (row + 0.5) * l_cell});
    }

    // Cell centers sit on an exact lattice, so compare in cell units with a
    // small tolerance to keep the boundary case (distance == radius) stable.
    const double r2 = radius_factor * radius_factor * (1.0 + 1e-12);
    for (std::size_t u = 0; u < n_nodes; ++u)
        for (std::size_t v = u + 1; v < n_nodes; ++v) {
            const double dx = static_cast<double>(cells[u] % side) - static_cast<double>(cells[v] % side);
            const double dy = static_cast<double>(cells[u] / side) - static_cast<double>(cells[v] / side);
            if (dx * dx + dy * dy <= r2) g.edges.emplace_back(u, v);
        }
    return g;
}

ConflictGraph line_graph(const CommGraph& comm) {
    if (comm.edges.empty()) throw GraphError("no links");
    std::vector<Edge> links = comm.edges;
    std::sort(links.begin(), links.end());

    std::vector<std::vector<std::size_t>> incident(comm.n_nodes);
    for (std::size_t i = 0; i < links.size(); ++i) {
        incident[links[i].first].push_back(i);
        incident[links[i].second].push_back(i);
    }
    std::set<Edge> conflicts;
    for (const auto& inc : incident)
        for (std::size_t x = 0; x < inc.size(); ++x)
            for (std::size_t y = x + 1; y < inc.size(); ++y)
                conflicts.emplace(std::min(inc[x], inc[y]), std::max(inc[x], inc[y]));

    const std::vector<Edge> edges(conflicts.begin(), conflicts.end());
    const std::size_t n_links = links.size();
    return ConflictGraph::from_edges(n_links, edges, std::move(links), comm.seed);
}

CsrMatrix shift_operator(const ConflictGraph& graph, ShiftKind kind) {
    const std::size_t n = graph.n_links();
    CsrMatrix s;
    s.n = n;
    s.row_ptr.assign(n + 1, 0);
    std::vector<double> inv_sqrt_deg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (graph.degree(i) > 0) inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(graph.degree(i)));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j : graph.neighbors(i)) {
            s.col.push_back(j);
            s.val.push_back(kind == ShiftKind::Raw ? 1.0 : inv_sqrt_deg[i] * inv_sqrt_deg[j]);
        }
        s.row_ptr[i + 1] = s.col.size();
    }
    return s;
}

std::vector<double> shift(const ConflictGraph& graph, std::span<const double> signal, ShiftKind kind) {
    if (signal.size() != graph.n_links())
        throw std::invalid_argument("shift: signal length " + std::to_string(signal.size()) + " != K " +
                                    std::to_string(graph.n_links()));
    std::vector<double> out(signal.size());
    kernels::spmv(shift_operator(graph, kind), signal, out);
    return out;
}

std::vector<double> shift(const ConflictGraph& graph, std::span<const double> signal) {
    return shift(graph, signal, ShiftKind::Raw);
}

GraphStats graph_stats(const ConflictGraph& graph) {
    GraphStats st;
    st.n_links = graph.n_links();
    std::size_t total = 0;
    for (std::size_t i = 0; i < graph.n_links(); ++i) {
        const std::size_t d = graph.degree(i);
        if (st.degree_histogram.size() <= d) st.degree_histogram.resize(d + 1, 0);
        ++st.degree_histogram[d];
        total += d;
    }
    st.mean_degree = st.n_links == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(st.n_links);
    return st;
}

void save_graph(const std::filesystem::path& path, const CommGraph& graph) {
    json doc;
    doc["type"] = "comm";
    doc["n"] = graph.n_nodes;
    doc["edges"] = pairs_json(graph.edges);
    json pos = json::array();
    for (const auto& p : graph.positions) pos.push_back({p.x, p.y});
    doc["positions"] = std::move(pos);
    doc["seed"] = graph.seed;
    write_json(path, doc);
}

void save_graph(const std::filesystem::path& path, const ConflictGraph& graph) {
    json doc;
    doc["type"] = "conflict";
    doc["n"] = graph.n_links();
    doc["edges"] = pairs_json(graph.edges());
    if (!graph.link_endpoints().empty()) doc["link_endpoints"] = pairs_json(graph.link_endpoints());
    doc["seed"] = graph.source_seed();
    write_json(path, doc);
}

CommGraph load_comm_graph(const std::filesystem::path& path) {
    const json doc = read_json(path);
    if (get_field<std::string>(path, doc, "type") != "comm") fail(path, "type", "expected \"comm\"");
    CommGraph g;
    g.n_nodes = get_field<std::size_t>(path, doc, "n");
    g.seed = get_field<std::uint64_t>(path, doc, "seed");
    g.edges = read_pairs(path, doc, "edges");
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        const auto [u, v] = g.edges[i];
        const std::string where = "edges[" + std::to_string(i) + "]";
        if (u >= g.n_nodes || v >= g.n_nodes) fail(path, where, "node id out of range");
        if (u == v) fail(path, where, "self loop");
        if (u > v) fail(path, where, "pair not stored as i<j");
        if (i > 0 && !(g.edges[i - 1] < g.edges[i])) fail(path, where, "edges not sorted or duplicated");
    }
    if (doc.contains("positions")) {
        const json& pos = doc.at("positions");
        if (!pos.is_array() || pos.size() != g.n_nodes) fail(path, "positions", "expected n [x, y] pairs");
        for (std::size_t i = 0; i < pos.size(); ++i) {
            if (!pos[i].is_array() || pos[i].size() != 2 || !pos[i][0].is_number() || !pos[i][1].is_number())
                fail(path, "positions[" + std::to_string(i) + "]", "expected [x, y]");
            g.positions.push_back({pos[i][0].get<double>(), pos[i][1].get<double>()});
        }
    }
    return g;
}

ConflictGraph load_conflict_graph(const std::filesystem::path& path) {
    const json doc = read_json(path);
    if (get_field<std::string>(path, doc, "type") != "conflict") fail(path, "type", "expected \"conflict\"");
    const auto n = get_field<std::size_t>(path, doc, "n");
    const auto seed = get_field<std::uint64_t>(path, doc, "seed");
    const auto edges = read_pairs(path, doc, "edges");
    std::vector<Edge> endpoints;
    if (doc.contains("link_endpoints")) endpoints = read_pairs(path, doc, "link_endpoints");
    try {
        return ConflictGraph::from_edges(n, edges, std::move(endpoints), seed);
    } catch (const GraphError& e) {
        fail(path, "edges", e.what());
    }
}

}  // namespace sagnn
