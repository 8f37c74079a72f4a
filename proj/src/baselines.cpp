#include "sagnn/baselines.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace sagnn {
namespace {

// Streams within one baseline run.
constexpr std::uint64_t kSampleStream = 21;
constexpr std::uint64_t kCollisionStream = 22;

std::vector<Schedule> finish(const ConflictGraph& graph, std::vector<Schedule> schedules, const BaselineConfig& cfg) {
    if (!cfg.collision_avoidance) return schedules;
    Rng rng = make_rng(cfg.seed, kCollisionStream);
    for (auto& s : schedules) s = resolve_collisions(graph, s, rng);
    return schedules;
}

struct MisSearch {
    std::vector<std::uint64_t> adj;
    std::uint64_t best_set = 0;
    int best_size = -1;

    void run(std::uint64_t candidates, std::uint64_t chosen, int size) {
        if (candidates == 0) {
            if (size > best_size) {
                best_size = size;
                best_set = chosen;
            }
            return;
        }
        if (size + std::popcount(candidates) <= best_size) return;
        const int v = std::countr_zero(candidates);
        const std::uint64_t bit = std::uint64_t{1} << v;
        run(candidates & ~bit & ~adj[v], chosen | bit, size + 1);
        // Excluding v only helps when v has a neighbor among the candidates.
        if ((adj[v] & candidates) != 0) run(candidates & ~bit, chosen, size);
    }
};

}  // namespace

void BaselineConfig::validate() const {
    if (horizon < 1) throw std::invalid_argument("baseline: horizon T must be >= 1");
    if (!(persistence_exponent >= 0.0)) throw std::invalid_argument("baseline: persistence exponent must be >= 0");
}

std::vector<Schedule> p_persistent_schedule(const ConflictGraph& graph, const BaselineConfig& cfg) {
    cfg.validate();
    const std::size_t n = graph.n_links();
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i)
        p[i] = std::pow(1.0 + static_cast<double>(graph.degree(i)), -cfg.persistence_exponent);

    Rng rng = make_rng(cfg.seed, kSampleStream);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<Schedule> out;
    out.reserve(cfg.horizon);
    for (std::size_t t = 0; t < cfg.horizon; ++t) {
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) s[i] = u01(rng) < p[i] ? 1.0 : 0.0;
        out.emplace_back(std::move(s), ScheduleMode::Binary);
    }
    return finish(graph, std::move(out), cfg);
}

Schedule resolve_collisions(const ConflictGraph& graph, const Schedule& s, Rng& rng) {
    if (s.mode() != ScheduleMode::Binary) throw std::invalid_argument("resolve_collisions: expects a binary schedule");
    if (s.size() != graph.n_links()) throw std::invalid_argument("resolve_collisions: length mismatch");
    std::vector<double> v = s.values();
    std::bernoulli_distribution coin(0.5);
    for (;;) {
        std::vector<Edge> pairs;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i] == 0.0) continue;
            for (std::size_t j : graph.neighbors(i))
                if (i < j && v[j] != 0.0) pairs.emplace_back(i, j);
        }
        if (pairs.empty()) break;
        std::shuffle(pairs.begin(), pairs.end(), rng);
        for (const auto& [i, j] : pairs) {
            if (v[i] == 0.0 || v[j] == 0.0) continue;
            if (coin(rng))
                v[i] = 0.0;
            else
                v[j] = 0.0;
        }
    }
    return {std::move(v), ScheduleMode::Binary};
}

std::vector<std::size_t> greedy_mis(const ConflictGraph& graph) {
    const std::size_t n = graph.n_links();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return graph.degree(a) < graph.degree(b); });
    std::vector<bool> blocked(n, false);
    std::vector<std::size_t> chosen;
    for (std::size_t i : order) {
        if (blocked[i]) continue;
        chosen.push_back(i);
        blocked[i] = true;
        for (std::size_t j : graph.neighbors(i)) blocked[j] = true;
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

std::vector<std::size_t> exact_mis(const ConflictGraph& graph) {
    const std::size_t n = graph.n_links();
    if (n > kExactMisMaxLinks)
        throw std::invalid_argument("exact_mis: K = " + std::to_string(n) + " exceeds the limit of " +
                                    std::to_string(kExactMisMaxLinks));
    MisSearch search;
    search.adj.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j : graph.neighbors(i)) search.adj[i] |= std::uint64_t{1} << j;
    const std::uint64_t all = n == 0 ? 0 : (n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1);
    search.run(all, 0, 0);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i)
        if (search.best_set & (std::uint64_t{1} << i)) out.push_back(i);
    return out;
}

std::vector<Schedule> mis_random_schedule(const ConflictGraph& graph, const BaselineConfig& cfg) {
    cfg.validate();
    const std::size_t n = graph.n_links();
    const std::size_t m = greedy_mis(graph).size();
    Rng rng = make_rng(cfg.seed, kSampleStream);
    std::vector<std::size_t> ids(n);
    std::vector<Schedule> out;
    out.reserve(cfg.horizon);
    for (std::size_t t = 0; t < cfg.horizon; ++t) {
        std::iota(ids.begin(), ids.end(), std::size_t{0});
        // Partial Fisher-Yates: the first m entries are a uniform m-subset.
        for (std::size_t i = 0; i < m; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, n - 1);
            std::swap(ids[i], ids[pick(rng)]);
        }
        std::vector<double> s(n, 0.0);
        for (std::size_t i = 0; i < m; ++i) s[ids[i]] = 1.0;
        out.emplace_back(std::move(s), ScheduleMode::Binary);
    }
    return finish(graph, std::move(out), cfg);
}

std::vector<Schedule> run_baseline(const ConflictGraph& graph, const BaselineConfig& cfg) {
    return cfg.kind == BaselineKind::PPersistent ? p_persistent_schedule(graph, cfg)
                                                 : mis_random_schedule(graph, cfg);
}

std::string baseline_label(const BaselineConfig& cfg) {
    std::string label = cfg.kind == BaselineKind::PPersistent ? "p_persistent" : "mis_random";
    if (cfg.collision_avoidance) label += "_ca";
    return label;
}

BaselineKind parse_baseline_kind(const std::string& s) {
    if (s == "p_persistent") return BaselineKind::PPersistent;
    if (s == "mis_random") return BaselineKind::MisRandom;
    throw std::invalid_argument("unknown baseline kind '" + s + "' (expected p_persistent|mis_random)");
}

}  // namespace sagnn
