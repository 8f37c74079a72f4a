#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "sagnn/baselines.hpp"
#include "sagnn/metrics.hpp"
#include "test_support.hpp"

using namespace sagnn;

namespace {

using Vec = std::vector<double>;

bool independent(const ConflictGraph& g, const std::vector<std::size_t>& set) {
    for (std::size_t a : set)
        for (std::size_t b : set)
            if (g.adjacent(a, b)) return false;
    return true;
}

bool conflict_free(const ConflictGraph& g, const Schedule& s) {
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i] != 0.0)
            for (std::size_t j : g.neighbors(i))
                if (s[j] != 0.0) return false;
    return true;
}

// Every edge has degree 4: a ring where each node links to the next two.
ConflictGraph regular4(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d : {1u, 2u}) {
            const std::size_t j = (i + d) % n;
            e.emplace_back(std::min(i, j), std::max(i, j));
        }
    std::sort(e.begin(), e.end());
    return ConflictGraph::from_edges(n, e);
}

double mean_objective(const ConflictGraph& g, const std::vector<Schedule>& s) {
    double total = 0.0;
    for (const auto& x : s) total += objective(g, x);
    return total / static_cast<double>(s.size());
}

}  // namespace

TEST_CASE("p-persistent: isolated link always transmits and succeeds") {
    BaselineConfig cfg;
    cfg.horizon = 50;
    const auto g = test::edgeless(3);
    for (const auto& s : p_persistent_schedule(g, cfg)) CHECK(s.values() == Vec{1, 1, 1});
    const auto m = compute_metrics(g, p_persistent_schedule(g, cfg), Requirements::uniform(3, 0.1), "e", 0.1);
    CHECK(m.objective_fraction == 1.0);
}

TEST_CASE("p-persistent: empirical frequency on a 4-regular graph is 1/5") {
    BaselineConfig cfg;
    cfg.horizon = 200;
    cfg.seed = 17;
    const auto g = regular4(1000);
    const auto sched = p_persistent_schedule(g, cfg);
    const double sd = std::sqrt(0.2 * 0.8 / 200.0);
    std::size_t outside = 0;
    for (std::size_t i = 0; i < 1000; ++i) {
        double f = 0.0;
        for (const auto& s : sched) f += s[i];
        f /= 200.0;
        if (std::abs(f - 0.2) > 3 * sd) ++outside;
    }
    // About 0.3% of links fall outside 3 sigma by chance.
    CHECK(outside <= 10);
    double total = 0.0;
    for (const auto& s : sched)
        for (double v : s.values()) total += v;
    CHECK(std::abs(total / (1000.0 * 200.0) - 0.2) < 3 * std::sqrt(0.16 / 200000.0));
}

TEST_CASE("baselines are pure functions of their seed") {
    const auto g = line_graph(generate_comm_graph(60, 1.2, 1));
    for (auto kind : {BaselineKind::PPersistent, BaselineKind::MisRandom})
        for (bool ca : {false, true}) {
            BaselineConfig cfg{kind, ca, 30, 5, 1.0};
            CHECK(run_baseline(g, cfg) == run_baseline(g, cfg));
            BaselineConfig other = cfg;
            other.seed = 6;
            CHECK_FALSE(run_baseline(g, cfg) == run_baseline(g, other));
        }
}

TEST_CASE("resolve_collisions") {
    std::mt19937_64 rng(1);
    SUBCASE("conflict-free input is unchanged") {
        const Schedule s(Vec{1, 0, 1}, ScheduleMode::Binary);
        CHECK(resolve_collisions(test::path3(), s, rng) == s);
    }
    SUBCASE("single edge keeps exactly one link, each half the time") {
        const Schedule both(Vec{1, 1}, ScheduleMode::Binary);
        int first = 0;
        for (int i = 0; i < 4000; ++i) {
            const auto out = resolve_collisions(test::single_edge(), both, rng);
            CHECK(out[0] + out[1] == 1.0);
            first += out[0] == 1.0;
        }
        CHECK(std::abs(first / 4000.0 - 0.5) < 3 * std::sqrt(0.25 / 4000.0));
    }
    SUBCASE("output is independent and dominated by the input") {
        std::bernoulli_distribution coin(0.6);
        for (int trial = 0; trial < 200; ++trial) {
            const auto g = test::random_graph(20, 0.3, trial);
            Vec v(20);
            for (double& x : v) x = coin(rng);
            const Schedule s(v, ScheduleMode::Binary);
            const auto out = resolve_collisions(g, s, rng);
            CHECK(conflict_free(g, out));
            double ones = 0.0;
            for (std::size_t i = 0; i < 20; ++i) {
                CHECK(out[i] <= s[i]);
                ones += out[i];
            }
            CHECK(objective(g, out) == ones);
        }
    }
}

TEST_CASE("greedy MIS examples and properties") {
    CHECK(greedy_mis(test::edgeless(5)).size() == 5);
    CHECK(greedy_mis(test::triangle()).size() == 1);
    CHECK(greedy_mis(test::path3()) == std::vector<std::size_t>{0, 2});
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto g = test::random_graph(25, 0.2, seed);
        const auto mis = greedy_mis(g);
        CHECK(independent(g, mis));
        // Maximal: every other link has a neighbor in the set.
        std::vector<bool> in(25, false);
        for (std::size_t i : mis) in[i] = true;
        for (std::size_t i = 0; i < 25; ++i) {
            if (in[i]) continue;
            bool blocked = false;
            for (std::size_t j : g.neighbors(i)) blocked = blocked || in[j];
            CHECK(blocked);
        }
    }
}

TEST_CASE("exact MIS examples, guard and dominance over greedy") {
    CHECK(exact_mis(test::triangle()).size() == 1);
    CHECK(exact_mis(test::cycle(5)).size() == 2);
    CHECK(exact_mis(test::edgeless(7)).size() == 7);
    CHECK_THROWS_AS(exact_mis(test::edgeless(31)), std::invalid_argument);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto g = test::random_graph(8 + seed % 13, 0.3, 900 + seed);
        const auto exact = exact_mis(g);
        CHECK(independent(g, exact));
        CHECK(exact.size() >= greedy_mis(g).size());
        // Brute force for the smaller instances.
        if (g.n_links() <= 14) {
            std::size_t best = 0;
            for (std::uint32_t mask = 0; mask < (1u << g.n_links()); ++mask) {
                std::vector<std::size_t> set;
                for (std::size_t i = 0; i < g.n_links(); ++i)
                    if (mask >> i & 1u) set.push_back(i);
                if (independent(g, set)) best = std::max(best, set.size());
            }
            CHECK(exact.size() == best);
        }
    }
}

TEST_CASE("MIS-random schedules M links per step") {
    BaselineConfig cfg{BaselineKind::MisRandom, false, 40, 3, 1.0};
    const auto g = line_graph(generate_comm_graph(80, 1.2, 4));
    const std::size_t m = greedy_mis(g).size();
    for (const auto& s : mis_random_schedule(g, cfg)) {
        double ones = 0.0;
        for (double v : s.values()) ones += v;
        CHECK(ones == static_cast<double>(m));
    }
    const auto e = test::edgeless(6);
    for (const auto& s : mis_random_schedule(e, cfg)) CHECK(objective(e, s) == 6.0);
}

TEST_CASE("collision avoidance improves MIS-random on dense graphs") {
    double naive = 0.0, ca = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto g = test::random_graph(60, 0.15, 300 + seed);
        BaselineConfig cfg{BaselineKind::MisRandom, false, 50, seed, 1.0};
        naive += mean_objective(g, run_baseline(g, cfg));
        cfg.collision_avoidance = true;
        const auto sched = run_baseline(g, cfg);
        for (const auto& s : sched) CHECK(conflict_free(g, s));
        ca += mean_objective(g, sched);
    }
    CHECK(ca > naive);
}

TEST_CASE("labels") {
    CHECK(baseline_label({BaselineKind::PPersistent, false}) == "p_persistent");
    CHECK(baseline_label({BaselineKind::MisRandom, true}) == "mis_random_ca");
    CHECK_THROWS_AS(parse_baseline_kind("aloha"), std::invalid_argument);
}
