#include <doctest.h>

#include <algorithm>
#include <random>

#include "sagnn/metrics.hpp"
#include "sagnn/scheduling.hpp"
#include "test_support.hpp"

using namespace sagnn;

namespace {

using Vec = std::vector<double>;

// Independent oracle: a scheduled link succeeds iff no neighbor (by matrix scan) is scheduled.
std::vector<int> oracle_success(const ConflictGraph& g, const std::vector<int>& s) {
    std::vector<int> out(s.size(), 0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s[i]) continue;
        bool clear = true;
        for (std::size_t j = 0; j < s.size(); ++j)
            if (g.adjacent(i, j) && s[j]) clear = false;
        out[i] = clear ? 1 : 0;
    }
    return out;
}

}  // namespace

TEST_CASE("schedule validates its mode") {
    CHECK_NOTHROW(Schedule(Vec{0, 1}, ScheduleMode::Binary));
    CHECK_THROWS_AS(Schedule(Vec{0.5}, ScheduleMode::Binary), std::invalid_argument);
    CHECK_NOTHROW(Schedule(Vec{0.5, 1.0}, ScheduleMode::Relaxed));
    CHECK_THROWS_AS(Schedule(Vec{1.5}, ScheduleMode::Relaxed), std::invalid_argument);
}

TEST_CASE("success indicator examples") {
    CHECK(success_indicator(test::edgeless(3), Vec{1, 1, 1}) == Vec{1, 1, 1});
    CHECK(success_indicator(test::path3(), Vec{1, 0, 1}) == Vec{1, 0, 1});
    CHECK(success_indicator(test::triangle(), Vec{1, 1, 0}) == Vec{0, 0, 0});
    CHECK_THROWS_AS(success_indicator(test::triangle(), Vec{1, 1}), std::invalid_argument);
}

TEST_CASE("successful transmissions and objective examples") {
    CHECK(successful_transmissions(test::path3(), Vec{0, 0, 0}) == Vec{0, 0, 0});
    CHECK(successful_transmissions(test::path3(), Vec{1, 0, 1}) == Vec{1, 0, 1});
    CHECK(successful_transmissions(test::triangle(), Vec{1, 1, 1}) == Vec{0, 0, 0});
    CHECK(objective(test::path3(), Vec{0, 0, 0}) == 0.0);
    CHECK(objective(test::path3(), Vec{1, 0, 1}) == 2.0);
}

TEST_CASE("objective matches the enumeration oracle on every binary schedule") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const std::size_t k = 1 + seed % 9;
        const auto g = test::random_graph(k, 0.4, seed);
        for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
            std::vector<int> s(k);
            Vec sv(k);
            for (std::size_t i = 0; i < k; ++i) sv[i] = s[i] = (mask >> i) & 1u;
            const auto want = oracle_success(g, s);
            const auto got = successful_transmissions(g, sv);
            double count = 0;
            std::size_t scheduled = 0;
            for (std::size_t i = 0; i < k; ++i) {
                CHECK(got[i] == static_cast<double>(want[i]));
                count += want[i];
                scheduled += s[i];
            }
            const double obj = objective(g, sv);
            CHECK(obj == count);
            CHECK(obj <= static_cast<double>(scheduled));
        }
    }
}

TEST_CASE("adding a conflict edge never increases the objective") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const auto g = test::random_graph(8, 0.3, 100 + trial);
        auto edges = g.edges();
        std::vector<Edge> missing;
        for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t j = i + 1; j < 8; ++j)
                if (!g.adjacent(i, j)) missing.emplace_back(i, j);
        if (missing.empty()) continue;
        edges.push_back(missing[rng() % missing.size()]);
        std::sort(edges.begin(), edges.end());
        const auto denser = ConflictGraph::from_edges(8, edges);
        for (std::uint32_t mask = 0; mask < 256; ++mask) {
            Vec s(8);
            for (std::size_t i = 0; i < 8; ++i) s[i] = (mask >> i) & 1u;
            CHECK(objective(denser, s) <= objective(g, s));
        }
    }
}

TEST_CASE("time averaged success") {
    const auto e = test::single_edge();
    const std::vector<Schedule> alt{{Vec{1, 0}, ScheduleMode::Binary}, {Vec{0, 1}, ScheduleMode::Binary}};
    CHECK(time_avg_success(e, alt) == Vec{0.5, 0.5});
    const std::vector<Schedule> same(5, Schedule(Vec{1, 0, 1}, ScheduleMode::Binary));
    CHECK(time_avg_success(test::path3(), same) == Vec{1, 0, 1});
    const std::vector<Schedule> zeros(4, Schedule::zeros(3));
    CHECK(time_avg_success(test::path3(), zeros) == Vec{0, 0, 0});
    CHECK_THROWS_AS(time_avg_success(e, std::vector<Schedule>{}), std::invalid_argument);
}

TEST_CASE("per-step Lagrangian examples") {
    const auto p = test::path3();
    const auto req = Requirements::uniform(3, 0.1);
    CHECK(per_step_lagrangian(p, Vec{1, 0, 1}, Vec{0, 0, 0}, req) == objective(p, Vec{1, 0, 1}));
    CHECK(per_step_lagrangian(p, Vec{0, 0, 0}, Vec{1, 1, 1}, req) == doctest::Approx(-0.3).epsilon(1e-15));
    CHECK(per_step_lagrangian(p, Vec{1, 0, 1}, Vec{1, 1, 1}, req) == doctest::Approx(3.7).epsilon(1e-15));
    CHECK_THROWS_AS(per_step_lagrangian(p, Vec{1, 0, 1}, Vec{1, -1, 1}, req), std::invalid_argument);
}

TEST_CASE("per-step Lagrangian is affine in lambda") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    const auto g = test::random_graph(10, 0.3, 7);
    const auto req = Requirements::uniform(10, 0.12);
    for (int trial = 0; trial < 50; ++trial) {
        Vec s(10), l1(10), l2(10), mid(10);
        for (std::size_t i = 0; i < 10; ++i) {
            s[i] = u(rng) / 3.0;
            l1[i] = u(rng);
            l2[i] = u(rng);
        }
        const double a = u(rng) / 3.0;
        for (std::size_t i = 0; i < 10; ++i) mid[i] = a * l1[i] + (1 - a) * l2[i];
        const double lhs = per_step_lagrangian(g, s, mid, req);
        const double rhs = a * per_step_lagrangian(g, s, l1, req) + (1 - a) * per_step_lagrangian(g, s, l2, req);
        CHECK(std::abs(lhs - rhs) < 1e-12);
    }
}

TEST_CASE("mean of per-step Lagrangians equals the horizon Lagrangian") {
    std::mt19937_64 rng(11);
    std::bernoulli_distribution coin(0.4);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = test::random_graph(12, 0.25, 50 + trial);
        const auto req = Requirements::uniform(12, 0.15);
        Vec lambda(12);
        for (double& v : lambda) v = u(rng);
        std::vector<Schedule> seq;
        double mean = 0.0;
        for (int t = 0; t < 37; ++t) {
            Vec s(12);
            for (double& v : s) v = coin(rng);
            mean += per_step_lagrangian(g, s, lambda, req);
            seq.emplace_back(s, ScheduleMode::Binary);
        }
        mean /= 37.0;
        CHECK(std::abs(mean - horizon_lagrangian(g, seq, lambda, req)) < 1e-10);
    }
}

TEST_CASE("violation level") {
    CHECK(violation_level(Vec{0.1, 0.1}, Requirements::uniform(2, 0.1)) == Vec{0, 0});
    CHECK(violation_level(Vec{0, 0}, Requirements::uniform(2, 0.3)) == Vec{1, 1});
    CHECK(violation_level(Vec{0.095}, Requirements::uniform(1, 0.1))[0] == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(violation_level(Vec{0.0}, Requirements::uniform(1, 0.0))[0] == 0.0);
}

TEST_CASE("metrics record aggregates") {
    const auto p = test::path3();
    const std::vector<Schedule> seq{{Vec{1, 0, 1}, ScheduleMode::Binary},
                                    {Vec{1, 1, 0}, ScheduleMode::Binary},
                                    {Vec{0, 1, 0}, ScheduleMode::Binary},
                                    {Vec{0, 0, 0}, ScheduleMode::Binary}};
    const auto m = compute_metrics(p, seq, Requirements::uniform(3, 0.5), "g", 0.5);
    CHECK(m.horizon == 4);
    CHECK(m.total_transmissions == 5.0);
    CHECK(m.successful_transmissions == 3.0);
    CHECK(m.objective_fraction == doctest::Approx(3.0 / 12.0));
    CHECK(m.avg_success == Vec{0.25, 0.25, 0.25});
    CHECK(m.violations.size() == 3);
    CHECK(m.mean_violation == doctest::Approx(0.5));
    CHECK(m.successful_transmissions <= m.total_transmissions);
}
