#include <doctest.h>

#include <random>

#include "sagnn/executor.hpp"
#include "test_support.hpp"

using namespace sagnn;

namespace {

using Vec = std::vector<double>;

// Exact maximizer of the augmented Lagrangian on one conflict edge: schedule
// the link with the larger multiplier, ties to link 0.
PolicyFn edge_oracle() {
    return [](std::span<const double> l) { return l[1] > l[0] ? Vec{0, 1} : Vec{1, 0}; };
}

}  // namespace

TEST_CASE("dual update examples") {
    const auto req = Requirements::uniform(1, 0.1);
    CHECK(dual_update({{1.0}, 2.0}, Vec{0.0}, req, 0.0).lambda[0] == doctest::Approx(1.2).epsilon(1e-15));
    CHECK(dual_update({{0.1}, 2.0}, Vec{1.0}, req, 0.0).lambda[0] == 0.0);
    CHECK(dual_update({{0.7}, 2.0}, Vec{0.05}, req, 0.05).lambda[0] == 0.7);
    CHECK_THROWS_AS(dual_update({{0.7, 1.0}, 2.0}, Vec{0.05}, req, 0.0), std::invalid_argument);
}

TEST_CASE("oracle policy keeps both links of the toy edge feasible") {
    ExecConfig cfg;
    cfg.horizon = 200;
    cfg.eta_dual = 2.0;
    cfg.dual_signal = DualSignal::Binary;
    const auto trace = execute(test::single_edge(), edge_oracle(), Requirements::uniform(2, 0.4), cfg);
    for (double v : trace.metrics.avg_success) CHECK(v >= 0.35);
}

TEST_CASE("frozen dual keeps lambda at zero and repeats the schedule") {
    ExecConfig cfg;
    cfg.eta_dual = 0.0;
    cfg.horizon = 25;
    const auto g = line_graph(generate_comm_graph(30, 1.2, 2));
    const auto params = init_params([] {
        ArchConfig a;
        a.features = 8;
        return a;
    }(),
                                    3);
    const auto trace = execute(g, params, Requirements::uniform(g.n_links(), 0.1), cfg);
    for (const auto& l : trace.lambda_trajectory)
        for (double v : l) CHECK(v == 0.0);
    for (const auto& s : trace.schedules) CHECK(s == trace.schedules.front());
}

TEST_CASE("trace shapes, nonnegativity, update sign structure and metrics consistency") {
    std::mt19937_64 rng(4);
    const auto g = test::random_graph(15, 0.3, 5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // A stateless random policy exercises arbitrary success patterns.
    PolicyFn policy = [&](std::span<const double>) {
        Vec out(15);
        for (double& v : out) v = u(rng);
        return out;
    };
    for (DualSignal signal : {DualSignal::Binary, DualSignal::Relaxed}) {
        ExecConfig cfg;
        cfg.horizon = 60;
        cfg.resilience = 0.05;
        cfg.dual_signal = signal;
        const auto req = Requirements::uniform(15, 0.2);
        const auto trace = execute(g, policy, req, cfg, "g");
        REQUIRE(trace.schedules.size() == 60);
        REQUIRE(trace.lambda_trajectory.size() == 61);
        for (const auto& l : trace.lambda_trajectory)
            for (double v : l) CHECK(v >= 0.0);
        if (signal == DualSignal::Binary) {
            for (std::size_t t = 0; t < 60; ++t) {
                const auto succ = successful_transmissions(g, trace.schedules[t]);
                for (std::size_t i = 0; i < 15; ++i) {
                    const double before = trace.lambda_trajectory[t][i], after = trace.lambda_trajectory[t + 1][i];
                    if (succ[i] < 0.2 - 0.05)
                        CHECK(after > before);
                    else
                        CHECK(after <= before);
                }
            }
        }
        CHECK(trace.metrics.avg_success == time_avg_success(g, trace.schedules));
        CHECK(trace.metrics.graph_id == "g");
    }
}

TEST_CASE("execution is deterministic") {
    const auto g = line_graph(generate_comm_graph(40, 1.2, 6));
    ArchConfig a;
    a.features = 8;
    const auto params = init_params(a, 1);
    ExecConfig cfg;
    cfg.horizon = 30;
    cfg.resilience = 0.05;
    const auto req = Requirements::uniform(g.n_links(), 0.1);
    const auto t1 = execute(g, params, req, cfg);
    const auto t2 = execute(g, params, req, cfg);
    CHECK(t1.schedules == t2.schedules);
    CHECK(t1.lambda_trajectory == t2.lambda_trajectory);
    CHECK(t1.metrics == t2.metrics);
}

TEST_CASE("config validation") {
    ExecConfig cfg;
    cfg.resilience = 0.1;
    CHECK_THROWS_AS(cfg.validate(Requirements::uniform(3, 0.1)), std::invalid_argument);
    CHECK_NOTHROW(cfg.validate(Requirements::uniform(3, 0.125)));
    cfg.horizon = 0;
    CHECK_THROWS_AS(cfg.validate(Requirements::uniform(3, 0.125)), std::invalid_argument);
    CHECK(parse_dual_signal("binary") == DualSignal::Binary);
    CHECK_THROWS_AS(parse_dual_signal("soft"), std::invalid_argument);
}
