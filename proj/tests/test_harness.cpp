#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sagnn/harness.hpp"
#include "test_support.hpp"

using namespace sagnn;
using namespace sagnn::harness;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig tiny_config(const fs::path& root) {
    RunConfig cfg;
    cfg.dataset.train_count = 2;
    cfg.dataset.test_count = 3;
    cfg.dataset.n_min = 16;
    cfg.dataset.n_max = 24;
    cfg.dataset.seed = 5;
    cfg.arch.features = 8;
    cfg.train.epochs = 2;
    cfg.train.dual_samples_per_graph = 2;
    cfg.train.primal_lr = 1e-3;
    cfg.train.seed = 3;
    cfg.exec.horizon = 30;
    cfg.data_dir = root / "data";
    cfg.out_dir = root / "run";
    return cfg;
}

// Hand-written dataset whose test graphs have no conflicts: a perfect matching.
void write_matching_dataset(const fs::path& dir) {
    CommGraph comm{6, {}, {{0, 1}, {2, 3}, {4, 5}}, 0};
    const ConflictGraph conflict = line_graph(comm);
    nlohmann::json manifest;
    manifest["spec"] = {{"train_count", 1}, {"test_count", 1}, {"n_min", 6},
                        {"n_max", 6},       {"radius_factor", 1.2}, {"seed", 0}};
    nlohmann::json entry = {{"id", "m"}, {"n_nodes", 6}, {"n_links", 3}, {"mean_comm_degree", 1.0},
                            {"mean_conflict_degree", 0.0}, {"greedy_mis", 3}, {"seed", 0},
                            {"comm_file", "m.comm.json"}, {"conflict_file", "m.conflict.json"}};
    manifest["train"] = {entry};
    manifest["test"] = {entry};
    for (const char* split : {"train", "test"}) {
        save_graph(dir / split / "m.comm.json", comm);
        save_graph(dir / split / "m.conflict.json", conflict);
    }
    std::ofstream(dir / "manifest.json") << manifest.dump(2);
}

}  // namespace

TEST_CASE("number formatting round-trips exactly") {
    for (double v : {0.0, 1.0, 0.1, 1.0 / 3.0, 123456.789, 1e-300, -2.5e17}) CHECK(parse_number(format_number(v)) == v);
    CHECK(format_number(0.125) == "0.125");
    CHECK(std::isnan(parse_number("")));
    CHECK_THROWS(parse_number("1.2x"));
}

TEST_CASE("CSV tables round-trip and reject malformed rows") {
    const auto dir = test::scratch_dir("csv");
    CsvTable t;
    t.header = {"a", "b"};
    t.rows = {{"1", "x"}, {"", "0.25"}};
    write_csv(dir / "t.csv", t);
    const auto back = read_csv(dir / "t.csv");
    CHECK(back.header == t.header);
    CHECK(back.rows == t.rows);
    CHECK(back.column("b") == 1);
    CHECK_THROWS(back.column("c"));
    std::ofstream(dir / "bad.csv") << "a,b\n1,2,3\n";
    CHECK_THROWS(read_csv(dir / "bad.csv"));
    t.rows = {{"1,2", "x"}};
    CHECK_THROWS(write_csv(dir / "q.csv", t));
}

TEST_CASE("running average") {
    CHECK(running_average({2, 2, 2, 2, 2, 2, 2}, 5) == std::vector<double>(7, 2.0));
    const auto r = running_average({1, 2, 3, 4, 5, 6}, 5);
    CHECK(r[0] == 1.0);
    CHECK(r[1] == 1.5);
    CHECK(r[4] == 3.0);
    CHECK(r[5] == 4.0);
}

TEST_CASE("run config round-trips, rejects unknown keys and inconsistent requirements") {
    const auto dir = test::scratch_dir("config");
    RunConfig cfg = tiny_config(dir);
    cfg.requirements = {{0.2, 0.1}};
    cfg.exec.dual_signal = DualSignal::Binary;
    cfg.arch.eval_stats = NormStats::Running;
    save_run_config(dir / "c.json", cfg);
    const RunConfig back = load_run_config(dir / "c.json");
    CHECK(run_config_json(back) == run_config_json(cfg));

    std::ofstream(dir / "typo.json") << R"({"train": {"epoch": 3}})";
    CHECK_THROWS_WITH(load_run_config(dir / "typo.json"), doctest::Contains("train.epoch"));

    std::ofstream(dir / "partial.json") << R"({"train": {"epochs": 3}})";
    const RunConfig partial = load_run_config(dir / "partial.json");
    CHECK(partial.train.epochs == 3);
    CHECK(partial.arch.features == 256);

    cfg.requirements = {{0.1, 0.1}};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("gen-data: manifest, determinism and the 4-cycle family") {
    const auto dir = test::scratch_dir("gen");
    DatasetSpec spec;
    spec.train_count = 2;
    spec.test_count = 2;
    spec.n_min = 30;
    spec.n_max = 40;
    spec.seed = 11;
    const Manifest m = cmd_gen_data(spec, dir / "a");
    cmd_gen_data(spec, dir / "b");
    CHECK(m.train.size() == 2);
    CHECK(m.test.size() == 2);
    for (const auto& name : {"manifest.json", "train/train_000.conflict.json", "test/test_001.comm.json"})
        CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
    const Dataset ds = load_dataset(dir / "a");
    REQUIRE(ds.test.size() == 2);
    CHECK(ds.test[1].n_links() == m.test[1].n_links);
    CHECK(m.test[1].n_nodes >= 30);
    CHECK(m.test[1].n_nodes <= 40);

    spec.n_min = spec.n_max = 4;
    const Manifest four = cmd_gen_data(spec, dir / "four");
    for (const auto& split : {"train", "test"})
        for (std::size_t i = 0; i < 2; ++i) {
            const CommGraph g = load_comm_graph(dir / "four" / split / (std::string(split) + "_00" + std::to_string(i) + ".comm.json"));
            CHECK(g.edges.size() == 4);
            for (std::size_t d : g.degrees()) CHECK(d == 2);
        }
    spec.train_count = 0;
    CHECK_THROWS(cmd_gen_data(spec, dir / "none"));
    CHECK_THROWS_WITH(load_dataset(dir / "missing"), doctest::Contains("manifest.json"));
}

TEST_CASE("train: zero epochs writes a header-only log and the initial checkpoint") {
    const auto dir = test::scratch_dir("train0");
    RunConfig cfg = tiny_config(dir);
    cmd_gen_data(cfg.dataset, cfg.data_dir);
    cfg.train.epochs = 0;
    const auto r = cmd_train(cfg);
    const auto log = read_csv(cfg.out_dir / "train_log.csv");
    CHECK(log.rows.empty());
    CHECK(log.header == std::vector<std::string>{"epoch", "mean_lagrangian", "mean_violation@0.1", "mean_violation@0.125",
                                                 "mean_violation@0.15", "objective_fraction@0.1",
                                                 "objective_fraction@0.125", "objective_fraction@0.15"});
    CHECK(load_params(cfg.out_dir / "checkpoints" / "epoch_0000.params") == init_params(cfg.arch, cfg.train.seed));
    CHECK(load_params(cfg.out_dir / "policy.params") == r.params);
}

TEST_CASE("train, eval and baselines end to end on a tiny dataset") {
    const auto dir = test::scratch_dir("pipeline");
    RunConfig cfg = tiny_config(dir);
    cmd_gen_data(cfg.dataset, cfg.data_dir);
    cfg.train.eval_every = 1;
    cmd_train(cfg);

    const auto log = read_csv(cfg.out_dir / "train_log.csv");
    REQUIRE(log.rows.size() == 2);
    for (const auto& row : log.rows)
        for (const auto& cell : row) CHECK_FALSE(cell.empty());

    cfg.write_traces = true;
    const auto checkpoint = cfg.out_dir / "policy.params";
    const auto out = cmd_eval(cfg, checkpoint);
    CHECK(out.records.size() == 3 * 3);
    const std::string first = slurp(cfg.out_dir / "eval_metrics.csv");
    cmd_eval(cfg, checkpoint);
    CHECK(slurp(cfg.out_dir / "eval_metrics.csv") == first);

    const auto metrics = read_csv(cfg.out_dir / "eval_metrics.csv");
    CHECK(metrics.header ==
          std::vector<std::string>{"graph_id", "delta", "objective_fraction", "mean_violation", "total_tx", "successful_tx"});
    const auto id = metrics.column("graph_id"), d = metrics.column("delta");
    std::size_t aggregates = 0;
    for (const auto& agg : metrics.rows) {
        if (agg[id] != "ALL") continue;
        ++aggregates;
        for (const char* col : {"objective_fraction", "mean_violation", "total_tx", "successful_tx"}) {
            const auto c = metrics.column(col);
            double sum = 0.0;
            int n = 0;
            for (const auto& row : metrics.rows)
                if (row[id] != "ALL" && row[d] == agg[d]) {
                    sum += parse_number(row[c]);
                    ++n;
                }
            CHECK(std::abs(sum / n - parse_number(agg[c])) < 1e-10);
        }
    }
    CHECK(aggregates == 3);

    // Recompute every metric row from the emitted schedule traces.
    const Dataset ds = load_dataset(cfg.data_dir);
    std::vector<MetricsRecord> recomputed;
    for (std::size_t g = 0; g < ds.test.size(); ++g)
        for (const auto& s : cfg.requirements) {
            const auto t = read_csv(cfg.out_dir / "traces" /
                                    (ds.manifest.test[g].id + "_d" + format_number(s.delta) + "_schedules.csv"));
            std::vector<std::vector<double>> steps(cfg.exec.horizon, std::vector<double>(ds.test[g].n_links()));
            for (const auto& row : t.rows)
                steps[std::stoul(row[0])][std::stoul(row[1])] = parse_number(row[2]);
            std::vector<Schedule> schedules;
            for (auto& v : steps) schedules.emplace_back(std::move(v), ScheduleMode::Binary);
            recomputed.push_back(compute_metrics(ds.test[g], schedules, Requirements::uniform(ds.test[g].n_links(), s.delta),
                                                 ds.manifest.test[g].id, s.delta));
            const auto lambda = read_csv(cfg.out_dir / "traces" /
                                         (ds.manifest.test[g].id + "_d" + format_number(s.delta) + "_lambda.csv"));
            CHECK(lambda.rows.size() == (cfg.exec.horizon + 1) * ds.test[g].n_links());
        }
    const auto per_graph = metrics_table(recomputed);
    for (std::size_t i = 0; i < per_graph.rows.size(); ++i) CHECK(per_graph.rows[i] == metrics.rows[i]);
    CHECK(read_csv(cfg.out_dir / "violations.csv").rows == violations_table(recomputed).rows);

    // Architecture mismatch is reported.
    RunConfig wide = cfg;
    wide.arch.features = 16;
    CHECK_THROWS_WITH(cmd_eval(wide, checkpoint), doctest::Contains("features"));
    // Normalization statistics are chosen at execution, whatever the checkpoint stored.
    RunConfig running = cfg;
    running.arch.eval_stats = NormStats::Running;
    running.out_dir = dir / "running";
    running.write_traces = false;
    CHECK(cmd_eval(running, checkpoint).records.size() == 9);

    const auto groups = cmd_baseline(cfg, "all", "all");
    CHECK(groups.size() == 4);
    for (const auto& label : {"p_persistent", "p_persistent_ca", "mis_random", "mis_random_ca"}) {
        CHECK(groups.count(label) == 1);
        CHECK(fs::exists(cfg.out_dir / ("baseline_" + std::string(label) + "_metrics.csv")));
    }
    auto mean_obj = [&](const std::string& label) {
        double s = 0.0;
        for (const auto& r : groups.at(label)) s += r.objective_fraction;
        return s / static_cast<double>(groups.at(label).size());
    };
    CHECK(mean_obj("mis_random_ca") >= mean_obj("mis_random"));
    CHECK_THROWS(cmd_baseline(cfg, "aloha", "all"));
    CHECK_THROWS(cmd_baseline(cfg, "all", "fancy"));
}

TEST_CASE("p-persistent on a conflict-free test set schedules everything successfully") {
    const auto dir = test::scratch_dir("matching");
    write_matching_dataset(dir / "data");
    RunConfig cfg = tiny_config(dir);
    const auto groups = cmd_baseline(cfg, "p_persistent", "naive");
    REQUIRE(groups.size() == 1);
    for (const auto& r : groups.at("p_persistent")) CHECK(r.objective_fraction == 1.0);
}

TEST_CASE("report: mean and std across runs, zero std for one run, explicit missing inputs") {
    const auto dir = test::scratch_dir("report");
    CHECK_THROWS_WITH(cmd_report(dir, dir / "out"), doctest::Contains("train_log.csv"));

    const std::vector<RequirementSetting> settings{{0.1, 0.05}};
    for (int run = 0; run < 3; ++run) {
        TrainLog log;
        for (std::size_t e = 1; e <= 6; ++e) {
            EpochRecord rec;
            rec.epoch = e;
            rec.mean_lagrangian = 1.0;
            HeldOutSummary h;
            h.delta = 0.1;
            h.mean_violation = 0.1 * run;  // constant per run
            h.objective_fraction = 0.2;
            rec.held_out = {h};
            log.epochs.push_back(rec);
        }
        const fs::path run_dir = dir / ("run" + std::to_string(run));
        write_csv(run_dir / "train_log.csv", training_table(log, settings));
        MetricsRecord m;
        m.graph_id = "g";
        m.delta = 0.1;
        m.total_transmissions = 10 + run;
        m.successful_transmissions = 8;
        m.violations = {{3, 0.05}};
        CsvTable mt = metrics_table({m});
        write_csv(run_dir / "eval_metrics.csv", mt);
        write_csv(run_dir / "violations.csv", violations_table({m}));
        if (run == 0) {
            MetricsRecord b;
            b.graph_id = "ALL";
            b.delta = 0.1;
            b.objective_fraction = 0.15;
            write_csv(run_dir / "baseline_mis_random_ca_metrics.csv", metrics_table({b}));
        }
    }
    const auto files = cmd_report(dir, dir / "out");
    CHECK(files.size() == 4);

    const auto fig2 = read_csv(dir / "out" / "violation_vs_epoch.csv");
    REQUIRE(fig2.rows.size() == 6);
    for (const auto& row : fig2.rows) {
        CHECK(parse_number(row[fig2.column("mean")]) == doctest::Approx(0.1));
        CHECK(parse_number(row[fig2.column("std")]) == doctest::Approx(std::sqrt(2.0 / 3.0) * 0.1));
        CHECK(row[fig2.column("runs")] == "3");
    }
    const auto fig3 = read_csv(dir / "out" / "objective_vs_epoch.csv");
    std::size_t baseline_rows = 0;
    for (const auto& row : fig3.rows) {
        if (row[0] == "sagnn") {
            CHECK(parse_number(row[fig3.column("mean")]) == doctest::Approx(0.2));
            CHECK(parse_number(row[fig3.column("std")]) < 1e-15);
        } else {
            CHECK(row[0] == "mis_random_ca");
            CHECK(parse_number(row[fig3.column("mean")]) == 0.15);
            ++baseline_rows;
        }
    }
    CHECK(baseline_rows == 6);
    const auto fig4 = read_csv(dir / "out" / "transmissions.csv");
    REQUIRE(fig4.rows.size() == 1);
    CHECK(parse_number(fig4.rows[0][fig4.column("total_tx_mean")]) == 11.0);
    CHECK(parse_number(fig4.rows[0][fig4.column("success_ratio")]) == doctest::Approx(24.0 / 33.0));
    const auto fig5 = read_csv(dir / "out" / "violation_levels.csv");
    CHECK(fig5.rows.size() == 3);

    // One run: std columns are zero.
    const auto single = cmd_report(dir / "run1", dir / "out1");
    for (const auto& row : read_csv(dir / "out1" / "violation_vs_epoch.csv").rows) CHECK(row[3] == "0");
}
