#pragma once

// Experiment orchestration shared by the CLI and the acceptance suite:
// dataset generation, training, evaluation sweeps, baselines and the
// figure-feed report. All outputs are CSV/JSON with fixed column order and
// shortest round-trip number formatting, so identical inputs give identical bytes.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sagnn/baselines.hpp"
#include "sagnn/conflict_graph.hpp"
#include "sagnn/executor.hpp"
#include "sagnn/policy.hpp"
#include "sagnn/trainer.hpp"

namespace sagnn::harness {

namespace fs = std::filesystem;

/// Progress messages go here; nullptr (the default) silences them.
void set_log_stream(std::ostream* out);

struct DatasetSpec {
    std::size_t train_count = 10;
    std::size_t test_count = 50;
    std::size_t n_min = 200;
    std::size_t n_max = 300;
    double radius_factor = 1.2;
    std::uint64_t seed = 1;
};

struct RunConfig {
    DatasetSpec dataset;
    ArchConfig arch;
    TrainConfig train;
    ExecConfig exec;
    std::vector<RequirementSetting> requirements{{0.1, 0.05}, {0.125, 0.1}, {0.15, 0.1}};
    bool held_out_eval = true;          // evaluate on the test split while training
    std::size_t held_out_graphs = 0;    // 0 = all test graphs
    std::uint64_t baseline_seed = 0;
    double persistence_exponent = 1.0;
    bool write_traces = false;
    fs::path data_dir = "data";
    fs::path out_dir = "runs/default";

    void validate() const;
};

RunConfig load_run_config(const fs::path& path);
void save_run_config(const fs::path& path, const RunConfig& cfg);
std::string run_config_json(const RunConfig& cfg);

struct GraphEntry {
    std::string id;
    std::size_t n_nodes = 0;
    std::size_t n_links = 0;
    double mean_comm_degree = 0.0;
    double mean_conflict_degree = 0.0;
    std::size_t greedy_mis = 0;
    std::uint64_t seed = 0;
};

struct Manifest {
    DatasetSpec spec;
    std::vector<GraphEntry> train;
    std::vector<GraphEntry> test;
};

struct Dataset {
    std::vector<ConflictGraph> train;
    std::vector<ConflictGraph> test;
    Manifest manifest;
};

/// Writes <out>/{train,test}/<id>.{comm,conflict}.json and <out>/manifest.json.
Manifest cmd_gen_data(const DatasetSpec& spec, const fs::path& out_dir);
Dataset load_dataset(const fs::path& data_dir);

/// Writes <out>/train_log.csv, <out>/checkpoints/epoch_NNNN.params and <out>/policy.params.
TrainResult cmd_train(const RunConfig& cfg);

struct EvalOutput {
    std::vector<MetricsRecord> records;  // graph-major, then requirement
};

/// Writes <out>/eval_metrics.csv, <out>/violations.csv and, when enabled,
/// <out>/traces/<graph>_d<delta>_{schedules,lambda}.csv.
EvalOutput cmd_eval(const RunConfig& cfg, const fs::path& checkpoint);

/// kind: "all" | "p_persistent" | "mis_random"; variant: "all" | "naive" | "ca".
/// Writes <out>/baseline_<label>_metrics.csv for every selected variant.
std::map<std::string, std::vector<MetricsRecord>> cmd_baseline(const RunConfig& cfg, const std::string& kind,
                                                                const std::string& variant);

/// Reads training logs, evaluation and baseline metrics under `metrics_dir`
/// and writes the four figure-feed CSVs into `out_dir`.
std::vector<fs::path> cmd_report(const fs::path& metrics_dir, const fs::path& out_dir, std::size_t window = 5);

// CSV schema helpers, exposed for tests and the report.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;
};

std::string format_number(double v);
double parse_number(const std::string& s);
void write_csv(const fs::path& path, const CsvTable& table);
CsvTable read_csv(const fs::path& path);

CsvTable training_table(const TrainLog& log, const std::vector<RequirementSetting>& settings);
CsvTable metrics_table(const std::vector<MetricsRecord>& records);
CsvTable violations_table(const std::vector<MetricsRecord>& records);
CsvTable schedules_table(const ConflictGraph& graph, const std::vector<Schedule>& schedules);
CsvTable lambda_table(const std::vector<std::vector<double>>& trajectory);

/// Trailing running average; the first entries average what is available.
std::vector<double> running_average(const std::vector<double>& values, std::size_t window);

}  // namespace sagnn::harness
