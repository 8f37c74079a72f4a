#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sagnn/conflict_graph.hpp"
#include "sagnn/executor.hpp"
#include "sagnn/policy.hpp"
#include "sagnn/random.hpp"

namespace sagnn {

struct TrainConfig {
    std::size_t epochs = 100;
    double primal_lr = 5e-5;
    std::size_t dual_samples_per_graph = 10;
    double lambda_max = 2.0;
    double zero_mask_fraction = 0.0;
    double max_mask_fraction = 0.0;
    std::uint64_t seed = 0;
    std::size_t eval_every = 1;

    void validate() const;
};

/// Entries iid U[0, lambda_max]; then a random zero_mask_fraction of them set
/// to 0 and a disjoint max_mask_fraction set to lambda_max.
std::vector<double> sample_dual(std::size_t n_links, const TrainConfig& cfg, Rng& rng);

/// One requirement level with its resilience slack.
struct RequirementSetting {
    double delta = 0.1;
    double resilience = 0.0;
};

/// Held-out graphs the executor runs on during training.
struct EvalBundle {
    std::vector<ConflictGraph> graphs;
    std::vector<std::string> graph_ids;
    std::vector<RequirementSetting> settings;
    ExecConfig exec;  // resilience is taken from each setting
};

struct HeldOutSummary {
    double delta = 0.0;
    double mean_violation = 0.0;      // mean over graphs
    double objective_fraction = 0.0;  // mean over graphs
    std::vector<MetricsRecord> per_graph;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double mean_lagrangian = 0.0;
    std::size_t updates = 0;
    std::vector<HeldOutSummary> held_out;  // empty on epochs without evaluation
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
};

struct TrainResult {
    PolicyParameters params;
    TrainLog log;
    std::size_t total_updates = 0;
};

/// Called after every epoch with the epoch record and current parameters.
using EpochCallback = std::function<void(const EpochRecord&, const PolicyParameters&)>;

/// Evaluation runs at epoch 1, at every multiple of eval_every, and at the last epoch.
bool is_eval_epoch(std::size_t epoch, const TrainConfig& cfg);

/// Executes the policy on every held-out graph for every requirement setting.
std::vector<HeldOutSummary> evaluate_held_out(const PolicyParameters& params, const EvalBundle& bundle);

/// Primal ascent on the augmented Lagrangian with sampled dual vectors: one
/// Adam step per (graph, lambda sample), graphs shuffled every epoch.
TrainResult train(const std::vector<ConflictGraph>& graphs, const TrainConfig& cfg, const ArchConfig& arch,
                  const EvalBundle* eval_bundle = nullptr, const EpochCallback& on_epoch = {});

}  // namespace sagnn
