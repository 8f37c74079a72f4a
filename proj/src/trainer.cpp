#include "sagnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace sagnn {
namespace {

constexpr std::uint64_t kTrainStream = 11;

}  // namespace

void TrainConfig::validate() const {
    if (!(primal_lr > 0.0)) throw std::invalid_argument("train: primal_lr must be positive");
    if (dual_samples_per_graph < 1) throw std::invalid_argument("train: dual_samples_per_graph must be >= 1");
    if (!(lambda_max >= 0.0)) throw std::invalid_argument("train: lambda_max must be nonnegative");
    if (!(zero_mask_fraction >= 0.0 && zero_mask_fraction <= 1.0) ||
        !(max_mask_fraction >= 0.0 && max_mask_fraction <= 1.0) || zero_mask_fraction + max_mask_fraction > 1.0)
        throw std::invalid_argument("train: mask fractions must lie in [0,1] and sum to at most 1");
    if (eval_every < 1) throw std::invalid_argument("train: eval_every must be >= 1");
}

std::vector<double> sample_dual(std::size_t n_links, const TrainConfig& cfg, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, cfg.lambda_max);
    std::vector<double> lambda(n_links);
    for (double& v : lambda) v = cfg.lambda_max > 0.0 ? u(rng) : 0.0;

    const auto zeros = static_cast<std::size_t>(std::llround(cfg.zero_mask_fraction * static_cast<double>(n_links)));
    const auto maxed = static_cast<std::size_t>(std::llround(cfg.max_mask_fraction * static_cast<double>(n_links)));
    if (zeros + maxed == 0) return lambda;
    std::vector<std::size_t> ids(n_links);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    std::shuffle(ids.begin(), ids.end(), rng);
    for (std::size_t i = 0; i < std::min(zeros, n_links); ++i) lambda[ids[i]] = 0.0;
    for (std::size_t i = zeros; i < std::min(zeros + maxed, n_links); ++i) lambda[ids[i]] = cfg.lambda_max;
    return lambda;
}

bool is_eval_epoch(std::size_t epoch, const TrainConfig& cfg) {
    return epoch == 1 || epoch % cfg.eval_every == 0 || epoch == cfg.epochs;
}

std::vector<HeldOutSummary> evaluate_held_out(const PolicyParameters& params, const EvalBundle& bundle) {
    std::vector<HeldOutSummary> out;
    for (const auto& setting : bundle.settings) {
        HeldOutSummary summary;
        summary.delta = setting.delta;
        ExecConfig exec = bundle.exec;
        exec.resilience = setting.resilience;
        for (std::size_t g = 0; g < bundle.graphs.size(); ++g) {
            const auto& graph = bundle.graphs[g];
            const auto req = Requirements::uniform(graph.n_links(), setting.delta);
            const std::string id = g < bundle.graph_ids.size() ? bundle.graph_ids[g] : std::to_string(g);
            auto trace = execute(graph, params, req, exec, id);
            summary.mean_violation += trace.metrics.mean_violation;
            summary.objective_fraction += trace.metrics.objective_fraction;
            summary.per_graph.push_back(std::move(trace.metrics));
        }
        if (!bundle.graphs.empty()) {
            summary.mean_violation /= static_cast<double>(bundle.graphs.size());
            summary.objective_fraction /= static_cast<double>(bundle.graphs.size());
        }
        out.push_back(std::move(summary));
    }
    return out;
}

TrainResult train(const std::vector<ConflictGraph>& graphs, const TrainConfig& cfg, const ArchConfig& arch,
                  const EvalBundle* eval_bundle, const EpochCallback& on_epoch) {
    if (graphs.empty()) throw std::invalid_argument("train: empty training set");
    cfg.validate();
    arch.validate();

    TrainResult result;
    result.params = init_params(arch, cfg.seed);
    AdamState adam = AdamState::for_params(result.params);
    Rng rng = make_rng(cfg.seed, kTrainStream);

    std::vector<CsrMatrix> shifts;
    shifts.reserve(graphs.size());
    for (const auto& g : graphs) shifts.push_back(policy_shift(g, arch));

    std::vector<std::size_t> order(graphs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        EpochRecord record;
        record.epoch = epoch;
        double total = 0.0;
        for (std::size_t gi : order) {
            const ConflictGraph& graph = graphs[gi];
            // The requirement is constant in the parameters; train with delta = 0.
            const auto req = Requirements::uniform(graph.n_links(), 0.0);
            for (std::size_t s = 0; s < cfg.dual_samples_per_graph; ++s) {
                const auto lambda = sample_dual(graph.n_links(), cfg, rng);
                auto eval = lagrangian_value_and_grad(graph, shifts[gi], lambda, req, result.params);
                if (!std::isfinite(eval.value))
                    throw std::runtime_error("train: non-finite Lagrangian at epoch " + std::to_string(epoch) +
                                             ", graph " + std::to_string(gi));
                update_running_stats(result.params, eval.cache);
                adam_step(result.params, eval.grad, adam, cfg.primal_lr, Direction::Ascent);
                total += eval.value;
                ++record.updates;
            }
        }
        record.mean_lagrangian = total / static_cast<double>(record.updates);
        result.total_updates += record.updates;
        if (eval_bundle != nullptr && is_eval_epoch(epoch, cfg))
            record.held_out = evaluate_held_out(result.params, *eval_bundle);
        if (on_epoch) on_epoch(record, result.params);
        result.log.epochs.push_back(std::move(record));
    }
    return result;
}

}  // namespace sagnn
