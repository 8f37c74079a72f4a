#include "sagnn/executor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sagnn {

void ExecConfig::validate(const Requirements& req) const {
    if (horizon < 1) throw std::invalid_argument("exec: horizon T must be >= 1");
    if (!(eta_dual >= 0.0)) throw std::invalid_argument("exec: eta_dual must be nonnegative");
    if (!(resilience >= 0.0)) throw std::invalid_argument("exec: resilience must be nonnegative");
    if (resilience > 0.0 && !req.delta.empty()) {
        const double min_delta = *std::min_element(req.delta.begin(), req.delta.end());
        if (!(resilience < min_delta))
            throw std::invalid_argument("exec: resilience must be smaller than every requirement");
    }
}

DualState dual_update(const DualState& state, std::span<const double> success, const Requirements& req,
                      double resilience) {
    const std::size_t n = state.lambda.size();
    if (success.size() != n || req.size() != n) throw std::invalid_argument("dual_update: length mismatch");
    DualState next{std::vector<double>(n), state.eta};
    for (std::size_t i = 0; i < n; ++i) {
        const double target = req.delta[i] - resilience;
        next.lambda[i] = std::max(0.0, state.lambda[i] - state.eta * (success[i] - target));
    }
    return next;
}

ExecTrace execute(const ConflictGraph& graph, const PolicyFn& policy, const Requirements& req,
                  const ExecConfig& cfg, std::string graph_id) {
    const std::size_t n = graph.n_links();
    if (req.size() != n) throw std::invalid_argument("execute: requirements length differs from K");
    cfg.validate(req);

    ExecTrace trace;
    trace.schedules.reserve(cfg.horizon);
    trace.lambda_trajectory.reserve(cfg.horizon + 1);
    DualState dual{std::vector<double>(n, 0.0), cfg.eta_dual};
    trace.lambda_trajectory.push_back(dual.lambda);

    for (std::size_t t = 0; t < cfg.horizon; ++t) {
        const std::vector<double> outputs = policy(dual.lambda);
        if (outputs.size() != n) throw std::runtime_error("execute: policy returned wrong length");
        Schedule s = threshold(outputs);
        const std::vector<double> success = cfg.dual_signal == DualSignal::Binary
                                                ? successful_transmissions(graph, s)
                                                : successful_transmissions(graph, outputs);
        dual = dual_update(dual, success, req, cfg.resilience);
        trace.schedules.push_back(std::move(s));
        trace.lambda_trajectory.push_back(dual.lambda);
    }
    const double delta = req.delta.empty() ? 0.0 : req.delta.front();
    trace.metrics = compute_metrics(graph, trace.schedules, req, std::move(graph_id), delta);
    return trace;
}

ExecTrace execute(const ConflictGraph& graph, const PolicyParameters& params, const Requirements& req,
                  const ExecConfig& cfg, std::string graph_id) {
    const CsrMatrix shift = policy_shift(graph, params.config);
    PolicyFn policy = [&](std::span<const double> lambda) {
        return forward(shift, lambda, params, Phase::Eval).outputs;
    };
    return execute(graph, policy, req, cfg, std::move(graph_id));
}

std::string to_string(DualSignal signal) { return signal == DualSignal::Binary ? "binary" : "relaxed"; }

DualSignal parse_dual_signal(const std::string& s) {
    if (s == "binary") return DualSignal::Binary;
    if (s == "relaxed") return DualSignal::Relaxed;
    throw std::invalid_argument("unknown dual signal '" + s + "' (expected binary|relaxed)");
}

}  // namespace sagnn
