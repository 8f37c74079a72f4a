#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sagnn/conflict_graph.hpp"
#include "sagnn/metrics.hpp"
#include "sagnn/policy.hpp"
#include "sagnn/scheduling.hpp"

namespace sagnn {

/// Which per-step success vector drives the dual update: the successes of the
/// thresholded schedule, or Phi (.) [1 - A Phi]_+ on the continuous output.
enum class DualSignal { Binary, Relaxed };

struct ExecConfig {
    std::size_t horizon = 200;  // T
    double eta_dual = 2.0;
    double resilience = 0.0;  // r: the dual update targets delta - r
    DualSignal dual_signal = DualSignal::Relaxed;

    void validate(const Requirements& req) const;
};

struct DualState {
    std::vector<double> lambda;
    double eta = 2.0;
};

/// lambda' = [lambda - eta (success - (delta - r))]_+
DualState dual_update(const DualState& state, std::span<const double> success, const Requirements& req,
                      double resilience);

struct ExecTrace {
    std::vector<Schedule> schedules;                   // T
    std::vector<std::vector<double>> lambda_trajectory;  // T + 1
    MetricsRecord metrics;
};

/// Maps the current dual vector to per-link outputs in [0, 1].
using PolicyFn = std::function<std::vector<double>(std::span<const double> lambda)>;

ExecTrace execute(const ConflictGraph& graph, const PolicyFn& policy, const Requirements& req,
                  const ExecConfig& cfg, std::string graph_id = {});

/// Runs the trained network in eval phase.
ExecTrace execute(const ConflictGraph& graph, const PolicyParameters& params, const Requirements& req,
                  const ExecConfig& cfg, std::string graph_id = {});

std::string to_string(DualSignal signal);
DualSignal parse_dual_signal(const std::string& s);

}  // namespace sagnn
